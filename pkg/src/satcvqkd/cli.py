"""Command line interface: ``satcvqkd <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .combined import (
    CombinedChannel,
    Estimator,
    PostSelectionConfig,
    ensemble_cm,
    onboard_post_selected_cm,
    post_selected_cm,
)
from .config import PRESETS, ConfigError, Scenario, load_config, load_preset
from .fading import BeamWanderChannel
from .gaussian import SqueezingSpec, lossy_cm
from .keyrate import ProtocolSpec, key_rate
from .sweep import compare_onboard, run_postselect_sweep, run_sweep


class CLIError(Exception):
    pass


def _print_kv(pairs: dict, as_json: bool) -> None:
    if as_json:
        print(json.dumps(pairs, sort_keys=False))
        return
    width = max(len(k) for k in pairs)
    for k, v in pairs.items():
        print(f"{k:<{width}}  {v}")


def cmd_channel(args: argparse.Namespace) -> None:
    ch = BeamWanderChannel(args.beta, args.w, args.sigma)
    out = {
        "h": ch.h,
        "lambda": ch.lambda_shape,
        "L": ch.L_scale,
        "eta0": ch.eta0,
        "mean_transmittance": ch.moment(1.0),
        "mean_loss_db": ch.mean_loss_db(),
        "amplitude_loss_db": ch.amplitude_loss_db(),
    }
    _print_kv(out, args.json)


def _ps_from_args(args: argparse.Namespace) -> PostSelectionConfig:
    return PostSelectionConfig(
        args.zeta_th or 0.0, Estimator(args.estimator), args.mc_samples, args.seed
    )


def cmd_keyrate(args: argparse.Namespace) -> None:
    protocol = ProtocolSpec.parse(args.protocol)
    s = SqueezingSpec(args.r)
    scenario = Scenario(args.scenario)
    p_s = 1.0
    if scenario is Scenario.FIXED:
        if args.tau is None:
            raise CLIError("--tau is required for the fixed scenario")
        cm = lossy_cm(s, args.tau, args.chi)
    else:
        if args.sigma is None:
            raise CLIError("--sigma is required for fading scenarios")
        sigma_sb = args.sigma_sb if args.sigma_sb is not None else args.k1 * args.k2 * args.sigma
        ch = CombinedChannel.from_sigmas(args.sigma, sigma_sb, args.beta, args.w)
        if scenario is Scenario.ONBOARD:
            res = onboard_post_selected_cm(ch.uplink, ch.downlink, s, args.chi, _ps_from_args(args))
            cm, p_s = res.cm, res.p_s
        elif args.zeta_th is None:
            cm = ensemble_cm(ch, s, args.chi)
        else:
            res = post_selected_cm(ch, s, args.chi, _ps_from_args(args))
            cm, p_s = res.cm, res.p_s
    kr = key_rate(cm, protocol)
    out = {
        "protocol": protocol.name,
        "a": cm.a,
        "b": cm.b,
        "c": cm.c,
        "i_ab": kr.mutual_info,
        "holevo": kr.holevo,
        "key": kr.key_rate,
        "nu3": kr.nu3,
        "p_s": p_s,
    }
    _print_kv(out, args.json)


def _load(args: argparse.Namespace):
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    if getattr(args, "workers", None):
        cfg = replace(cfg, workers=args.workers)
    return cfg


def _out_path(args: argparse.Namespace, cfg) -> Path:
    out = args.out or cfg.output
    if out is None:
        raise CLIError("no output path: pass --out or set [output] path")
    return Path(out)


def cmd_sweep(args: argparse.Namespace) -> None:
    cfg = _load(args)
    out = _out_path(args, cfg)
    result = run_sweep(cfg)
    result.write_csv(out)
    print(f"wrote {len(result.rows)} rows to {out}")


def cmd_postselect(args: argparse.Namespace) -> None:
    cfg = _load(args)
    out = _out_path(args, cfg)
    result = run_postselect_sweep(cfg)
    result.write_csv(out)
    print(f"wrote {len(result.rows)} rows to {out}")
    for k, v in result.diagnostics.items():
        print(f"{k} = {v}")


def cmd_reproduce(args: argparse.Namespace) -> None:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    cfg = load_preset(args.figure)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.workers:
        cfg = replace(cfg, workers=args.workers)
    if cfg.post_selection is not None:
        result = run_postselect_sweep(cfg)
    else:
        result = run_sweep(cfg)
    csv_path = outdir / f"{args.figure}.csv"
    result.write_csv(csv_path)
    print(f"wrote {len(result.rows)} rows to {csv_path}")
    if cfg.scenario is Scenario.ONBOARD:
        report = compare_onboard(cfg).as_dict()
        json_path = outdir / "onboard.json"
        json_path.write_text(json.dumps(report, indent=2) + "\n")
        print(f"wrote {json_path}")
        _print_kv(
            {
                "onboard key at target P_s": report["onboard_at_target_ps"]["key"],
                "threshold for target P_s": report["onboard_at_target_ps"]["zeta_th"],
                "gain at matched key": report["gain_at_matched_key"],
                "gain vs best reflection": report["gain_vs_direct_best"],
            },
            False,
        )


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="satcvqkd",
        description="CV-QKD key rates over combined beam-wander fading channels.",
    )
    sub = p.add_subparsers(dest="cmd", required=True)

    c = sub.add_parser("channel", help="Print derived fading-channel parameters.")
    c.add_argument("--beta", type=float, default=1.0, help="aperture radius")
    c.add_argument("--w", type=float, default=1.0, help="beam-spot radius (unit of beta)")
    c.add_argument("--sigma", type=float, required=True, help="beam wander std dev (unit of beta)")
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_channel)

    k = sub.add_parser("keyrate", help="Key rate at a single operating point.")
    k.add_argument("--scenario", choices=[s.value for s in Scenario], default="direct")
    k.add_argument("--protocol", default="rr-hom", help="rr-hom | dr-hom | rr-het")
    k.add_argument("--r", type=float, required=True, help="squeezing parameter")
    k.add_argument("--tau", type=float, help="fixed-channel transmittance")
    k.add_argument("--sigma", type=float, help="uplink (or link A) wander std dev, units of beta")
    k.add_argument("--sigma-sb", type=float, help="downlink (or link B) wander std dev")
    k.add_argument("--k1", type=float, default=0.4)
    k.add_argument("--k2", type=float, default=0.64)
    k.add_argument("--beta", type=float, default=1.0)
    k.add_argument("--w", type=float, default=1.0)
    k.add_argument("--chi", type=float, default=0.0, help="excess noise, shot-noise units")
    k.add_argument("--zeta-th", type=float, help="post-selection threshold on eta*eta'")
    k.add_argument("--estimator", choices=[e.value for e in Estimator], default="quadrature")
    k.add_argument("--mc-samples", type=int, default=10_000_000)
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--json", action="store_true")
    k.set_defaults(func=cmd_keyrate)

    for name, func, text in (
        ("sweep", cmd_sweep, "Grid sweep from a TOML config."),
        ("postselect", cmd_postselect, "Threshold sweep from a TOML config."),
    ):
        s = sub.add_parser(name, help=text)
        s.add_argument("--config", required=True)
        s.add_argument("--out", help="CSV output path (overrides the config)")
        s.add_argument("--seed", type=int)
        s.add_argument("--workers", type=int)
        s.set_defaults(func=func)

    r = sub.add_parser("reproduce", help="Run a shipped figure configuration.")
    r.add_argument("figure", choices=PRESETS)
    r.add_argument("--out", default=".", help="output directory")
    r.add_argument("--seed", type=int)
    r.add_argument("--workers", type=int)
    r.set_defaults(func=cmd_reproduce)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (CLIError, ConfigError, ValueError, ArithmeticError, RuntimeError, OSError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        print("error: " + json.dumps(err), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
