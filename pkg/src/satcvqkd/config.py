"""Sweep configuration files.

Configs are TOML. Grids may be given as a scalar, a list, or a table
``{start = .., stop = .., num = ..}`` (inclusive linspace). Example::

    scenario = "direct"            # fixed | direct | onboard
    protocol = "rr-hom"            # rr-hom | dr-hom | rr-het

    [squeezing]
    r = {start = 0.0, stop = 2.0, num = 21}   # two-mode squeezing parameter

    [channel]
    beta = 1.0                     # aperture radius (length unit)
    W = 1.0                        # beam-spot radius (same unit as beta)
    sigma_as = [0.0, 0.35, 0.7]    # uplink beam wander std dev, units of beta
    k1 = 0.4                       # sigma_sb = k1 * k2 * sigma_as ...
    k2 = 0.64
    # sigma_sb = 2.0               # ... unless given explicitly (units of beta)
    # tau = [0.5, 0.9]             # fixed scenario only: transmittance grid

    [noise]
    chi = [0.0, 0.15]              # excess noise at B, shot-noise units

    [post_selection]               # optional
    zeta_th_fraction = {start = 0.0, stop = 0.95, num = 20}  # of eta0 * eta0'
    # zeta_th = [0.0, 0.1]         # absolute thresholds instead
    estimator = "quadrature"       # quadrature | montecarlo
    mc_samples = 10000000
    seed = 42

    [comparison]                   # optional, on-board vs reflection report
    target_ps = 1e-3
    direct_sigma_as = 22.0         # units of beta
    direct_sigma_sb = 2.0          # units of beta

    [output]
    path = "out.csv"
"""

from __future__ import annotations

import enum
import sys
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .combined import DEFAULT_MC_SAMPLES, DEFAULT_PS_FLOOR, Estimator
from .gaussian import DomainError
from .keyrate import ProtocolSpec

PRESETS = ("fig1", "fig2", "fig3", "fig4", "fig5", "onboard")


class ConfigError(ValueError):
    pass


class Scenario(enum.Enum):
    FIXED = "fixed"
    DIRECT = "direct"
    ONBOARD = "onboard"


@dataclass(frozen=True)
class PostSelectionGrid:
    zeta_th: tuple[float, ...]
    # thresholds are fractions of eta0 * eta0' rather than absolute values
    relative: bool = False
    estimator: Estimator = Estimator.QUADRATURE
    mc_samples: int = DEFAULT_MC_SAMPLES
    seed: int = 0
    ps_floor: float = DEFAULT_PS_FLOOR


@dataclass(frozen=True)
class ComparisonSpec:
    target_ps: float = 1e-3
    direct_sigma_as: float = 22.0
    direct_sigma_sb: float = 2.0
    reference_zeta_th: float = 0.8


@dataclass(frozen=True)
class SweepConfig:
    scenario: Scenario = Scenario.DIRECT
    protocol: ProtocolSpec = field(default_factory=lambda: ProtocolSpec.parse("rr-hom"))
    r: tuple[float, ...] = (1.0,)
    sigma_as: tuple[float, ...] = (0.0,)
    tau: tuple[float, ...] = (1.0,)
    k1: float = 1.0
    k2: float = 1.0
    sigma_sb: float | None = None
    beta: float = 1.0
    W: float = 1.0
    chi: tuple[float, ...] = (0.0,)
    post_selection: PostSelectionGrid | None = None
    comparison: ComparisonSpec | None = None
    output: str | None = None
    workers: int = 1

    def __post_init__(self) -> None:
        for name in ("r", "chi"):
            if len(getattr(self, name)) == 0:
                raise ConfigError(f"grid {name!r} is empty")
        if self.scenario is Scenario.FIXED:
            if not self.tau:
                raise ConfigError("fixed scenario needs a non-empty tau grid")
            if any(not 0.0 <= t <= 1.0 for t in self.tau):
                raise ConfigError("tau values must lie in [0, 1]")
        elif not self.sigma_as:
            raise ConfigError("grid 'sigma_as' is empty")
        if any(x < 0 for x in self.r + self.sigma_as + self.chi):
            raise ConfigError("r, sigma_as and chi must be non-negative")
        if self.sigma_sb is not None and self.sigma_sb < 0:
            raise ConfigError("sigma_sb must be non-negative")
        if not 0.0 <= self.k1 <= 1.0 or self.k2 < 0.0:
            raise ConfigError("need 0 <= k1 <= 1 and k2 >= 0")
        if self.post_selection is not None and not self.post_selection.zeta_th:
            raise ConfigError("post_selection.zeta_th grid is empty")

    def sigma_sb_for(self, sigma_as: float) -> float:
        if self.sigma_sb is not None:
            return self.sigma_sb
        return self.k1 * self.k2 * sigma_as

    def with_seed(self, seed: int) -> "SweepConfig":
        if self.post_selection is None:
            return self
        return replace(self, post_selection=replace(self.post_selection, seed=seed))


def _grid(value: Any, name: str) -> tuple[float, ...]:
    if value is None:
        raise ConfigError(f"missing grid {name!r}")
    if isinstance(value, dict):
        try:
            start, stop, num = float(value["start"]), float(value["stop"]), int(value["num"])
        except KeyError as exc:
            raise ConfigError(f"grid {name!r} needs start, stop and num") from exc
        if num < 1:
            raise ConfigError(f"grid {name!r} must have num >= 1")
        return tuple(float(x) for x in np.linspace(start, stop, num))
    if isinstance(value, (list, tuple)):
        return tuple(float(x) for x in value)
    return (float(value),)


def config_from_dict(data: dict[str, Any]) -> SweepConfig:
    try:
        scenario = Scenario(data.get("scenario", "direct"))
        protocol = ProtocolSpec.parse(data.get("protocol", "rr-hom"))
    except (ValueError, DomainError) as exc:
        raise ConfigError(str(exc)) from exc
    sq = data.get("squeezing", {})
    chan = data.get("channel", {})
    noise = data.get("noise", {})

    ps = None
    if "post_selection" in data:
        p = data["post_selection"]
        if "zeta_th_fraction" in p:
            zeta, relative = _grid(p["zeta_th_fraction"], "zeta_th_fraction"), True
        else:
            zeta, relative = _grid(p.get("zeta_th"), "zeta_th"), False
        try:
            estimator = Estimator(p.get("estimator", "quadrature"))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        ps = PostSelectionGrid(
            zeta,
            relative,
            estimator,
            int(p.get("mc_samples", DEFAULT_MC_SAMPLES)),
            int(p.get("seed", 0)),
            float(p.get("ps_floor", DEFAULT_PS_FLOOR)),
        )

    comparison = None
    if "comparison" in data:
        c = data["comparison"]
        comparison = ComparisonSpec(
            float(c.get("target_ps", 1e-3)),
            float(c.get("direct_sigma_as", 22.0)),
            float(c.get("direct_sigma_sb", 2.0)),
            float(c.get("reference_zeta_th", 0.8)),
        )

    sigma_sb = chan.get("sigma_sb")
    return SweepConfig(
        scenario=scenario,
        protocol=protocol,
        r=_grid(sq.get("r"), "r"),
        sigma_as=_grid(chan.get("sigma_as", 0.0), "sigma_as"),
        tau=_grid(chan.get("tau", 1.0), "tau"),
        k1=float(chan.get("k1", 1.0)),
        k2=float(chan.get("k2", 1.0)),
        sigma_sb=None if sigma_sb is None else float(sigma_sb),
        beta=float(chan.get("beta", 1.0)),
        W=float(chan.get("W", 1.0)),
        chi=_grid(noise.get("chi", 0.0), "chi"),
        post_selection=ps,
        comparison=comparison,
        output=data.get("output", {}).get("path"),
        workers=int(data.get("workers", 1)),
    )


def load_config(path: str | Path) -> SweepConfig:
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(data)


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return resources.files("satcvqkd.configs").joinpath(f"{name}.toml").read_text()


def load_preset(name: str) -> SweepConfig:
    return config_from_dict(tomllib.loads(preset_text(name)))
