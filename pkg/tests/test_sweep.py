import math

import pytest

from satcvqkd.combined import CombinedChannel, ensemble_cm
from satcvqkd.config import (
    PRESETS,
    ConfigError,
    Scenario,
    SweepConfig,
    config_from_dict,
    load_config,
    load_preset,
    preset_text,
)
from satcvqkd.gaussian import DomainError, SqueezingSpec, lossy_cm
from satcvqkd.keyrate import DR_HOM, key_rate
from satcvqkd.sweep import (
    COLUMNS,
    SCHEMA,
    SweepResult,
    SweepRow,
    clamp_key,
    compare_onboard,
    grid_points,
    run_postselect_sweep,
    run_sweep,
    threshold_diagnostics,
)

SPEC_COLUMNS = (
    "scenario protocol r sigma_as sigma_sb chi zeta_th lambda_as L_as eta0_as lambda_sb L_sb "
    "eta0_sb loss_db_as loss_db_sb i_ab holevo key key_clamped p_s ps_times_k status"
).split()

DIRECT = {
    "scenario": "direct",
    "protocol": "rr-hom",
    "squeezing": {"r": {"start": 0.0, "stop": 1.5, "num": 4}},
    "channel": {"sigma_as": [0.0, 0.5, 1.0], "k1": 0.4, "k2": 0.64},
    "noise": {"chi": [0.0, 0.1]},
}


def small_postselect(estimator="quadrature", **extra):
    d = {
        "scenario": "direct",
        "protocol": "rr-hom",
        "squeezing": {"r": 1.5},
        "channel": {"sigma_as": 2.0, "sigma_sb": 0.5},
        "noise": {"chi": 0.15},
        "post_selection": {
            "zeta_th_fraction": {"start": 0.0, "stop": 0.8, "num": 5},
            "estimator": estimator,
            "mc_samples": 200_000,
            "seed": 42,
        },
    }
    d["post_selection"].update(extra)
    return config_from_dict(d)


class TestConfig:
    def test_grid_forms(self):
        cfg = config_from_dict(DIRECT)
        assert cfg.r == (0.0, 0.5, 1.0, 1.5)
        assert cfg.sigma_as == (0.0, 0.5, 1.0)
        assert cfg.chi == (0.0, 0.1)
        assert cfg.sigma_sb_for(1.0) == pytest.approx(0.256)

    def test_explicit_sigma_sb_wins(self):
        cfg = config_from_dict({**DIRECT, "channel": {"sigma_as": 22.0, "sigma_sb": 2.0}})
        assert cfg.sigma_sb_for(22.0) == 2.0

    @pytest.mark.parametrize(
        "patch",
        [
            {"protocol": "dr-het"},
            {"scenario": "orbit"},
            {"squeezing": {}},
            {"squeezing": {"r": []}},
            {"squeezing": {"r": -1.0}},
            {"squeezing": {"r": {"start": 0, "stop": 1}}},
            {"channel": {"sigma_as": 1.0, "k1": 2.0}},
            {"post_selection": {"zeta_th": [0.1], "estimator": "guess"}},
            {"scenario": "fixed", "channel": {"tau": [0.5, 1.5]}},
        ],
    )
    def test_invalid(self, patch):
        with pytest.raises(ConfigError):
            config_from_dict({**DIRECT, **patch})

    def test_load_file(self, tmp_path):
        p = tmp_path / "c.toml"
        p.write_text('scenario = "fixed"\n[squeezing]\nr = 1.0\n[channel]\ntau = [0.5, 0.9]\n[output]\npath = "x.csv"\n')
        cfg = load_config(p)
        assert cfg.scenario is Scenario.FIXED and cfg.tau == (0.5, 0.9) and cfg.output == "x.csv"

    def test_broken_toml(self, tmp_path):
        p = tmp_path / "c.toml"
        p.write_text("scenario = \n")
        with pytest.raises(ConfigError):
            load_config(p)

    @pytest.mark.parametrize("name", PRESETS)
    def test_presets_load(self, name):
        cfg = load_preset(name)
        assert isinstance(cfg, SweepConfig)
        assert preset_text(name).strip()

    def test_fig4_preset(self):
        cfg = load_preset("fig4")
        assert cfg.post_selection.relative and len(cfg.post_selection.zeta_th) == 20
        assert cfg.sigma_as == (22.0,) and cfg.sigma_sb == 2.0 and cfg.chi == (0.15,)

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            preset_text("fig9")

    def test_with_seed(self):
        assert small_postselect().with_seed(7).post_selection.seed == 7
        cfg = config_from_dict(DIRECT)
        assert cfg.with_seed(7) is cfg


class TestGrid:
    def test_row_count_and_order(self):
        cfg = config_from_dict(DIRECT)
        pts = grid_points(cfg)
        assert len(pts) == 4 * 3 * 2
        assert [p.index for p in pts] == list(range(len(pts)))
        # chi outermost, r innermost
        assert [p.chi for p in pts[:12]] == [0.0] * 12
        assert [p.r for p in pts[:4]] == [0.0, 0.5, 1.0, 1.5]

    def test_relative_thresholds(self):
        cfg = small_postselect()
        pts = grid_points(cfg)
        zmax = 1.0 - math.exp(-2.0)
        assert pts[-1].zeta_th == pytest.approx(0.8 * zmax)


class TestRunSweep:
    def test_columns(self):
        assert list(COLUMNS) == SPEC_COLUMNS

    def test_direct_rows_match_library(self):
        cfg = config_from_dict(DIRECT)
        res = run_sweep(cfg)
        assert len(res.rows) == 24
        for row in res.rows:
            ch = CombinedChannel.coupled(row.sigma_as, 0.4, 0.64)
            k = key_rate(ensemble_cm(ch, SqueezingSpec(row.r), row.chi)).key_rate
            assert row.key == pytest.approx(k, abs=1e-14)
            assert row.key_clamped >= 0.0 and row.key_clamped == clamp_key(row.key)
            assert row.p_s == 1.0 and row.status == "ok"
            assert row.loss_db_as == pytest.approx(ch.uplink.mean_loss_db())

    def test_fixed_scenario(self):
        cfg = config_from_dict(
            {"scenario": "fixed", "protocol": "dr-hom", "squeezing": {"r": [0.5, 1.0]}, "channel": {"tau": [0.3, 0.8]}}
        )
        res = run_sweep(cfg)
        assert len(res.rows) == 4
        for row, (tau, r) in zip(res.rows, [(0.3, 0.5), (0.3, 1.0), (0.8, 0.5), (0.8, 1.0)]):
            assert row.eta0_as == tau and row.r == r
            assert row.key == key_rate(lossy_cm(SqueezingSpec(r), tau), DR_HOM).key_rate
            assert row.loss_db_as == pytest.approx(-10 * math.log10(tau))

    def test_workers_do_not_change_output(self):
        cfg = config_from_dict(DIRECT)
        assert run_sweep(cfg, workers=2).to_csv() == run_sweep(cfg, workers=1).to_csv()

    def test_csv_layout(self, tmp_path):
        res = run_postselect_sweep(small_postselect())
        path = tmp_path / "out" / "x.csv"
        res.write_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == f"# schema={SCHEMA}"
        assert lines[1].split(",") == SPEC_COLUMNS
        body = [ln for ln in lines[2:] if not ln.startswith("#")]
        assert len(body) == 5
        assert lines[-3:] == ["# key_nondecreasing=true", "# ps_strictly_decreasing=true", "# rows_failed=0"]
        assert "np." not in path.read_text()
        assert res.column("zeta_th")[0] == 0.0

    def test_floor_rows_recorded(self):
        cfg = small_postselect(zeta_th_fraction=[0.0, 0.9999999], ps_floor=1e-3)
        rows = run_sweep(cfg).rows
        assert rows[0].status == "ok"
        assert rows[1].status == "ps_floor" and rows[1].key is None

    def test_mc_sweep_deterministic_and_seeded(self):
        cfg = small_postselect("montecarlo")
        a = run_sweep(cfg).to_csv()
        assert a == run_sweep(cfg).to_csv()
        assert a != run_sweep(cfg.with_seed(43)).to_csv()

    def test_mc_close_to_quadrature(self):
        q = run_sweep(small_postselect()).rows
        mc = run_sweep(small_postselect("montecarlo")).rows
        for rq, rm in zip(q, mc):
            assert rm.p_s == pytest.approx(rq.p_s, rel=0.05)

    def test_postselect_needs_section(self):
        with pytest.raises(DomainError):
            run_postselect_sweep(config_from_dict(DIRECT))


class TestDiagnostics:
    def row(self, r, z, p_s, key, status="ok"):
        return SweepRow("direct", "rr-hom", r, 1.0, 1.0, 0.0, z, key=key, p_s=p_s, status=status)

    def test_flags(self):
        rows = [self.row(1.0, 0.0, 1.0, 0.1), self.row(1.0, 0.1, 0.5, 0.2), self.row(2.0, 0.0, 1.0, 0.3), self.row(2.0, 0.1, 0.4, 0.2)]
        d = threshold_diagnostics(rows)
        assert d == {"ps_strictly_decreasing": True, "key_nondecreasing": False, "rows_failed": 0}

    def test_failed_rows_skipped(self):
        rows = [self.row(1.0, 0.0, 1.0, 0.1), self.row(1.0, 0.1, 0.0, None, "ps_floor")]
        assert threshold_diagnostics(rows)["rows_failed"] == 1


class TestOnboardComparison:
    def test_report(self):
        cfg = load_preset("onboard")
        rep = compare_onboard(cfg, n_direct=60)
        d = rep.as_dict()
        assert d["onboard_at_target_ps"]["p_s"] == pytest.approx(1e-3, rel=1e-8)
        assert d["direct_at_matched_key"]["key"] == pytest.approx(d["onboard_at_target_ps"]["key"], rel=1e-8)
        assert d["gain_at_matched_key"] > 1.0
        assert d["gain_vs_direct_best"] > 1.0
        assert rep.key_deviation == pytest.approx(d["onboard_at_target_ps"]["key"] / 0.83 - 1.0)

    def test_needs_onboard_scenario(self):
        with pytest.raises(DomainError):
            compare_onboard(config_from_dict(DIRECT))


def test_result_default_diagnostics_empty():
    assert SweepResult([]).to_csv().splitlines() == [f"# schema={SCHEMA}", ",".join(SPEC_COLUMNS)]
