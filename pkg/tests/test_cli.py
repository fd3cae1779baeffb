import json
import math
import subprocess
import sys

import pytest

from satcvqkd.cli import build_parser, main
from satcvqkd.fading import BeamWanderChannel


def run_json(capsys, argv):
    assert main(argv) == 0
    return json.loads(capsys.readouterr().out)


class TestChannel:
    def test_json(self, capsys):
        out = run_json(capsys, ["channel", "--beta", "1", "--w", "1", "--sigma", "0.7", "--json"])
        ch = BeamWanderChannel(1.0, 1.0, 0.7)
        assert out["lambda"] == ch.lambda_shape
        assert out["L"] == ch.L_scale
        assert out["eta0"] == ch.eta0
        assert out["mean_loss_db"] == ch.mean_loss_db()

    def test_text(self, capsys):
        assert main(["channel", "--sigma", "2"]) == 0
        text = capsys.readouterr().out
        assert "mean_loss_db" in text and "lambda" in text


class TestKeyrate:
    def test_fixed_lossless(self, capsys):
        out = run_json(capsys, ["keyrate", "--scenario", "fixed", "--r", "1", "--tau", "1", "--json"])
        assert out["key"] == pytest.approx(math.log2(math.cosh(2.0)), abs=1e-9)
        assert out["protocol"] == "rr-hom" and out["p_s"] == 1.0

    def test_direct_post_selected(self, capsys):
        argv = ["keyrate", "--r", "1.5", "--sigma", "22", "--sigma-sb", "2", "--chi", "0.15", "--json"]
        ens = run_json(capsys, argv)
        ps = run_json(capsys, argv + ["--zeta-th", "0.6"])
        assert ps["p_s"] < 1e-3 and ps["key"] > ens["key"]

    def test_onboard(self, capsys):
        out = run_json(
            capsys,
            ["keyrate", "--scenario", "onboard", "--r", "1.5", "--sigma", "2", "--sigma-sb", "2", "--chi", "0.15", "--zeta-th", "0.8", "--json"],
        )
        assert 0.0 < out["p_s"] < 1e-3 and out["key"] > 0

    def test_montecarlo_seeded(self, capsys):
        argv = ["keyrate", "--r", "1", "--sigma", "2", "--zeta-th", "0.3", "--estimator", "montecarlo", "--mc-samples", "100000", "--seed", "3", "--json"]
        assert run_json(capsys, argv) == run_json(capsys, argv)

    @pytest.mark.parametrize(
        "argv",
        [
            ["keyrate", "--scenario", "fixed", "--r", "1"],
            ["keyrate", "--scenario", "fixed", "--r", "1", "--tau", "2"],
            ["keyrate", "--r", "1"],
            ["keyrate", "--r", "1", "--tau", "0.5", "--scenario", "fixed", "--protocol", "dr-het"],
            ["keyrate", "--r", "1", "--sigma", "22", "--sigma-sb", "2", "--zeta-th", "0.86"],
        ],
    )
    def test_errors_are_machine_readable(self, capsys, argv):
        assert main(argv) == 1
        err = capsys.readouterr().err.strip().splitlines()[-1]
        assert err.startswith("error: ")
        payload = json.loads(err[len("error: "):])
        assert set(payload) == {"error", "message"}


class TestFileCommands:
    CONFIG = """
scenario = "direct"
protocol = "rr-het"
[squeezing]
r = [0.5, 1.0]
[channel]
sigma_as = [0.7, 1.0]
k1 = 0.4
k2 = 0.64
[post_selection]
zeta_th_fraction = [0.0, 0.5]
"""

    def test_sweep(self, tmp_path, capsys):
        cfg = tmp_path / "c.toml"
        cfg.write_text(self.CONFIG)
        out = tmp_path / "o.csv"
        assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 2 + 8
        assert "wrote 8 rows" in capsys.readouterr().out

    def test_postselect_prints_diagnostics(self, tmp_path, capsys):
        cfg = tmp_path / "c.toml"
        cfg.write_text(self.CONFIG)
        out = tmp_path / "o.csv"
        assert main(["postselect", "--config", str(cfg), "--out", str(out), "--seed", "1"]) == 0
        assert "ps_strictly_decreasing = True" in capsys.readouterr().out
        assert out.read_text().rstrip().endswith("# rows_failed=0")

    def test_missing_output(self, tmp_path, capsys):
        cfg = tmp_path / "c.toml"
        cfg.write_text(self.CONFIG)
        assert main(["sweep", "--config", str(cfg)]) == 1
        assert "CLIError" in capsys.readouterr().err

    def test_missing_config(self, tmp_path, capsys):
        assert main(["sweep", "--config", str(tmp_path / "none.toml"), "--out", "x.csv"]) == 1
        assert "FileNotFoundError" in capsys.readouterr().err

    def test_reproduce_fig1(self, tmp_path):
        assert main(["reproduce", "fig1", "--out", str(tmp_path)]) == 0
        lines = (tmp_path / "fig1.csv").read_text().splitlines()
        assert len(lines) == 2 + 21 * 25 * 2


def test_parser_lists_figures():
    p = build_parser()
    with pytest.raises(SystemExit):
        p.parse_args(["reproduce", "fig7"])


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "satcvqkd.cli", "channel", "--sigma", "0.7", "--json"],
        capture_output=True, text=True, check=True,
    )
    assert json.loads(proc.stdout)["h"] == 1.0
