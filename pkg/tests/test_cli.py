"""CLI subcommands end to end, through the argparse entry point."""

import json
import os

import numpy as np
import pytest

from randadjust.cli import main


@pytest.fixture
def dataset_csv(tmp_path):
    gen = np.random.default_rng(0)
    n = 60
    a = gen.standard_normal(n)
    b = gen.standard_normal(n)
    t = (np.arange(n) % 2).astype(float)
    y = 2.0 + 1.5 * t + a - 0.5 * b + 0.2 * gen.standard_normal(n)
    lines = ["y,t,a,b"] + [f"{y[i]},{t[i]:.0f},{a[i]},{b[i]}" for i in range(n)]
    path = tmp_path / "exp.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


class TestSimulate:
    def test_writes_metrics_csv(self, tmp_path, capsys):
        config = {
            "dgp": {"n": 60, "design_dist": "normal", "noise_dist": "normal",
                    "pi1": 0.5, "seed": 5},
            "gammas": [0.2],
            "replicates": 20,
            "outer_seeds": 2,
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(config), encoding="utf-8")
        out_dir = tmp_path / "out"
        rc = main(["simulate", "--config", str(cfg_path), "--out", str(out_dir)])
        assert rc == 0
        lines = (out_dir / "metrics.csv").read_text().splitlines()
        assert lines[0].startswith("gamma,p,estimator")
        assert len(lines) == 1 + 2 * 5  # two estimators, five variance rows

    def test_env_seed_override_changes_results(self, tmp_path, monkeypatch):
        config = {
            "dgp": {"n": 60, "design_dist": "normal", "noise_dist": "normal",
                    "pi1": 0.5, "seed": 5},
            "gammas": [0.2],
            "replicates": 20,
            "outer_seeds": 1,
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(config), encoding="utf-8")
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        main(["simulate", "--config", str(cfg_path), "--out", str(out_a)])
        monkeypatch.setenv("RANDADJUST_SEED", "999")
        main(["simulate", "--config", str(cfg_path), "--out", str(out_b)])
        assert (out_a / "metrics.csv").read_text() != (out_b / "metrics.csv").read_text()

    def test_unknown_key_fails(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"dgp": {}, "gammas": [0.1], "bogus": 1}))
        rc = main(["simulate", "--config", str(cfg_path), "--out", str(tmp_path / "o")])
        assert rc == 2


class TestAnalyze:
    def test_report_printed(self, dataset_csv, capsys):
        rc = main(["analyze", "--data", dataset_csv, "--outcome", "y", "--treat", "t"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "tau_adj" in out
        assert "hc3" in out
        # the signal is strong: the adjusted estimate should be near 1.5
        line = next(ln for ln in out.splitlines() if ln.startswith("tau_adj "))
        assert abs(float(line.split("=")[1]) - 1.5) < 0.3

    def test_trim_flag(self, dataset_csv, capsys):
        rc = main(["analyze", "--data", dataset_csv, "--outcome", "y",
                   "--treat", "t", "--trim", "0.05,0.95"])
        assert rc == 0

    def test_missing_column_exit_code(self, dataset_csv):
        rc = main(["analyze", "--data", dataset_csv, "--outcome", "nope", "--treat", "t"])
        assert rc == 2


class TestDiagnose:
    def test_histogram_to_file(self, dataset_csv, tmp_path, capsys):
        out = tmp_path / "hist.csv"
        rc = main(["diagnose", "--data", dataset_csv, "--outcome", "y",
                   "--treat", "t", "--out", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "bin_left,bin_right,count"
        counts = [int(ln.split(",")[2]) for ln in lines[1:]]
        assert sum(counts) == 60
        printed = capsys.readouterr().out
        assert "kappa" in printed


class TestOracleCheck:
    def test_fast_suite_green(self, capsys):
        rc = main(["oracle-check", "--fast"])
        out = capsys.readouterr().out
        assert rc == 0
        assert out.splitlines()[0] == "check,passed,detail"
        assert "FAIL" not in out
