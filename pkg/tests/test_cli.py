"""The blab command line: configs in, reports out, exit codes."""

import json

import pytest

from blab.cli import main
from blab.geom import disc


def write_cfg(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def test_metric_subcommand_runs(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"experiment": "metric-demo", "h": 0.02})
    code = main(["metric", cfg, "--out", str(tmp_path / "out")])
    out = capsys.readouterr().out
    assert code == 0
    assert "[PASS] slit_rho1_large" in out
    assert (tmp_path / "out" / "report.csv").exists()
    assert (tmp_path / "out" / "summary.json").exists()


def test_kernel_subcommand_runs_exhaustion(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {
        "experiment": "exhaustion", "h": 0.02,
        "shapes": {"target": disc(0, 1)},
        "basis_window": [0, 6], "depths": [0.2]})
    code = main(["kernel", cfg, "--out", str(tmp_path / "out")])
    assert code == 0
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["passed"] is True
    assert summary["experiment"] == "exhaustion"
    assert len(summary["rows"]) == 1


def test_overrides_take_effect(tmp_path):
    cfg = write_cfg(tmp_path, {"experiment": "metric-demo", "h": 0.05,
                               "seed": 1, "out_dir": str(tmp_path / "ignored")})
    out = tmp_path / "forced"
    code = main(["metric", cfg, "--h", "0.02", "--seed", "9", "--out", str(out),
                 "--threads", "2"])
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["metadata"]["h"] == 0.02
    assert summary["metadata"]["seed"] == 9
    assert summary["metadata"]["threads"] == 2


def test_invalid_config_exits_3(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"experiment": "metric-demo", "h": 0.02,
                               "surprise": 1})
    assert main(["metric", cfg]) == 3
    assert "unknown config keys" in capsys.readouterr().err


def test_malformed_json_exits_3(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert main(["metric", str(path)]) == 3


def test_wrong_tag_for_subcommand_exits_3(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"experiment": "metric-demo", "h": 0.02})
    assert main(["kernel", cfg]) == 3
    assert "accepts experiments" in capsys.readouterr().err


def test_runtime_config_error_exits_3(tmp_path):
    # passes static validation (delta > 8h) but under-resolves the annulus
    cfg = write_cfg(tmp_path, {
        "experiment": "nowhere-density", "h": 0.02,
        "shapes": {"target": disc(0, 1)},
        "basis_window": [6, 6], "delta": 0.4})
    assert main(["zeros", cfg, "--out", str(tmp_path / "out")]) == 3


def test_assertion_failure_exits_2(tmp_path, monkeypatch):
    import blab.lab as lab_mod

    cfg = write_cfg(tmp_path, {"experiment": "metric-demo", "h": 0.02})

    real = lab_mod.run_metric_demo

    def sabotaged(config):
        report = real(config)
        report.check("forced_failure", False, "injected for the exit-code test")
        return report

    monkeypatch.setitem(lab_mod.RUNNERS, "metric-demo", sabotaged)
    assert main(["metric", cfg, "--out", str(tmp_path / "out")]) == 2


def test_csv_floats_have_12_significant_digits(tmp_path):
    cfg = write_cfg(tmp_path, {"experiment": "metric-demo", "h": 0.02})
    out = tmp_path / "out"
    assert main(["metric", cfg, "--out", str(out)]) == 0
    rows = (out / "report.csv").read_text().splitlines()
    slit = rows[1].split(",")
    # rho1 of the slit pair carries full 12 significant digits
    assert len(slit[1].replace(".", "").replace("-", "").lstrip("0")) >= 11


def test_experiment_subcommand_accepts_any_tag(tmp_path):
    cfg = write_cfg(tmp_path, {"experiment": "metric-demo", "h": 0.02})
    assert main(["experiment", cfg, "--out", str(tmp_path / "out")]) == 0
