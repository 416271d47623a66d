import csv
import json

import pytest
import yaml

from fracdim.cli import main

BASE = {
    "experiment": "fbm-graph-dim",
    "domain": {"kind": "interval", "d": 1, "resolution": 1024},
    "replicates": 3,
    "scales": [3, 8],
}


@pytest.fixture
def config(tmp_path):
    def write(extra=None):
        path = tmp_path / "cfg.yaml"
        path.write_text(yaml.safe_dump({**BASE, **(extra or {})}))
        return str(path)

    return write


def test_pass_exit_code(config, tmp_path):
    out = tmp_path / "r.json"
    assert main(["run", config(), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["pass"] is True


def test_fail_exit_code(config, tmp_path):
    cfg = config({"tolerance_below": 0.0, "tolerance_above": 0.0})
    assert main(["run", cfg, "--out", str(tmp_path / "r.json")]) == 1


def test_inconclusive_exit_code(config, tmp_path, monkeypatch):
    from fracdim import dimension

    monkeypatch.setattr(dimension, "R2_THRESHOLD", 1.01)
    assert main(["run", config(), "--out", str(tmp_path / "r.json")]) == 2


def test_config_error_exit_code(config, capsys):
    assert main(["run", config({"alpha": 2.0})]) == 3
    assert "alpha" in capsys.readouterr().err


def test_missing_config(tmp_path):
    assert main(["run", str(tmp_path / "absent.yaml")]) == 3


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as info:
        main(["run"])
    assert info.value.code == 3


def test_flag_overrides(config, tmp_path):
    out = tmp_path / "r.csv"
    assert main(["run", config(), "--replicates", "5", "--seed", "4", "--alpha", "0.4", "--format", "csv", "--out", str(out)]) in (0, 1)
    rows = list(csv.reader(open(out)))
    assert len(rows) == 6
    assert float(rows[1][4]) == pytest.approx(1.6)


def test_stdout_when_no_out(config, capsys):
    assert main(["run", config()]) == 0
    data = json.loads(capsys.readouterr().out)
    assert len(data["replicates"]) == 3


def test_identical_runs_identical_bytes(config, tmp_path):
    cfg = config({"master_seed": 31})
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["run", cfg, "--out", str(a)])
    main(["run", cfg, "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_plot_data_command(config, tmp_path):
    rec = tmp_path / "r.json"
    main(["run", config(), "--out", str(rec)])
    out = tmp_path / "p.csv"
    assert main(["plot-data", str(rec), "--out", str(out)]) == 0
    rows = list(csv.reader(open(out)))
    assert rows[0] == ["scale", "logN", "fitted"]
    assert len(rows) == 1 + 3 * 6


def test_plot_data_bad_record(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert main(["plot-data", str(bad), "--out", str(tmp_path / "p.csv")]) == 3
