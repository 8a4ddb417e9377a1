import csv
import json

import numpy as np
import pytest
import yaml

from nucflex.cli import main
from nucflex.lookup import FlexibilityTable


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def small_config(tmp_path):
    doc = {
        "horizon_days": 6,
        "nuclide": {"lambda_I": 0.1033},
        "reactors": [{"id": "N1", "p_max": 1000, "initial_k_eff": 1.045},
                     {"id": "N2", "p_max": 1000, "initial_k_eff": 1.035}],
        "vre": {"wind_mw": 2000, "solar_mw": 800},
        "storage": {"power_mw": 500, "duration_h": 4, "efficiency": 0.85},
        "synthetic": {"seed": 3, "mean_demand_mw": 2200},
    }
    path = tmp_path / "small.yaml"
    path.write_text(yaml.safe_dump(doc))
    return path


def test_kinetics_down(tmp_path, capsys):
    out = tmp_path / "k.csv"
    assert main(["kinetics", "--ramp", "down", "--p0", "0.5", "--out", str(out)]) == 0
    rows = read_csv(out)
    defect = np.array([float(r["defect_pcm"]) for r in rows])
    i = int(defect.argmax())
    assert 0 < i < len(defect) - 1
    assert defect[-1] < defect[i]
    assert "peak defect" in capsys.readouterr().out


def test_kinetics_none_is_constant(tmp_path):
    out = tmp_path / "k.csv"
    assert main(["kinetics", "--ramp", "none", "--horizon", "10", "--out", str(out)]) == 0
    rows = read_csv(out)
    for col in ("power", "iodine", "xenon", "defect_pcm"):
        vals = np.array([float(r[col]) for r in rows])
        assert np.allclose(vals, vals[0], rtol=1e-9)


def test_kinetics_usage_errors(tmp_path):
    out = str(tmp_path / "k.csv")
    assert main(["kinetics", "--dt", "0.5", "--out", out]) == 1
    assert main(["kinetics", "--ramp", "sideways", "--out", out]) == 1
    assert main(["kinetics", "--ramp", "custom", "--out", out]) == 1
    assert main(["kinetics", "--set", "lambda_Q=1", "--out", out]) == 1
    assert main(["kinetics"]) == 1


def test_kinetics_custom_profile(tmp_path):
    out = tmp_path / "k.csv"
    assert main(["kinetics", "--ramp", "custom", "--points", "0:1,4:0.5,20:0.5,22:1",
                 "--horizon", "30", "--out", str(out)]) == 0
    power = [float(r["power"]) for r in read_csv(out)]
    assert power[0] == 1.0 and min(power) == pytest.approx(0.5)


def test_build_tables_single_point(tmp_path):
    out = tmp_path / "t.csv"
    assert main(["build-tables", "--margin-grid", "3000", "--p0-grid", "0.5", "--out", str(out)]) == 0
    assert len(FlexibilityTable.read(out)) == 1


def test_build_tables_small_grid_is_monotone(tmp_path):
    out, curve = tmp_path / "t.csv", tmp_path / "c.csv"
    assert main(["build-tables", "--margin-max", "5000", "--margin-step", "500", "--p0-step", "0.1",
                 "--curve", str(curve), "--out", str(out)]) == 0
    t = FlexibilityTable.read(out)
    t.check_invariants()
    assert len(t) == 11 and len(read_csv(curve)) == 11


def test_build_tables_errors(tmp_path):
    out = str(tmp_path / "t.csv")
    assert main(["build-tables", "--margin-grid", "300,200", "--out", out]) == 2
    assert main(["build-tables", "--margin-grid", "1,x", "--out", out]) == 1
    assert main(["build-tables", "--margin-step", "0", "--out", out]) == 2


def test_dispatch_small_and_report(tmp_path, small_config, capsys):
    out = tmp_path / "run"
    assert main(["dispatch", "--config", str(small_config), "--mode", "1", "--mode", "2",
                 "--mode", "3", "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "NSE (%)" in printed and "Mode-3" in printed
    summary = read_csv(out / "summary.csv")
    assert [r["scenario"] for r in summary] == ["Mode-1", "Mode-2", "Mode-3"]
    curt = [float(r["curtailment_pct"]) for r in summary]
    assert curt[0] >= curt[1] >= curt[2] and curt[0] > curt[2]
    manifest = json.loads((out / "mode-2" / "manifest.json").read_text())
    assert manifest["seed"] == 3 and manifest["windows"] == 2 and manifest["data"] == "synthetic"

    rep = tmp_path / "rep"
    dirs = [str(out / f"mode-{m}") for m in (1, 2, 3)]
    assert main(["report", *dirs, "--out", str(rep)]) == 0
    header = next(csv.reader(open(rep / "metrics.csv")))
    assert header == ["metric", "mode-1", "mode-2", "mode-3"]
    alpha = read_csv(rep / "alpha.csv")
    assert len(alpha) == 2 and "mode-3:N2" in alpha[0]

    single = tmp_path / "single"
    assert main(["report", dirs[0], "--out", str(single)]) == 0
    got = {r["metric"]: r["mode-1"] for r in read_csv(single / "metrics.csv")}
    src = {r["metric"]: r["value"] for r in read_csv(out / "mode-1" / "metrics.csv")}
    assert got.keys() == src.keys()
    assert all(float(got[k]) == float(src[k]) for k in src)


def test_report_mismatched_horizons(tmp_path, small_config):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["dispatch", "--config", str(small_config), "--mode", "2", "--out", str(a)]) == 0
    assert main(["dispatch", "--config", str(small_config), "--mode", "2", "--days", "3",
                 "--out", str(b)]) == 0
    assert main(["report", str(a), str(b), "--out", str(tmp_path / "r")]) == 2
    assert main(["report", str(tmp_path / "nope"), "--out", str(tmp_path / "r")]) == 2


def test_dispatch_missing_config(tmp_path):
    assert main(["dispatch", "--config", str(tmp_path / "none.yaml"), "--out", str(tmp_path)]) == 1


def test_dispatch_bad_config_is_data_error(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("mode: 2\nsurprise: 1\n")
    assert main(["dispatch", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2


@pytest.mark.slow
def test_dispatch_preset_modes(tmp_path, capsys):
    one, three = tmp_path / "m1", tmp_path / "m3"
    assert main(["dispatch", "--mode", "1", "--synthetic", "7", "--days", "30", "--out", str(one)]) == 0
    assert "Mode-1" in capsys.readouterr().out
    assert main(["dispatch", "--mode", "3", "--synthetic", "7", "--days", "30", "--out", str(three)]) == 0
    curt = lambda d: {r["metric"]: float(r["value"]) for r in read_csv(d / "metrics.csv")}["curtailment_pct"]
    assert curt(three) <= curt(one)


def test_preset_dir_override(tmp_path, monkeypatch):
    monkeypatch.setenv("NUCFLEX_PRESET_DIR", str(tmp_path))
    assert main(["dispatch", "--out", str(tmp_path / "o")]) == 2
