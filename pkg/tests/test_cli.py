import json
import subprocess
import sys

import pytest

from seasonal_voltage import __version__
from seasonal_voltage.cli import main
from seasonal_voltage.reporting import PipelineManifest, read_csv

from conftest import write_csv


def test_version(capsys):
    with pytest.raises(SystemExit) as err:
        main(["--version"])
    assert err.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_missing_input_file(tmp_path):
    assert main(["--out", str(tmp_path), "build-wind", "--wind", str(tmp_path / "nope.csv")]) == 2


def test_malformed_input_exit_code(tmp_path, capsys):
    bad = write_csv(tmp_path / "w.csv", ["timestamp", "value"], [("yesterday", 1.0)])
    assert main(["--out", str(tmp_path), "build-wind", "--wind", str(bad)]) == 2
    assert "w.csv:2:" in capsys.readouterr().err


def test_scan_without_profiles(tmp_path):
    assert main(["--out", str(tmp_path), "scan"]) != 0


def test_bad_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text("[1, 2]")
    assert main(["--config", str(cfg), "--out", str(tmp_path), "sample-data"]) == 2


def test_report_detects_tampering(tmp_path):
    out = tmp_path / "o"
    assert main(["--out", str(out), "sample-data"]) == 0
    (out / "inputs" / "demand.csv").write_text("tampered\n")
    m = PipelineManifest.load(out)
    m.stages["scan"] = {"outputs": {}}
    m.save()
    assert main(["--out", str(out), "report"]) == 4


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    out = tmp_path_factory.mktemp("pipeline")
    o = ["--out", str(out)]
    inp = out / "inputs"
    assert main(o + ["sample-data"]) == 0
    assert main(o + ["build-wind", "--wind", str(inp / "wind_train.csv"), "--speed", str(inp / "wind_speed.csv")]) == 0
    assert main(o + ["validate-wind", "--test", str(inp / "wind_test.csv")]) == 0
    assert main(o + ["build-load", "--demand", str(inp / "demand.csv")]) == 0
    cfg = out / "scan.json"
    cfg.write_text(json.dumps({"selections": 1, "modes": "mean"}))
    assert main(["--config", str(cfg), "--seed", "5"] + o + ["scan", "--approach", "both"]) == 0
    return out


def test_pipeline_outputs(pipeline):
    for rel in ("wind/profile_summer.json", "wind/annual_profile.json", "validation/outlier_summary.csv",
                "load/profile_winter.json", "scan/report_season_focused.csv", "scan/report_season_independent.csv",
                "scan/ranking.csv", "scan/comparison.csv", "scan/plot_annual_violations.csv"):
        assert (pipeline / rel).exists(), rel


def test_pipeline_config_applied(pipeline):
    meta = json.loads((pipeline / "scan" / "metadata_season_focused.json").read_text())
    assert meta["selections"] == 1 and meta["seed"] == 5
    assert meta["totals"] == {f"{s}/mean": 48 for s in ("fall", "spring", "summer", "winter")}
    assert set(meta["profiles"]) >= {"profile_winter.json", "annual_profile.json"}


def test_pipeline_manifest(pipeline):
    m = PipelineManifest.load(pipeline)
    assert set(m.stages) == {"sample-data", "build-wind", "validate-wind", "build-load", "scan"}
    assert m.stages["scan"]["args"][-2:] == ["--approach", "both"]
    m.verify()


def test_report_markdown(pipeline, tmp_path):
    target = tmp_path / "summary.md"
    assert main(["--out", str(pipeline), "report", "--output", str(target), "--top", "3"]) == 0
    text = target.read_text()
    assert text.startswith("# Seasonal voltage violation summary")
    assert "Approach comparison" in text
    ranking = read_csv(pipeline / "scan" / "ranking.csv")
    if ranking:
        assert f"| 1 | {ranking[0]['bus']} |" in text


def test_module_entry_point(tmp_path):
    run = subprocess.run([sys.executable, "-m", "seasonal_voltage", "--out", str(tmp_path), "sample-data"],
                         capture_output=True, text=True)
    assert run.returncode == 0, run.stderr
    assert (tmp_path / "inputs" / "wind_train.csv").exists()
