import json

import numpy as np
import pytest

from seasonal_voltage.errors import IntegrityError, StructuralError
from seasonal_voltage.reporting import (PipelineManifest, read_annual_profile, read_csv, read_load_profile,
                                        read_report_rows, read_wind_profile, render_markdown, write_annual_profile,
                                        write_csv, write_load_profile, write_ranking, write_report,
                                        write_wind_profile)
from seasonal_voltage.scanner import ViolationReport, rank_from_counts
from seasonal_voltage.wind import SEASONS


def test_wind_profile_round_trip(season_inputs, tmp_path):
    p = season_inputs.profiles["spring"]
    again = read_wind_profile(write_wind_profile(p, tmp_path / "w.json"))
    for name in ("mean", "normp", "netminv", "netmaxv", "minvp", "maxvp", "chosen_day", "actual_mean"):
        assert np.array_equal(getattr(again, name), getattr(p, name))
    assert (again.mp, again.mxwp, again.mnwp) == (p.mp, p.mxwp, p.mnwp)


def test_annual_and_load_round_trip(season_inputs, tmp_path):
    a = season_inputs.annual
    again = read_annual_profile(write_annual_profile(a, tmp_path / "a.json"))
    assert np.array_equal(again.values, a.values) and again.n_days == a.n_days
    lp = season_inputs.loads["fall"]
    back = read_load_profile(write_load_profile(lp, tmp_path / "l.json"))
    assert np.array_equal(back.percent, lp.percent) and back.peak_mw == lp.peak_mw


def test_wrong_schema_rejected(season_inputs, tmp_path):
    path = write_load_profile(season_inputs.loads["fall"], tmp_path / "l.json")
    with pytest.raises(StructuralError):
        read_wind_profile(path)


def test_writes_are_deterministic(season_inputs, tmp_path):
    a = write_wind_profile(season_inputs.profiles["winter"], tmp_path / "a.json")
    b = write_wind_profile(season_inputs.profiles["winter"], tmp_path / "b.json")
    assert a.read_bytes() == b.read_bytes()


def tiny_report():
    ids = np.array([1, 2, 3])
    counts = {(s, c, "mean"): np.array([0, k, 2 * k]) for k, s in enumerate(SEASONS) for c in ("relative", "absolute")}
    totals = {(s, "mean"): 48 for s in SEASONS}
    return ViolationReport(ids, SEASONS, ("relative", "absolute"), ("mean",), counts, totals,
                           {k: 0 for k in totals}, {"seed": 4})


def test_report_csv_round_trip(tmp_path):
    rows = read_report_rows(write_report(tiny_report(), tmp_path / "r.csv"))
    assert len(rows) == 3 * 4 * 2
    r = next(r for r in rows if r["bus"] == 3 and r["season"] == "fall" and r["criterion"] == "relative")
    assert r["count"] == 6 and r["total"] == 48 and r["fraction"] == pytest.approx(6 / 48)


def test_ranking_csv_blank_for_missing_case(tmp_path):
    ranking = rank_from_counts([1, 2], [3, 0], 10, [0, 4], 10)
    rows = read_csv(write_ranking(ranking, tmp_path / "k.csv"))
    # single terms: bus 2 has 1/0.4, bus 1 has 1/0.3
    assert [(r["bus"], r["group"]) for r in rows] == [("2", "case2"), ("1", "case1")]
    assert rows[0]["pv1"] == "" and rows[1]["alpha2"] == ""


def test_manifest_detects_tampering(tmp_path):
    out = write_csv(tmp_path / "x.csv", ["a"], [(1,)])
    m = PipelineManifest(tmp_path)
    m.record("stage", ["stage"], [], [out], 0.1)
    m.save()
    loaded = PipelineManifest.load(tmp_path)
    loaded.verify()
    assert loaded.stages["stage"]["outputs"] == {"x.csv": m.stages["stage"]["outputs"]["x.csv"]}
    out.write_text("a\n2\n")
    with pytest.raises(IntegrityError):
        loaded.verify()
    out.unlink()
    with pytest.raises(IntegrityError):
        loaded.verify()


def test_manifest_keeps_other_stages(tmp_path):
    a = write_csv(tmp_path / "a.csv", ["a"], [(1,)])
    m = PipelineManifest.open(tmp_path, {"numpy": np.__version__})
    m.record("one", [], [], [a], 0.0)
    m.save()
    m2 = PipelineManifest.open(tmp_path)
    m2.record("two", [], [a], [], 0.0)
    m2.save()
    doc = json.loads((tmp_path / "manifest.json").read_text())
    assert set(doc["stages"]) == {"one", "two"} and doc["versions"]["numpy"] == np.__version__


def test_markdown_without_violations():
    rows = [{"bus": 1, "season": s, "criterion": "relative", "mode": "mean", "count": 0, "total": 48}
            for s in SEASONS]
    text = render_markdown(rows, [])
    assert "no violations detected" in text
    assert "No relative-criterion violations" in text


def test_markdown_tables(tmp_path):
    rep = tiny_report()
    rows = read_report_rows(write_report(rep, tmp_path / "r.csv"))
    ranking = read_csv(write_ranking(rank_from_counts([1, 2, 3], [0, 5, 9], 10, [0, 1, 1], 10), tmp_path / "k.csv"))
    text = render_markdown(rows, ranking, rep.metadata)
    assert "| 3 | 0 | 2 | 4 | 6 |" in text
    # bus 2: 2/0.5 + 1/0.1 = 14; bus 3: 1/0.9 + 2/0.1
    assert "| 1 | 2 | 14 | both |" in text
