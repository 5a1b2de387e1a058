import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seasonal_voltage.errors import CoverageError, DegenerateDataError, RangeError
from seasonal_voltage.ingest import SECTORS, SLOTS_PER_DAY, MonthlyEnergyTable
from seasonal_voltage.load import (LoadRatioSet, SectorEnergy, SectorShape, annual_load_profile,
                                   build_load_profiles, compose_system_load, default_shapes, extend_ci_seasons,
                                   read_shapes, scale_residential, scale_summer_ci, seasonal_daily_energy,
                                   write_shapes)
from seasonal_voltage.synthetic import make_default_shapes, synthetic_demand_table
from seasonal_voltage.wind import SEASONS

FLAT = np.ones(SLOTS_PER_DAY)


def shape(sector, season, values=FLAT):
    return SectorShape(sector, season, values)


def test_flat_residential():
    mw = scale_residential(shape("residential", "winter"), SectorEnergy("residential", "winter", 240.0))
    assert np.allclose(mw, 10.0)


def test_residential_peak_with_12h_area():
    v = np.full(SLOTS_PER_DAY, 23.0 / 47.0)
    v[0] = 1.0  # sum 24, so the area is 12 h
    assert shape("residential", "fall", v).area == pytest.approx(12.0)
    mw = scale_residential(shape("residential", "fall", v), SectorEnergy("residential", "fall", 120.0))
    assert mw[0] == pytest.approx(10.0)


def test_flat_commercial_and_symmetry():
    c, i = scale_summer_ci(shape("commercial", "summer"), shape("industrial", "summer"),
                           SectorEnergy("commercial", "summer", 480.0), SectorEnergy("industrial", "summer", 480.0))
    assert np.allclose(c, 20.0)
    assert np.array_equal(c, i)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.05, 1.0), min_size=SLOTS_PER_DAY, max_size=SLOTS_PER_DAY), st.floats(1.0, 1e6))
def test_energy_identity(values, mwh):
    v = np.array(values)
    v = v / v.max()
    mw = scale_residential(shape("residential", "spring", v), SectorEnergy("residential", "spring", mwh))
    assert mw.sum() * 0.5 == pytest.approx(mwh, rel=1e-9)


def test_shape_must_peak_at_one():
    with pytest.raises(RangeError):
        shape("residential", "winter", FLAT * 0.5)


def test_lr_equal_gives_identical_seasons():
    com, ind = extend_ci_seasons(FLAT * 12, FLAT * 3, LoadRatioSet.uniform(0.3))
    for s in SEASONS:
        assert np.array_equal(com[s], FLAT * 12) and np.array_equal(ind[s], FLAT * 3)


def test_lr_winter_example():
    ratios = LoadRatioSet({"summer": 0.2, "spring": 0.2, "winter": 0.5, "fall": 0.2})
    com, _ = extend_ci_seasons(FLAT * 12.0, FLAT, ratios)
    assert np.allclose(com["winter"], 15.0)


def test_numbered_season_index():
    ratios = LoadRatioSet({"summer": 0.1, "spring": 0.2, "winter": 0.3, "fall": 0.4})
    assert [ratios.by_index(k) for k in (1, 2, 3, 4)] == [0.1, 0.2, 0.3, 0.4]


def test_extension_keeps_argmax():
    base = np.linspace(0.2, 1.0, SLOTS_PER_DAY) ** 2
    com, _ = extend_ci_seasons(base, base, LoadRatioSet({"summer": 0.2, "spring": 0.0, "winter": 0.9, "fall": 0.4}))
    assert len({int(np.argmax(com[s])) for s in SEASONS}) == 1


def test_compose_peak_is_100():
    r = {"winter": np.linspace(1, 5, SLOTS_PER_DAY)}
    out = compose_system_load(r, {"winter": FLAT}, {"winter": FLAT * 2})["winter"]
    assert out.percent.max() == 100.0
    assert np.allclose(out.percent, 100 * out.total_mw / out.peak_mw)


def test_compose_all_zero():
    with pytest.raises(DegenerateDataError):
        compose_system_load({"fall": FLAT * 0}, {"fall": FLAT * 0}, {"fall": FLAT * 0})


@pytest.fixture(scope="module")
def bundled():
    return build_load_profiles(synthetic_demand_table(seed=1), default_shapes())


def test_bundled_peaks_in_business_hours(bundled):
    for p in bundled.values():
        assert p.percent.max() == 100.0
        assert 10.0 <= (p.peak_slot - 1) / 2 <= 17.0


def test_bundled_winter_peak_above_summer(bundled):
    assert bundled["winter"].peak_mw > bundled["summer"].peak_mw


def test_uniform_energy_rescaling():
    table = synthetic_demand_table(seed=1)
    scaled = MonthlyEnergyTable(tuple((y, m, s, e * 3.0) for y, m, s, e in table.rows))
    a = build_load_profiles(table, default_shapes())
    b = build_load_profiles(scaled, default_shapes())
    for s in SEASONS:
        assert np.allclose(a[s].percent, b[s].percent, rtol=1e-12)
        assert b[s].peak_mw == pytest.approx(3.0 * a[s].peak_mw)


def test_missing_industrial_shape_named():
    shapes = {k: v for k, v in default_shapes().items() if k[0] != "industrial"}
    with pytest.raises(CoverageError, match="industrial"):
        build_load_profiles(synthetic_demand_table(seed=1), shapes)


def test_seasonal_daily_energy_definition():
    rows = [(2010, m, s, 31.0 * 100 if m in (1, 12) else 28.0 * 100) for m in range(1, 13) for s in SECTORS]
    table = MonthlyEnergyTable(tuple(sorted(rows)))
    # winter of 2010: Jan (31 d), Feb (28 d), Dec (31 d), each at 100 MWh/day
    assert seasonal_daily_energy(table, "residential", "winter").mwh == pytest.approx(
        (3100 + 2800 + 3100) / 90)


def test_annual_profile_is_mean_of_seasons(bundled):
    annual = annual_load_profile(bundled)
    mean_total = np.mean([bundled[s].total_mw for s in SEASONS], axis=0)
    assert np.allclose(annual.total_mw, mean_total)
    assert annual.percent.max() == 100.0


def test_shapes_round_trip(tmp_path):
    write_shapes(make_default_shapes(), tmp_path / "s.csv")
    again = read_shapes(tmp_path / "s.csv")
    for k, v in default_shapes().items():
        assert np.allclose(again[k].values, v.values, rtol=1e-15)
