from datetime import date, timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seasonal_voltage.errors import (ArgumentError, DegenerateDataError, EmptyInputError, InsufficientDataError,
                                     RangeError)
from seasonal_voltage.ingest import SLOTS_PER_DAY, HalfHourlySeries
from seasonal_voltage.synthetic import synthetic_wind_power
from seasonal_voltage.wind import (SEASONS, NormalizedDayMatrix, NormativeSeason, TurbineCurve,
                                   build_annual_profile, build_normative_day, build_normative_season,
                                   build_seasonal_profiles, detect_outliers, fit_weibull, normalize_days, season_of,
                                   speed_to_power, validate_holdout)


def days_of(year):
    d, out = date(year, 1, 1), []
    while d.year == year:
        out.append(d)
        d += timedelta(days=1)
    return out


def season_matrix(year, season, fill):
    """Normalized matrix holding only ``season``'s days of ``year``.

    ``fill(i, h)`` gives the value of day ``i`` (day-of-season order), slot ``h``.
    """
    dates = [d for d in days_of(year) if season_of(d) == season and not (d.month == 2 and d.day == 29)]
    vals = np.array([[fill(i, h) for h in range(SLOTS_PER_DAY)] for i in range(len(dates))], dtype=float)
    return NormalizedDayMatrix(tuple(dates), vals, np.ones(len(dates)))


# -- normalization -----------------------------------------------------------


def test_normalize_divides_by_first_slot():
    day = np.full(SLOTS_PER_DAY, 70.0)
    day[:3] = [100.0, 50.0, 200.0]
    m = normalize_days(HalfHourlySeries([date(2010, 1, 1)], day))
    assert m.values[0, :3].tolist() == [1.0, 0.5, 2.0]
    assert m.reference[0] == 100.0


def test_zero_reference_excluded():
    vals = np.vstack([np.full(SLOTS_PER_DAY, 70.0), np.r_[0.0, np.full(SLOTS_PER_DAY - 1, 5.0)]])
    m = normalize_days(HalfHourlySeries([date(2010, 1, 1), date(2010, 1, 2)], vals))
    assert len(m) == 1
    assert m.excluded == (date(2010, 1, 2),)


def test_constant_day_normalizes_to_ones():
    m = normalize_days(HalfHourlySeries([date(2010, 1, 1)], np.full(SLOTS_PER_DAY, 70.0)))
    assert np.array_equal(m.values[0], np.ones(SLOTS_PER_DAY))


def test_normalize_empty():
    with pytest.raises(EmptyInputError):
        normalize_days(HalfHourlySeries([], np.empty((0, SLOTS_PER_DAY))))


def test_leap_day_dropped_and_season_lengths():
    series = synthetic_wind_power([2008], seed=3)
    m = normalize_days(series)
    assert len(m.season_days("winter")) == 90
    assert len(m.season_days("spring")) == 92
    assert len(m.season_days("summer")) == 92
    assert len(m.season_days("fall")) == 91


# -- normative season ------------------------------------------------------------


def test_identical_years_zero_spread():
    mats = {y: season_matrix(y, "spring", lambda i, h: 1 + 0.01 * h + 0.1 * (i % 3)) for y in (2007, 2008, 2009)}
    ns = build_normative_season(mats, "spring")
    assert np.array_equal(ns.representative, mats[2007].values.ravel())
    # mean of identical values is exact up to one rounding
    assert np.allclose(ns.minvn, 0, atol=1e-15) and np.allclose(ns.maxvn, 0, atol=1e-15)


def test_two_year_tie_break():
    mats = {2007: season_matrix(2007, "fall", lambda i, h: 2.0), 2008: season_matrix(2008, "fall", lambda i, h: 4.0)}
    ns = build_normative_season(mats, "fall")
    assert np.all(ns.mean == 3.0)
    assert np.all(ns.representative == 2.0)
    assert np.all(ns.chosen_year == 2007)
    assert np.all(ns.minvn == 1.0) and np.all(ns.maxvn == 1.0)


def test_three_year_example():
    mats = {y: season_matrix(y, "summer", lambda i, h, v=v: v) for y, v in ((2007, 1.0), (2008, 3.0), (2009, 8.0))}
    ns = build_normative_season(mats, "summer")
    assert ns.mean[0] == 4.0
    assert ns.representative[0] == 3.0
    assert ns.minvn[0] == 3.0 and ns.maxvn[0] == 4.0


def test_season_needs_two_years():
    with pytest.raises(InsufficientDataError):
        build_normative_season({2007: season_matrix(2007, "fall", lambda i, h: 1.0)}, "fall")


def test_truncation_to_shortest_year():
    a = season_matrix(2007, "winter", lambda i, h: 1.0)
    b = season_matrix(2008, "winter", lambda i, h: 1.0).subset(np.arange(90) < 80)
    assert build_normative_season({2007: a, 2008: b}, "winter").n_days == 80


# -- normative day ---------------------------------------------------------------


def _season(values, minvn, maxvn=None):
    """NormativeSeason directly from per-day rows (n_days x 48)."""
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    maxvn = np.zeros_like(values) if maxvn is None else maxvn
    return NormativeSeason("winter", n, (2007, 2008), values.ravel(), values.ravel(), np.zeros(values.size, int),
                           np.asarray(minvn, float).ravel(), np.asarray(maxvn, float).ravel(), 1.0, 2.0, 0.5,
                           np.ones(SLOTS_PER_DAY))


def test_identical_days_isolate_season_term():
    day = np.linspace(1.0, 2.0, SLOTS_PER_DAY)
    minvn = np.vstack([np.full(SLOTS_PER_DAY, 0.2), np.full(SLOTS_PER_DAY, 0.3)])
    maxvn = np.vstack([np.full(SLOTS_PER_DAY, 0.4), np.full(SLOTS_PER_DAY, 0.1)])
    p = build_normative_day(_season([day, day], minvn, maxvn))
    assert np.array_equal(p.normp, day)
    assert not p.minvp.any() and not p.maxvp.any()
    # all days tie, so the earliest day supplies both season-level terms
    assert np.allclose(p.netminv, 0.2) and np.allclose(p.netmaxv, 0.4)


def test_two_day_example():
    vals = np.vstack([np.full(SLOTS_PER_DAY, 0.5), np.full(SLOTS_PER_DAY, 1.5)])
    minvn = np.vstack([np.full(SLOTS_PER_DAY, 0.1), np.zeros(SLOTS_PER_DAY)])
    p = build_normative_day(_season(vals, minvn))
    assert p.normp[0] == 0.5
    assert p.minvp[0] == 0.5
    assert p.netminv[0] == pytest.approx(0.6)


def test_net_term_taken_at_extreme_day():
    # representative is day 1 (0.9, closest to mean 1.0); the minimum is day 0
    vals = np.vstack([np.full(SLOTS_PER_DAY, 0.6), np.full(SLOTS_PER_DAY, 0.9), np.full(SLOTS_PER_DAY, 1.5)])
    minvn = np.vstack([np.full(SLOTS_PER_DAY, 0.25), np.full(SLOTS_PER_DAY, 0.05), np.zeros(SLOTS_PER_DAY)])
    p = build_normative_day(_season(vals, minvn))
    assert p.chosen_day[0] == 1 and p.min_day[0] == 0
    assert p.netminv[0] == pytest.approx(0.4 + 0.25)


@pytest.fixture(scope="module")
def bpa_like():
    return build_seasonal_profiles(synthetic_wind_power(range(2007, 2012), seed=2017))


def test_envelope_ordering(bpa_like):
    for p in bpa_like.values():
        assert np.all(p.lower <= p.normp) and np.all(p.normp <= p.upper)
        assert np.all(p.netminv >= p.minvp) and np.all(p.netmaxv >= p.maxvp)


def test_summer_mean_above_winter(bpa_like):
    assert np.mean(bpa_like["summer"].actual_mean > bpa_like["winter"].actual_mean) > 0.5


def test_spring_summer_wider_envelopes(bpa_like):
    width = {s: np.mean(p.netmaxv + p.netminv) for s, p in bpa_like.items()}
    assert min(width["spring"], width["summer"]) > max(width["winter"], width["fall"])


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.1, 5.0), min_size=SLOTS_PER_DAY, max_size=SLOTS_PER_DAY))
def test_single_year_single_day_reproduced(day):
    day = np.array(day)
    mats = {y: NormalizedDayMatrix((date(y, 6, 1),), day[None, :], np.ones(1)) for y in (2007, 2008)}
    p = build_normative_day(build_normative_season(mats, "summer"))
    assert np.array_equal(p.normp, day)
    assert not p.netminv.any() and not p.netmaxv.any()


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2**31 - 1))
def test_representative_within_year_range(n_years, seed):
    rng = np.random.default_rng(seed)
    mats = {2007 + k: season_matrix(2007 + k, "fall", lambda i, h, r=rng.random(): r + 0.01 * h)
            for k in range(n_years)}
    ns = build_normative_season(mats, "fall")
    stack = np.stack([m.values.ravel() for m in mats.values()])
    assert np.all(stack.min(axis=0) <= ns.representative) and np.all(ns.representative <= stack.max(axis=0))
    eps = 1e-12
    assert np.all(ns.mean - ns.minvn <= ns.representative + eps)
    assert np.all(ns.representative <= ns.mean + ns.maxvn + eps)


# -- Weibull and turbine ---------------------------------------------------------


def test_weibull_recovery():
    rng = np.random.default_rng(1)
    fit = fit_weibull(8.0 * rng.weibull(2.0, 100_000))
    assert fit.shape == pytest.approx(2.0, rel=0.02)
    assert fit.scale == pytest.approx(8.0, rel=0.02)


def test_weibull_exponential_special_case():
    rng = np.random.default_rng(2)
    assert fit_weibull(rng.exponential(8.0, 100_000)).shape == pytest.approx(1.0, rel=0.02)


def test_weibull_degenerate():
    with pytest.raises(DegenerateDataError):
        fit_weibull(np.full(500, 5.0))


def test_weibull_too_few():
    with pytest.raises(InsufficientDataError):
        fit_weibull(np.r_[np.zeros(1000), np.arange(1, 50.0)])


def test_weibull_more_samples_not_worse():
    def err(n, seed):
        v = 8.0 * np.random.default_rng(seed).weibull(2.0, n)
        f = fit_weibull(v)
        return max(abs(f.shape / 2 - 1), abs(f.scale / 8 - 1))

    small = np.median([err(100_000, s) for s in range(20)])
    large = np.median([err(200_000, s + 100) for s in range(20)])
    assert large <= small


@pytest.mark.parametrize("ws, mw", [(2.0, 0.0), (3.0, 0.0), (7.75, 50.0), (12.5, 100.0), (20.0, 100.0), (25.0, 0.0),
                                    (30.0, 0.0)])
def test_turbine_curve_points(ws, mw):
    assert speed_to_power(ws) == mw


def test_turbine_curve_validation():
    with pytest.raises(RangeError):
        TurbineCurve(5.0, 4.0, 25.0)
    with pytest.raises(RangeError):
        speed_to_power(-1.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 40), min_size=2, max_size=50))
def test_turbine_monotone_and_idempotent(ws):
    ws = np.sort(np.array(ws))
    below = ws[ws <= 12.5]
    assert np.all(np.diff(speed_to_power(below)) >= 0)
    p = speed_to_power(ws)
    assert np.array_equal(np.clip(p, 0, 100), p)


# -- annual profile --------------------------------------------------------------


def speed_year(day_values, year=2010):
    dates = days_of(year)
    return HalfHourlySeries(dates, np.tile(day_values, (len(dates), 1)), "speed")


def test_annual_identical_days():
    day = np.linspace(5.0, 15.0, SLOTS_PER_DAY)  # first slot 5 m/s -> ~21 MW
    prof = build_annual_profile(speed_year(day))
    expected = speed_to_power(day) / speed_to_power(day[0])
    assert np.allclose(prof.values, expected)
    assert prof.n_days == 365


def test_annual_two_point_mean():
    # 365 days alternating between two shapes whose slot-5 ratios are 0.8 and 1.2
    dates = days_of(2010)
    rows = []
    for i in range(len(dates)):
        day = np.full(SLOTS_PER_DAY, 8.0)
        day[4] = 3.0 + (0.8 if i % 2 == 0 else 1.2) * 5.0 * (12.5 - 3.0) / (12.5 - 3.0)
        rows.append(day)
    prof = build_annual_profile(HalfHourlySeries(dates, np.array(rows), "speed"))
    n_even = (len(dates) + 1) // 2
    expected = (0.8 * n_even + 1.2 * (len(dates) - n_even)) / len(dates)
    assert prof.values[4] == pytest.approx(expected, rel=1e-12)


def test_annual_matches_straight_line_oracle():
    dates = days_of(2011)
    h = (np.arange(SLOTS_PER_DAY) + 0.5) / 2
    speeds = np.array([9.0 + 4.0 * np.sin(2 * np.pi * (h - 9 - (i % 7)) / 24) for i in range(len(dates))])
    prof = build_annual_profile(HalfHourlySeries(dates, speeds, "speed"))

    total = [0.0] * SLOTS_PER_DAY
    for row in speeds:
        power = []
        for ws in row:
            if ws <= 3.0 or ws >= 25.0:
                power.append(0.0)
            elif ws < 12.5:
                power.append(100.0 * (ws - 3.0) / 9.5)
            else:
                power.append(100.0)
        for k in range(SLOTS_PER_DAY):
            total[k] += power[k] / power[0]
    assert np.allclose(prof.values, np.array(total) / len(dates), rtol=1e-12)


def test_annual_needs_300_days():
    with pytest.raises(InsufficientDataError):
        build_annual_profile(HalfHourlySeries(days_of(2010)[:200], np.full((200, SLOTS_PER_DAY), 8.0), "speed"))


def test_annual_needs_speed_mode():
    with pytest.raises(ArgumentError):
        build_annual_profile(HalfHourlySeries(days_of(2010), np.full((365, SLOTS_PER_DAY), 8.0), "power"))


# -- outliers --------------------------------------------------------------------


def _profile_series(profile, value):
    dates = [d for d in days_of(2013) if season_of(d) == profile.season]
    return HalfHourlySeries(dates, np.tile(value, (len(dates), 1)))


def test_boundary_is_not_outlier(bpa_like):
    p = bpa_like["winter"]
    assert p.upper[0] == 1.0 == p.lower[0]  # slot 1 is the reference of every day
    # scaling by a power of two keeps normalization exact, so values sit on the bounds
    for bound in (p.upper, p.lower):
        assert detect_outliers(_profile_series(p, bound * 64.0), p).count == 0


def test_representative_has_no_outliers(bpa_like):
    for s, p in bpa_like.items():
        rep = detect_outliers(_profile_series(p, p.normp * 80.0), p)
        assert rep.count == 0 and rep.percentage == 0.0


def test_outlier_direction(bpa_like):
    p = bpa_like["summer"]
    high = p.upper * 1.5
    high[0] = 1.0
    rep = detect_outliers(_profile_series(p, high * 10.0), p)
    assert rep.count == rep.tested - rep.tested // SLOTS_PER_DAY  # every slot but the reference
    assert all(o.kind == "upper" for o in rep.outliers)


def test_season_mismatch(bpa_like):
    with pytest.raises(ArgumentError):
        detect_outliers(_profile_series(bpa_like["fall"], bpa_like["fall"].normp), bpa_like["fall"], season="winter")


def test_outlier_percentage_scale_invariant(bpa_like):
    test = synthetic_wind_power([2012, 2013], seed=5)
    a = validate_holdout(test, bpa_like)
    b = validate_holdout(test.scaled(3.7), bpa_like)
    for s in SEASONS:
        assert a[s].percentage == b[s].percentage
        assert a[s].percentage == pytest.approx(100.0 * a[s].count / a[s].tested)
