"""Seasonal normative-day wind models, the Weibull/turbine-curve annual
profile, and envelope-based hold-out validation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import date

import numpy as np
from scipy.optimize import brentq

from .errors import (
    ArgumentError,
    CoverageError,
    DegenerateDataError,
    EmptyInputError,
    InsufficientDataError,
    RangeError,
    VocabularyError,
)
from .ingest import SLOTS_PER_DAY, HalfHourlySeries

logger = logging.getLogger(__name__)

SEASONS = ("winter", "spring", "summer", "fall")
SEASON_OF_MONTH = {
    12: "winter", 1: "winter", 2: "winter",
    3: "spring", 4: "spring", 5: "spring",
    6: "summer", 7: "summer", 8: "summer",
    9: "fall", 10: "fall", 11: "fall",
}
REFERENCE_FLOOR_MW = 1.0


def season_of(d):
    return SEASON_OF_MONTH[d.month]


def _check_season(season):
    if season not in SEASONS:
        raise VocabularyError(f"unknown season {season!r}; expected one of {SEASONS}")


@dataclass(frozen=True)
class NormalizedDayMatrix:
    """Days divided by their first recorded half-hour.

    ``values[:, 0]`` is exactly 1; ``reference`` holds the divisor (MW).
    """

    dates: tuple
    values: np.ndarray
    reference: np.ndarray
    excluded: tuple = ()

    def __len__(self):
        return len(self.dates)

    @property
    def actual(self):
        return self.values * self.reference[:, None]

    def subset(self, mask):
        mask = np.asarray(mask, dtype=bool)
        return NormalizedDayMatrix(
            tuple(d for d, m in zip(self.dates, mask) if m), self.values[mask], self.reference[mask], self.excluded
        )

    def by_year(self):
        years = sorted({d.year for d in self.dates})
        return {y: self.subset([d.year == y for d in self.dates]) for y in years}

    def season_days(self, season):
        """Rows of ``season`` ordered by (year, day-of-season), leap days removed.

        Seasons group by calendar year, so a year's winter is Jan, Feb, Dec.
        """
        _check_season(season)
        idx = sorted(
            (i for i, d in enumerate(self.dates) if season_of(d) == season and not (d.month == 2 and d.day == 29)),
            key=lambda i: self.dates[i],
        )
        return NormalizedDayMatrix(
            tuple(self.dates[i] for i in idx), self.values[idx], self.reference[idx], self.excluded
        )


def normalize_days(series: HalfHourlySeries, floor: float = REFERENCE_FLOOR_MW) -> NormalizedDayMatrix:
    """Divide every day by its first half-hour.

    Days whose first reading is below ``floor`` MW are excluded and logged.
    """
    if len(series.dates) == 0:
        raise EmptyInputError("cannot normalize an empty series")
    ref = series.values[:, 0]
    keep = ref >= floor
    excluded = tuple(d for d, k in zip(series.dates, keep) if not k)
    if excluded:
        logger.info("excluded %d days with reference below %.3g MW", len(excluded), floor)
    vals = series.values[keep] / ref[keep, None]
    vals[:, 0] = 1.0
    return NormalizedDayMatrix(tuple(d for d, k in zip(series.dates, keep) if k), vals, ref[keep].copy(), excluded)


def _deviation_stats(samples, axis=0):
    """Mean, representative index, and min/max deviation magnitudes.

    Representative is the sample closest to the mean (first on ties).
    """
    mean = samples.mean(axis=axis)
    dev = samples - np.expand_dims(mean, axis)
    rep = np.argmin(np.abs(dev), axis=axis)
    lo_idx = np.argmin(dev, axis=axis)
    hi_idx = np.argmax(dev, axis=axis)
    minv = np.maximum(-dev.min(axis=axis), 0.0)
    maxv = np.maximum(dev.max(axis=axis), 0.0)
    return mean, rep, lo_idx, hi_idx, minv, maxv


@dataclass(frozen=True, eq=False)
class NormativeSeason:
    season: str
    n_days: int
    years: tuple
    mean: np.ndarray            # per seasonal slot, length 48 * n_days
    representative: np.ndarray
    chosen_year: np.ndarray
    minvn: np.ndarray
    maxvn: np.ndarray
    mp: float                   # mean actual MW over training years
    mxwp: float
    mnwp: float
    actual_mean: np.ndarray     # mean actual MW per half-hour of day


def build_normative_season(matrix_by_year, season) -> NormativeSeason:
    """Collapse several training years of one season into a normative season.

    Each year's season is aligned by day-of-season index and truncated to the
    shortest year.
    """
    _check_season(season)
    years = sorted(matrix_by_year)
    if len(years) < 2:
        raise InsufficientDataError(f"{season}: need at least 2 training years, got {len(years)}")
    per_year = {y: matrix_by_year[y].season_days(season) for y in years}
    for y, m in per_year.items():
        if len(m) == 0:
            raise CoverageError(f"{season}: training year {y} has no retained days")
    n = min(len(m) for m in per_year.values())
    if n < max(len(m) for m in per_year.values()):
        logger.info("%s: truncating training years to %d aligned days", season, n)
    stack = np.stack([per_year[y].values[:n].ravel() for y in years])
    actual = np.concatenate([per_year[y].actual[:n] for y in years])
    mean, rep, _, _, minvn, maxvn = _deviation_stats(stack)
    cols = np.arange(stack.shape[1])
    return NormativeSeason(
        season=season,
        n_days=n,
        years=tuple(years),
        mean=mean,
        representative=stack[rep, cols],
        chosen_year=np.asarray(years)[rep],
        minvn=minvn,
        maxvn=maxvn,
        mp=float(actual.mean()),
        mxwp=float(actual.max()),
        mnwp=float(actual.min()),
        actual_mean=actual.mean(axis=0),
    )


@dataclass(frozen=True, eq=False)
class NormativeDayProfile:
    season: str
    mean: np.ndarray
    normp: np.ndarray
    chosen_day: np.ndarray
    min_day: np.ndarray
    max_day: np.ndarray
    minvp: np.ndarray
    maxvp: np.ndarray
    netminv: np.ndarray
    netmaxv: np.ndarray
    mp: float
    mxwp: float
    mnwp: float
    actual_mean: np.ndarray
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def lower(self):
        return self.normp - self.netminv

    @property
    def upper(self):
        return self.normp + self.netmaxv


def build_normative_day(ns: NormativeSeason) -> NormativeDayProfile:
    """Collapse a normative season into one 48-slot day with a net envelope.

    The season-level deviation added to each day-level deviation is taken at
    the day that produced that day-level extreme.
    """
    grid = ns.representative.reshape(ns.n_days, SLOTS_PER_DAY)
    mean, rep, lo_day, hi_day, minvp, maxvp = _deviation_stats(grid)
    h = np.arange(SLOTS_PER_DAY)
    minvn = ns.minvn.reshape(ns.n_days, SLOTS_PER_DAY)
    maxvn = ns.maxvn.reshape(ns.n_days, SLOTS_PER_DAY)
    return NormativeDayProfile(
        season=ns.season,
        mean=mean,
        normp=grid[rep, h],
        chosen_day=rep,
        min_day=lo_day,
        max_day=hi_day,
        minvp=minvp,
        maxvp=maxvp,
        netminv=minvp + minvn[lo_day, h],
        netmaxv=maxvp + maxvn[hi_day, h],
        mp=ns.mp,
        mxwp=ns.mxwp,
        mnwp=ns.mnwp,
        actual_mean=ns.actual_mean,
        metadata={"years": list(ns.years), "n_days": ns.n_days},
    )


def build_seasonal_profiles(series: HalfHourlySeries, first_year=None, last_year=None):
    """Normative-day profile for every season from a power series."""
    if first_year is not None or last_year is not None:
        series = series.between_years(first_year or -9999, last_year or 9999)
    by_year = normalize_days(series).by_year()
    return {s: build_normative_day(build_normative_season(by_year, s)) for s in SEASONS}


# -- model-based path --------------------------------------------------------


@dataclass(frozen=True)
class WeibullParams:
    shape: float
    scale: float
    n_used: int = 0
    n_zero_dropped: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.shape) and np.isfinite(self.scale) and self.shape > 0 and self.scale > 0):
            raise RangeError(f"Weibull parameters must be positive and finite, got {self.shape}, {self.scale}")

    def pdf(self, v):
        k, lam = self.shape, self.scale
        v = np.asarray(v, dtype=float)
        return (k / lam) * (v / lam) ** (k - 1) * np.exp(-((v / lam) ** k))


def fit_weibull(speeds, rtol=1e-10) -> WeibullParams:
    """Maximum-likelihood two-parameter Weibull fit.

    The shape solves the profile-likelihood equation
    ``1/k + mean(ln v) - sum(v**k ln v) / sum(v**k) = 0`` and the scale
    follows in closed form, ``(mean(v**k))**(1/k)``.
    """
    v = np.asarray(speeds, dtype=float).ravel()
    v = v[np.isfinite(v)]
    if np.any(v < 0):
        raise RangeError("wind speeds must be non-negative")
    zeros = int(np.count_nonzero(v == 0))
    v = v[v > 0]
    if v.size < 100:
        raise InsufficientDataError(f"need at least 100 positive samples, got {v.size}")
    if np.ptp(v) == 0:
        raise DegenerateDataError("all samples are equal; the shape estimate is unbounded")
    # scaling by the max keeps v**k bounded for large k
    vmax = v.max()
    x = v / vmax
    lx = np.log(x)
    mean_lx = lx.mean()

    def score(k):
        w = x**k
        return 1.0 / k + mean_lx - np.dot(w, lx) / w.sum()

    lo, hi = 0.05, 2.0
    while score(hi) > 0:
        hi *= 2.0
        if hi > 1e4:
            raise DegenerateDataError("shape estimate diverges")
    while score(lo) < 0:
        lo /= 2.0
        if lo < 1e-8:
            raise DegenerateDataError("shape estimate collapses to zero")
    k = brentq(score, lo, hi, xtol=1e-300, rtol=rtol, maxiter=500)
    scale = vmax * np.mean(x**k) ** (1.0 / k)
    return WeibullParams(float(k), float(scale), int(v.size), zeros)


@dataclass(frozen=True)
class TurbineCurve:
    v_ci: float = 3.0
    v_r: float = 12.5
    v_co: float = 25.0
    rated: float = 100.0

    def __post_init__(self):
        if not (0 < self.v_ci < self.v_r < self.v_co) or self.rated <= 0:
            raise RangeError("turbine curve needs 0 < V_ci < V_r < V_co and positive rating")


def speed_to_power(ws, curve: TurbineCurve = TurbineCurve()):
    """Piecewise-linear turbine output (MW) for wind speed(s) in m/s."""
    ws = np.asarray(ws, dtype=float)
    if np.any(ws < 0):
        raise RangeError("wind speed must be non-negative")
    ramp = curve.rated * (ws - curve.v_ci) / (curve.v_r - curve.v_ci)
    out = np.where(ws < curve.v_r, ramp, curve.rated)
    out = np.where((ws <= curve.v_ci) | (ws >= curve.v_co), 0.0, out)
    return out if out.ndim else float(out)


@dataclass(frozen=True, eq=False)
class AnnualProfile:
    values: np.ndarray
    n_days: int
    excluded: int = 0


def build_annual_profile(speed_series: HalfHourlySeries, curve: TurbineCurve = TurbineCurve(),
                         floor: float = REFERENCE_FLOOR_MW) -> AnnualProfile:
    """Season-independent normalized day from wind speeds.

    The mean runs over retained days rather than a fixed 365.
    """
    if speed_series.mode != "speed":
        raise ArgumentError("annual profile needs a speed-mode series")
    power = speed_series.values.copy()
    power[:] = speed_to_power(speed_series.values, curve)
    matrix = normalize_days(HalfHourlySeries(speed_series.dates, power, "power"), floor)
    if len(matrix) < 300:
        raise InsufficientDataError(f"only {len(matrix)} retained days; need at least 300")
    if len(matrix) != 365:
        logger.info("annual profile averages over %d retained days", len(matrix))
    return AnnualProfile(matrix.values.mean(axis=0), len(matrix), len(matrix.excluded))


# -- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class Outlier:
    date: date
    slot: int      # 1-based
    value: float
    bound: float
    kind: str      # "upper" or "lower"


@dataclass(frozen=True)
class OutlierReport:
    season: str
    tested: int
    outliers: tuple

    @property
    def count(self):
        return len(self.outliers)

    @property
    def percentage(self):
        return 100.0 * self.count / self.tested if self.tested else 0.0


def detect_outliers(test_series, profile: NormativeDayProfile, season=None) -> OutlierReport:
    """Flag test readings strictly outside the profile's closed envelope.

    ``test_series`` is a raw power series (normalized here) or an already
    normalized :class:`NormalizedDayMatrix`; only days of the profile's season
    are tested, pooled across all years present.
    """
    if season is not None and season != profile.season:
        raise ArgumentError(f"test season {season!r} does not match profile season {profile.season!r}")
    matrix = test_series if isinstance(test_series, NormalizedDayMatrix) else normalize_days(test_series)
    days = matrix.season_days(profile.season)
    if len(days) == 0:
        raise ArgumentError(f"test data has no {profile.season} days")
    lower, upper = profile.lower, profile.upper
    found = []
    hi = days.values > upper
    lo = days.values < lower
    for i, j in zip(*np.nonzero(hi | lo)):
        kind = "upper" if hi[i, j] else "lower"
        found.append(Outlier(days.dates[i], int(j) + 1, float(days.values[i, j]),
                             float(upper[j] if kind == "upper" else lower[j]), kind))
    return OutlierReport(profile.season, int(days.values.size), tuple(found))


def validate_holdout(test_series, profiles):
    """Outlier report per season for a multi-year test series."""
    matrix = normalize_days(test_series)
    return {s: detect_outliers(matrix, p) for s, p in profiles.items()}
