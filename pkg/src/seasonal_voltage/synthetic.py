"""Seeded synthetic stand-ins for the measurement inputs.

The wind generator produces half-hourly farm output as

    P = min(capacity, capacity * level_s * diurnal_s(h) * exp(x)),
    x = slow_s * u + fast_s * z + gust_s * gate_s(h) * max(w, 0)

with three unit-variance AR(1) processes: ``u`` drifts over days (it
mostly cancels when a day is divided by its first half-hour), ``z`` is
intra-day turbulence and ``w`` drives afternoon gusts, switched on by a
bell-shaped ``gate`` centred on the late afternoon. Spring and summer are
windier and more turbulent within the day; winter and fall vary more from
day to day. The parameters were chosen so that the seasonal wind scale
factors of the scan stay in the range where the IEEE 118-bus power flow
remains solvable.

Everything is a pure function of ``seed``.
"""

from __future__ import annotations

from datetime import date, timedelta

import numpy as np

from .ingest import SECTORS, SLOTS_PER_DAY, HalfHourlySeries, MonthlyEnergyTable
from .load import SectorShape
from .wind import SEASON_OF_MONTH, SEASONS

# per-season parameters of the synthetic wind generator
WIND_PARAMS = {
    #          level  diurnal amp  peak hour  slow   fast   gust
    "winter": (0.300, 0.030, 0.0, 0.288, 0.046, 0.065),
    "spring": (0.480, 0.090, 3.5, 0.282, 0.087, 0.113),
    "summer": (0.541, 0.130, 3.0, 0.266, 0.086, 0.030),
    "fall": (0.394, 0.065, 3.5, 0.251, 0.058, 0.026),
}
# seeds of the bundled sample inputs (``seasonal-voltage sample-data``)
SAMPLE_SEEDS = {"wind_train": 2017, "wind_test": 2018, "speed": 12, "demand": 1}

RHO_SLOW, RHO_FAST, RHO_GUST = 0.999, 0.97, 0.95
GUST_HOUR, GUST_WIDTH = 17.0, 3.5


def _days(years):
    out = []
    for y in years:
        d = date(y, 1, 1)
        while d.year == y:
            out.append(d)
            d += timedelta(days=1)
    return out


def _ar1(rng, n, rho):
    eps = rng.standard_normal(n) * np.sqrt(1.0 - rho * rho)
    x = np.empty(n)
    x[0] = rng.standard_normal()
    for t in range(1, n):
        x[t] = rho * x[t - 1] + eps[t]
    return x


def synthetic_wind_power(years, seed=0, capacity=4500.0):
    """BPA-like farm output (MW) for whole calendar years."""
    rng = np.random.default_rng(seed)
    dates = _days(years)
    shape = (len(dates), SLOTS_PER_DAY)
    n = len(dates) * SLOTS_PER_DAY
    u = _ar1(rng, n, RHO_SLOW).reshape(shape)
    z = _ar1(rng, n, RHO_FAST).reshape(shape)
    w = np.maximum(_ar1(rng, n, RHO_GUST), 0.0).reshape(shape)
    hours = (np.arange(SLOTS_PER_DAY) + 0.5) / 2.0
    gate = _bump(hours, GUST_HOUR, GUST_WIDTH)
    out = np.empty(shape)
    for i, d in enumerate(dates):
        level, amp, peak, slow, fast, gust = WIND_PARAMS[SEASON_OF_MONTH[d.month]]
        diurnal = 1.0 + amp * np.cos(2 * np.pi * (hours - peak) / 24.0)
        x = slow * u[i] + fast * z[i] + gust * gate * w[i]
        out[i] = np.minimum(capacity * level * diurnal * np.exp(x), capacity)
    return HalfHourlySeries(dates, np.round(out, 3), "power")


def synthetic_wind_speed(years, seed=0, shape=3.0, scale=11.0, rho=0.999):
    """Half-hourly wind speeds (m/s) with Weibull marginals and a mild diurnal cycle."""
    from scipy.stats import norm

    rng = np.random.default_rng(seed)
    dates = _days(years)
    n = len(dates) * SLOTS_PER_DAY
    z = _ar1(rng, n, rho)
    u = norm.cdf(z)
    v = scale * (-np.log1p(-u)) ** (1.0 / shape)
    hours = np.tile((np.arange(SLOTS_PER_DAY) + 0.5) / 2.0, len(dates))
    v = v * (1.0 + 0.08 * np.cos(2 * np.pi * (hours - 15.0) / 24.0))
    return HalfHourlySeries(dates, np.round(np.minimum(v, 60.0), 3).reshape(-1, SLOTS_PER_DAY), "speed")


# -- demand ------------------------------------------------------------------

_SECTOR_BASE_MWH = {"residential": 1.62e6, "commercial": 1.52e6, "industrial": 1.05e6}


def synthetic_demand_table(years=range(2007, 2016), seed=0):
    """Oregon-like monthly sector energy (MWh): residential peaks in winter,
    commercial has a small summer bump, industrial is nearly flat."""
    rng = np.random.default_rng(seed)
    rows = []
    for y in years:
        growth = 1.0 + 0.006 * (y - 2007)
        for m in range(1, 13):
            phase = 2 * np.pi * (m - 1) / 12.0
            shape = {
                "residential": 1.0 + 0.28 * np.cos(phase) + 0.05 * np.cos(2 * phase),
                "commercial": 1.0 + 0.06 * np.cos(phase - np.pi),
                "industrial": 1.0 + 0.02 * np.cos(phase),
            }
            for sector in SECTORS:
                e = _SECTOR_BASE_MWH[sector] * shape[sector] * growth * (1.0 + 0.015 * rng.standard_normal())
                rows.append((y, m, sector, round(float(e), 1)))
    return MonthlyEnergyTable(tuple(sorted(rows)))


def _bump(hours, centre, width):
    d = (hours - centre + 12.0) % 24.0 - 12.0
    return np.exp(-0.5 * (d / width) ** 2)


def make_default_shapes():
    """Synthetic daily shapes: morning/evening residential peaks and
    business-hours commercial/industrial peaks."""
    h = np.arange(SLOTS_PER_DAY) / 2.0
    shapes = {}
    res = {
        "winter": 0.42 + 0.30 * _bump(h, 8.0, 1.6) + 0.20 * _bump(h, 13.5, 3.5) + 0.36 * _bump(h, 18.5, 1.8),
        "spring": 0.40 + 0.22 * _bump(h, 7.5, 1.5) + 0.24 * _bump(h, 13.5, 3.5) + 0.26 * _bump(h, 19.0, 1.8),
        "summer": 0.38 + 0.16 * _bump(h, 7.5, 1.5) + 0.42 * _bump(h, 15.0, 3.0) + 0.18 * _bump(h, 19.5, 1.8),
        "fall": 0.40 + 0.24 * _bump(h, 7.5, 1.5) + 0.24 * _bump(h, 13.5, 3.5) + 0.28 * _bump(h, 19.0, 1.8),
    }
    for s in SEASONS:
        shapes["residential", s] = SectorShape("residential", s, res[s] / res[s].max())
    com = 0.38 + 0.62 * _bump(h, 13.0, 3.2)
    ind = 0.62 + 0.38 * _bump(h, 12.0, 3.8)
    shapes["commercial", "summer"] = SectorShape("commercial", "summer", com / com.max())
    shapes["industrial", "summer"] = SectorShape("industrial", "summer", ind / ind.max())
    return shapes
