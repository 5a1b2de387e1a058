"""Seasonal system-load composition from residential, commercial and
industrial daily shapes."""

from __future__ import annotations

import calendar
import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ArgumentError,
    CoverageError,
    DegenerateDataError,
    ParseError,
    RangeError,
    VocabularyError,
)
from .ingest import SECTORS, SLOTS_PER_DAY, MonthlyEnergyTable
from .wind import SEASON_OF_MONTH, SEASONS, _check_season

logger = logging.getLogger(__name__)

SLOT_HOURS = 0.5
# season index used by the load-ratio scaling: summer is the reference
LR_INDEX = {"summer": 1, "spring": 2, "winter": 3, "fall": 4}
DATA_DIR = Path(__file__).parent / "data"


@dataclass(frozen=True, eq=False)
class SectorShape:
    sector: str
    season: str
    values: np.ndarray

    def __post_init__(self):
        if self.sector not in SECTORS:
            raise VocabularyError(f"unknown sector {self.sector!r}")
        _check_season(self.season)
        v = np.asarray(self.values, dtype=float)
        if v.shape != (SLOTS_PER_DAY,):
            raise ArgumentError(f"{self.sector}/{self.season}: shape needs {SLOTS_PER_DAY} values")
        if np.any(~np.isfinite(v)) or np.any(v <= 0):
            raise RangeError(f"{self.sector}/{self.season}: shape values must be positive")
        if abs(v.max() - 1.0) > 1e-6:
            raise RangeError(f"{self.sector}/{self.season}: shape peak must be 1, got {v.max()}")
        v = v / v.max()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def area(self):
        """Area under the curve in hours (normalized level x time)."""
        return float(self.values.sum() * SLOT_HOURS)


@dataclass(frozen=True)
class SectorEnergy:
    sector: str
    season: str
    mwh: float

    def __post_init__(self):
        if not self.mwh > 0:
            raise RangeError(f"{self.sector}/{self.season}: daily energy must be positive")


@dataclass(frozen=True)
class LoadRatioSet:
    ratios: dict

    def __post_init__(self):
        for s in SEASONS:
            if s not in self.ratios:
                raise CoverageError(f"load ratio for {s} missing")
            lr = self.ratios[s]
            if not np.isfinite(lr) or lr < 0:
                raise RangeError(f"load ratio for {s} must be finite and non-negative")

    def factor(self, season):
        """Commercial/industrial scaling of ``season`` relative to summer."""
        return (1.0 + self.ratios[season]) / (1.0 + self.ratios["summer"])

    def by_index(self, s):
        inv = {v: k for k, v in LR_INDEX.items()}
        return self.ratios[inv[s]]

    @classmethod
    def uniform(cls, lr=0.2):
        return cls({s: lr for s in SEASONS})


@dataclass(frozen=True, eq=False)
class SeasonalLoadProfile:
    season: str
    percent: np.ndarray     # Load_{s,h}, peak = 100
    peak_mw: float
    residential: np.ndarray
    commercial: np.ndarray
    industrial: np.ndarray

    @property
    def total_mw(self):
        return self.residential + self.commercial + self.industrial

    @property
    def peak_slot(self):
        return int(np.argmax(self.percent)) + 1


def scale_sector(shape: SectorShape, energy: SectorEnergy):
    """MW per half-hour such that the daily energy equals ``energy.mwh``."""
    if shape.sector != energy.sector or shape.season != energy.season:
        raise ArgumentError(
            f"shape {shape.sector}/{shape.season} does not match energy {energy.sector}/{energy.season}"
        )
    area = shape.area
    if area <= 0:
        raise DegenerateDataError(f"{shape.sector}/{shape.season}: zero-area shape")
    return shape.values * (energy.mwh / area)


def scale_residential(shape: SectorShape, energy: SectorEnergy):
    if shape.sector != "residential":
        raise ArgumentError("residential scaling needs a residential shape")
    return scale_sector(shape, energy)


def scale_summer_ci(c_shape, i_shape, c_energy, i_energy):
    for obj, sector in ((c_shape, "commercial"), (i_shape, "industrial")):
        if obj.sector != sector or obj.season != "summer":
            raise ArgumentError(f"expected the summer {sector} shape, got {obj.sector}/{obj.season}")
    return scale_sector(c_shape, c_energy), scale_sector(i_shape, i_energy)


def extend_ci_seasons(cl1, il1, ratios: LoadRatioSet):
    """Commercial and industrial MW curves for every season from summer ones."""
    cl1 = np.asarray(cl1, dtype=float)
    il1 = np.asarray(il1, dtype=float)
    return (
        {s: cl1 * ratios.factor(s) for s in SEASONS},
        {s: il1 * ratios.factor(s) for s in SEASONS},
    )


def compose_system_load(residential, commercial, industrial):
    """Percent-of-peak profile per season from per-sector MW curves.

    Each argument maps season -> 48 MW values.
    """
    out = {}
    for s in residential:
        r = np.asarray(residential[s], dtype=float)
        c = np.asarray(commercial[s], dtype=float)
        i = np.asarray(industrial[s], dtype=float)
        total = r + c + i
        peak = total.max()
        if not peak > 0:
            raise DegenerateDataError(f"{s}: all load components are zero")
        pct = total / peak * 100.0
        out[s] = SeasonalLoadProfile(s, pct, float(peak), r, c, i)
    return out


def annual_load_profile(profiles):
    """Season-independent profile: mean of the seasonal MW curves."""
    seasons = [s for s in SEASONS if s in profiles]
    mean = lambda attr: np.mean([getattr(profiles[s], attr) for s in seasons], axis=0)  # noqa: E731
    return compose_system_load(
        {"annual": mean("residential")}, {"annual": mean("commercial")}, {"annual": mean("industrial")}
    )["annual"]


def seasonal_daily_energy(table: MonthlyEnergyTable, sector, season, years=None):
    """Average daily MWh of ``sector`` in ``season``: season total over its days."""
    if sector not in SECTORS:
        raise VocabularyError(f"unknown sector {sector!r}")
    _check_season(season)
    years = table.years() if years is None else list(years)
    total = 0.0
    days = 0
    for y in years:
        for m in (m for m, s in SEASON_OF_MONTH.items() if s == season):
            e = table.get(y, m, sector)
            if e is None:
                continue
            total += e
            days += calendar.monthrange(y, m)[1]
    if days == 0:
        raise CoverageError(f"no {sector} data for {season} in years {years}")
    return SectorEnergy(sector, season, total / days)


def build_load_profiles(table, shapes, ratios: LoadRatioSet | None = None, years=None):
    """Full seasonal load pipeline.

    ``shapes`` maps (sector, season) -> SectorShape and must contain the four
    residential shapes plus the summer commercial and industrial shapes.
    """
    ratios = ratios or LoadRatioSet.uniform()
    for sector in SECTORS:
        if not any(k[0] == sector for k in shapes):
            raise CoverageError(f"no {sector} shape supplied")
    try:
        res = {
            s: scale_residential(shapes["residential", s], seasonal_daily_energy(table, "residential", s, years))
            for s in SEASONS
        }
        cl1, il1 = scale_summer_ci(
            shapes["commercial", "summer"],
            shapes["industrial", "summer"],
            seasonal_daily_energy(table, "commercial", "summer", years),
            seasonal_daily_energy(table, "industrial", "summer", years),
        )
    except KeyError as exc:
        raise CoverageError(f"missing shape {exc.args[0]}") from None
    com, ind = extend_ci_seasons(cl1, il1, ratios)
    return compose_system_load(res, com, ind)


def read_shapes(path):
    """Read a ``sector,season,slot,value`` CSV into SectorShape objects."""
    path = Path(path)
    raw = {}
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:4]] != ["sector", "season", "slot", "value"]:
            raise ParseError("expected header 'sector,season,slot,value'", line=1, path=path)
        for lineno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            try:
                sector, season = row[0].strip().lower(), row[1].strip().lower()
                slot, value = int(row[2]), float(row[3])
            except (ValueError, IndexError):
                raise ParseError(f"malformed row {row!r}", line=lineno, path=path) from None
            if not 1 <= slot <= SLOTS_PER_DAY:
                raise RangeError(f"{path}:{lineno}: slot {slot} outside 1-48")
            raw.setdefault((sector, season), {})[slot] = value
    shapes = {}
    for key, slots in raw.items():
        if len(slots) != SLOTS_PER_DAY:
            raise CoverageError(f"{path}: {key[0]}/{key[1]} has {len(slots)} of 48 slots")
        shapes[key] = SectorShape(key[0], key[1], [slots[h] for h in range(1, SLOTS_PER_DAY + 1)])
    return shapes


def write_shapes(shapes, path):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sector", "season", "slot", "value"])
        for (sector, season), shape in sorted(shapes.items()):
            for h, v in enumerate(shape.values, start=1):
                w.writerow([sector, season, h, repr(float(v))])


def read_load_ratios(path):
    ratios = {}
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            season = row["season"].strip().lower()
            _check_season(season)
            ratios[season] = float(row["lr"])
    return LoadRatioSet(ratios)


def default_shapes():
    return read_shapes(DATA_DIR / "default_shapes.csv")
