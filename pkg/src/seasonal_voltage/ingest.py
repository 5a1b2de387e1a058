"""Readers for wind histories, monthly sector energy tables and network cases."""

from __future__ import annotations

import csv
import json
import logging
import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from .errors import (
    ConflictError,
    EmptyInputError,
    ParseError,
    RangeError,
    StructuralError,
    VocabularyError,
)
from .network import Branch, Bus, CostCurve, Generator, NetworkCase

logger = logging.getLogger(__name__)

SLOTS_PER_DAY = 48
STEP = timedelta(minutes=30)
MAX_REPAIR_GAP = 2
SPEED_LIMIT = 150.0
SECTORS = ("residential", "commercial", "industrial")


@dataclass(frozen=True)
class HalfHourlySeries:
    """Whole days of 30-minute readings.

    ``values`` has shape ``(n_days, 48)``; row ``i`` holds the day starting at
    midnight of ``dates[i]``. Dropped days leave holes in ``dates`` but every
    retained day is complete.
    """

    dates: tuple
    values: np.ndarray
    mode: str = "power"
    utc_offset: timedelta | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1, SLOTS_PER_DAY)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dates", tuple(self.dates))
        if len(self.dates) != values.shape[0]:
            raise StructuralError("one date per day row required")
        if self.mode not in ("power", "speed"):
            raise VocabularyError(f"unknown series mode {self.mode!r}")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise StructuralError("day dates must strictly increase")
        if np.any(~np.isfinite(values)) or np.any(values < 0):
            raise RangeError("series values must be finite and non-negative")
        if self.mode == "speed" and np.any(values >= SPEED_LIMIT):
            raise RangeError(f"wind speeds must stay below {SPEED_LIMIT} m/s")

    def __len__(self):
        return self.values.size

    @property
    def start_timestamp(self):
        if not self.dates:
            return None
        return datetime.combine(self.dates[0], datetime.min.time())

    def timestamps(self):
        for d in self.dates:
            base = datetime.combine(d, datetime.min.time())
            for h in range(SLOTS_PER_DAY):
                yield base + h * STEP

    def select(self, mask):
        mask = np.asarray(mask, dtype=bool)
        return HalfHourlySeries(
            tuple(d for d, m in zip(self.dates, mask) if m), self.values[mask], self.mode, self.utc_offset
        )

    def years(self):
        return sorted({d.year for d in self.dates})

    def between_years(self, first, last):
        return self.select([first <= d.year <= last for d in self.dates])

    def scaled(self, factor):
        return HalfHourlySeries(self.dates, self.values * factor, self.mode, self.utc_offset)


@dataclass
class GapReport:
    missing_intervals: list = field(default_factory=list)
    repaired_count: int = 0
    dropped_days: list = field(default_factory=list)
    clamped_count: int = 0
    expected_slots: int = 0

    @property
    def empty(self):
        return not (self.missing_intervals or self.repaired_count or self.dropped_days or self.clamped_count)


def _parse_timestamp(text):
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    return datetime.fromisoformat(text)


def parse_wind_series(file_path, mode="power"):
    """Read a ``timestamp,value`` CSV into whole days of half-hourly data.

    Runs of at most two missing slots are linearly interpolated; any day
    touched by a longer run (or by a gap at the edge of the record) is
    dropped. Negative power readings are clamped to zero; unusable values
    (blank, NaN, negative speeds, speeds above the sanity bound) count as
    missing.

    Returns
    -------
    (HalfHourlySeries, GapReport)
    """
    if mode not in ("power", "speed"):
        raise VocabularyError(f"unknown series mode {mode!r}")
    path = Path(file_path)
    report = GapReport()
    rows = []
    offset = None
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyInputError(f"{path}: empty file")
        if [h.strip().lower() for h in header[:2]] != ["timestamp", "value"]:
            raise ParseError("expected header 'timestamp,value'", line=1, path=path)
        prev = None
        for lineno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            if len(row) < 2:
                raise ParseError("expected two columns", line=lineno, path=path)
            try:
                ts = _parse_timestamp(row[0])
            except ValueError:
                raise ParseError(f"malformed timestamp {row[0]!r}", line=lineno, path=path) from None
            if prev is None:
                offset = ts.utcoffset()
            elif ts.utcoffset() != offset:
                raise StructuralError(f"{path}:{lineno}: mixed UTC offsets")
            if prev is not None and ts <= prev:
                raise StructuralError(f"{path}:{lineno}: timestamps not strictly increasing ({ts} after {prev})")
            if ts.second or ts.microsecond or ts.minute % 30:
                raise StructuralError(f"{path}:{lineno}: timestamp {ts} is off the 30-minute grid")
            prev = ts
            raw = row[1].strip()
            try:
                value = float(raw) if raw else math.nan
            except ValueError:
                raise ParseError(f"malformed value {raw!r}", line=lineno, path=path) from None
            if not math.isfinite(value):
                value = math.nan
            elif value < 0:
                if mode == "power":
                    report.clamped_count += 1
                    value = 0.0
                else:
                    value = math.nan
            elif mode == "speed" and value >= SPEED_LIMIT:
                value = math.nan
            rows.append((ts, value))
    if not rows:
        raise EmptyInputError(f"{path}: no data rows")
    if report.clamped_count:
        logger.info("%s: clamped %d negative power readings to 0", path, report.clamped_count)

    first_day = rows[0][0].date()
    last_day = rows[-1][0].date()
    n_days = (last_day - first_day).days + 1
    grid = np.full(n_days * SLOTS_PER_DAY, np.nan)
    for ts, value in rows:
        k = (ts.date() - first_day).days * SLOTS_PER_DAY + (ts.hour * 60 + ts.minute) // 30
        grid[k] = value
    report.expected_slots = grid.size

    missing = np.isnan(grid)
    bad_days = set()
    day_of = lambda k: first_day + timedelta(days=int(k // SLOTS_PER_DAY))  # noqa: E731
    for start, stop in _runs(missing):
        length = stop - start
        begin = datetime.combine(day_of(start), datetime.min.time()) + (start % SLOTS_PER_DAY) * STEP
        report.missing_intervals.append((begin, length))
        repairable = length <= MAX_REPAIR_GAP and start > 0 and stop < grid.size
        if repairable:
            left, right = grid[start - 1], grid[stop]
            for j, k in enumerate(range(start, stop), start=1):
                grid[k] = left + (right - left) * j / (length + 1)
        else:
            bad_days.update(range(int(start // SLOTS_PER_DAY), int((stop - 1) // SLOTS_PER_DAY) + 1))

    keep = np.array([i not in bad_days for i in range(n_days)])
    repaired = missing.reshape(n_days, SLOTS_PER_DAY)[keep].sum()
    report.repaired_count = int(repaired)
    report.dropped_days = [first_day + timedelta(days=i) for i in sorted(bad_days)]
    if report.dropped_days:
        logger.info("%s: dropped %d days with unrepairable gaps", path, len(report.dropped_days))
    if not keep.any():
        raise EmptyInputError(f"{path}: no complete days after gap repair")
    dates = [first_day + timedelta(days=i) for i in range(n_days) if keep[i]]
    series = HalfHourlySeries(dates, grid.reshape(n_days, SLOTS_PER_DAY)[keep], mode, offset)
    return series, report


def _runs(mask):
    """(start, stop) index pairs of consecutive True runs."""
    padded = np.concatenate([[False], mask, [False]]).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    return list(zip(edges[::2], edges[1::2]))


def write_wind_series(series, file_path):
    """Inverse of :func:`parse_wind_series` for clean series."""
    with Path(file_path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "value"])
        for ts, v in zip(series.timestamps(), series.values.ravel()):
            w.writerow([ts.isoformat(), repr(float(v))])


# -- monthly sector energy ---------------------------------------------------


@dataclass(frozen=True)
class MonthlyEnergyTable:
    rows: tuple  # (year, month, sector, mwh), key-sorted

    def __len__(self):
        return len(self.rows)

    def get(self, year, month, sector):
        return self._lookup.get((year, month, sector))

    @cached_property
    def _lookup(self):
        return {(y, m, s): e for y, m, s, e in self.rows}

    def years(self):
        return sorted({r[0] for r in self.rows})


def parse_demand_table(file_path):
    path = Path(file_path)
    seen = {}
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:4]] != ["year", "month", "sector", "mwh"]:
            raise ParseError("expected header 'year,month,sector,mwh'", line=1, path=path)
        for lineno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            try:
                year, month = int(row[0]), int(row[1])
                sector = row[2].strip().lower()
                mwh = float(row[3])
            except (ValueError, IndexError):
                raise ParseError(f"malformed row {row!r}", line=lineno, path=path) from None
            if not 1 <= month <= 12:
                raise RangeError(f"{path}:{lineno}: month {month} outside 1-12")
            if sector not in SECTORS:
                raise VocabularyError(f"{path}:{lineno}: unknown sector {sector!r}; expected one of {SECTORS}")
            if not math.isfinite(mwh) or mwh < 0:
                raise RangeError(f"{path}:{lineno}: energy must be a non-negative number, got {mwh}")
            key = (year, month, sector)
            if key in seen:
                raise ConflictError(
                    f"{path}: duplicate key {key} on lines {seen[key][0]} and {lineno} "
                    f"({seen[key][1]} vs {mwh} MWh)"
                )
            seen[key] = (lineno, mwh)
    if not seen:
        raise EmptyInputError(f"{path}: no data rows")
    return MonthlyEnergyTable(tuple((*k, v[1]) for k, v in sorted(seen.items())))


def write_demand_table(table, file_path):
    with Path(file_path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["year", "month", "sector", "mwh"])
        for row in table.rows:
            w.writerow([row[0], row[1], row[2], repr(float(row[3]))])


# -- network cases -----------------------------------------------------------

_MATPOWER_BLOCK = re.compile(r"mpc\.(\w+)\s*=\s*(\[.*?\]|\{.*?\}|[^;\n]+)\s*;?", re.S)
_NEEDED = ("baseMVA", "bus", "gen", "branch")
_OPTIONAL = ("gencost", "version")
_MP_TYPES = {1: "PQ", 2: "PV", 3: "slack"}


def _strip_comments(text):
    out = []
    for line in text.splitlines():
        quoted = False
        for i, ch in enumerate(line):
            if ch == "'":
                quoted = not quoted
            elif ch == "%" and not quoted:
                line = line[:i]
                break
        out.append(line)
    return "\n".join(out)


def _matrix(body, name):
    inner = body.strip()[1:-1]
    rows = []
    for chunk in re.split(r"[;\n]", inner):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            rows.append([float(v) for v in re.split(r"[\s,]+", chunk) if v])
        except ValueError as exc:
            raise StructuralError(f"mpc.{name}: non-numeric entry ({exc})") from None
    width = {len(r) for r in rows}
    if len(width) > 1:
        raise StructuralError(f"mpc.{name}: ragged rows")
    return np.array(rows)


def parse_matpower(text, name="case"):
    """Parse MATPOWER version-2 case text into a :class:`NetworkCase`."""
    blocks = {}
    for m in _MATPOWER_BLOCK.finditer(_strip_comments(text)):
        blocks[m.group(1)] = m.group(2)
    for key in _NEEDED:
        if key not in blocks:
            raise StructuralError(f"MATPOWER case lacks mpc.{key}")
    ignored = sorted(set(blocks) - set(_NEEDED) - set(_OPTIONAL))
    warnings = []
    if ignored:
        msg = f"ignoring MATPOWER blocks: {', '.join(ignored)}"
        logger.warning(msg)
        warnings.append(msg)
    base = float(blocks["baseMVA"])
    bus = _matrix(blocks["bus"], "bus")
    gen = _matrix(blocks["gen"], "gen")
    branch = _matrix(blocks["branch"], "branch")

    buses = []
    for r in bus:
        code = int(r[1])
        if code not in _MP_TYPES:
            raise StructuralError(f"bus {int(r[0])}: unsupported MATPOWER bus type {code}")
        buses.append(
            Bus(
                id=int(r[0]), type=_MP_TYPES[code], pd=r[2], qd=r[3], gs=r[4], bs=r[5],
                vm=r[7], va=r[8], base_kv=r[9], vmax=r[11], vmin=r[12],
            )
        )
    gens = [
        Generator(
            bus=int(r[0]), pg=r[1], qg=r[2], qmax=r[3], qmin=r[4], vg=r[5],
            status=int(r[7]), pmax=r[8], pmin=r[9],
        )
        for r in gen
    ]
    branches = [
        Branch(
            f=int(r[0]), t=int(r[1]), r=r[2], x=r[3], b=r[4], rate_a=r[5],
            ratio=r[8], angle=r[9], status=int(r[10]),
        )
        for r in branch
    ]
    costs = None
    if "gencost" in blocks:
        gc = _matrix(blocks["gencost"], "gencost")
        costs = []
        for r in gc[: len(gens)]:
            if int(r[0]) == 2:
                n = int(r[3])
                costs.append(CostCurve(tuple(float(v) for v in r[4 : 4 + n])))
            else:
                logger.warning("piecewise-linear gencost rows are not supported; using the default quadratic")
                costs.append(None)
        if len(costs) < len(gens):
            costs.extend([None] * (len(gens) - len(costs)))
    return NetworkCase(buses, branches, gens, base_mva=base, costs=costs, name=name, warnings=tuple(warnings))


def import_case(file_path):
    """Load a network case; ``.json`` uses the native schema, ``.m`` MATPOWER text."""
    path = Path(file_path)
    if path.suffix.lower() == ".json":
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(str(exc), line=exc.lineno, path=path) from None
        return NetworkCase.from_dict(doc)
    if path.suffix.lower() == ".m":
        return parse_matpower(path.read_text(), name=path.stem)
    raise StructuralError(f"{path}: unrecognised case extension {path.suffix!r}")


def bundled_case_path(name="case118"):
    return Path(__file__).parent / "data" / f"{name}.m"


def load_ieee118():
    return import_case(bundled_case_path("case118"))
