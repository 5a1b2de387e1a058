"""Monte-Carlo wind-placement scans and bus vulnerability ranking.

A scan repeats, for S random choices of wind-connected generators, one AC
power flow per (season, half-hour, wind variation mode). Wind generators
have their dispatched P and Q multiplied by a per-slot scale factor and
inject that fixed amount (PQ behaviour); all other generators keep their
dispatched output and voltage setpoint. Every solved bus voltage is tested
against

* the relative criterion ``|V - V_base| > 0.05 V_base``, with ``V_base`` the
  solved unmodified base case, and
* the absolute criterion ``V`` outside ``[0.94, 1.06]`` p.u.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ArgumentError,
    DegenerateProfileError,
    DivergedError,
    InfeasibleSelectionError,
    SingularJacobianError,
)
from .ingest import SLOTS_PER_DAY
from .powerflow import PF_MAX_ITER, PF_TOL, solve_acpf
from .wind import SEASONS

logger = logging.getLogger(__name__)

APPROACHES = ("season_independent", "season_focused")
MODES = ("mean", "min", "max")
CRITERIA = ("relative", "absolute")
ANNUAL = "annual"
MAX_FAILED_DRAWS = 1000
MAX_RESTARTS = 20


@dataclass(frozen=True)
class ScanConfig:
    """Settings of one scan.

    ``penetration = 0`` with ``tolerance = 0`` places no wind at all, which
    turns the scan into a load-only sweep.
    """

    selections: int = 100
    penetration: float = 0.5
    tolerance: float = 0.05
    seed: int = 0
    criteria: tuple = CRITERIA
    band: tuple = (0.94, 1.06)
    relative_threshold: float = 0.05
    modes: tuple = MODES
    approach: str = "season_focused"
    pf_tol: float = PF_TOL
    pf_max_iter: int = PF_MAX_ITER

    def __post_init__(self):
        object.__setattr__(self, "criteria", tuple(self.criteria))
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(self, "band", tuple(float(b) for b in self.band))
        if int(self.selections) < 1:
            raise ArgumentError("selection count must be at least 1")
        if not 0 <= self.penetration < 1:
            raise ArgumentError(f"penetration {self.penetration} outside [0, 1)")
        if self.tolerance < 0:
            raise ArgumentError("penetration tolerance must be non-negative")
        if not self.band[0] < self.band[1]:
            raise ArgumentError(f"voltage band {self.band} is empty")
        if not self.criteria or set(self.criteria) - set(CRITERIA):
            raise ArgumentError(f"criteria must be drawn from {CRITERIA}")
        if not self.modes or set(self.modes) - set(MODES):
            raise ArgumentError(f"modes must be drawn from {MODES}")
        if self.approach not in APPROACHES:
            raise ArgumentError(f"unknown approach {self.approach!r}")
        if self.approach == "season_independent" and self.modes != ("mean",):
            object.__setattr__(self, "modes", ("mean",))

    @property
    def band_limits(self):
        return max(0.0, self.penetration - self.tolerance), self.penetration + self.tolerance

    def seasons(self):
        return (ANNUAL,) if self.approach == "season_independent" else SEASONS


# -- wind placement ----------------------------------------------------------


@dataclass(frozen=True)
class WindSelection:
    index: int
    generators: tuple       # generator indices
    buses: tuple            # their bus ids
    penetration: float


def _stream(seed, index, restart=0):
    key = (index,) if restart == 0 else (index, restart)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def select_wind_buses(case, config: ScanConfig, selection_index: int) -> WindSelection:
    """Randomly pick wind-connected generators until the capacity share of wind
    first falls inside the penetration band.

    The random stream depends only on ``(config.seed, selection_index)``.
    Draws that would overshoot the band are skipped; after
    ``MAX_FAILED_DRAWS`` skipped draws the stream is reseeded.

    Raises
    ------
    InfeasibleSelectionError
        The band could not be hit within the restart budget.
    """
    arr = case.arrays
    pmax = np.where(arr.gen_on, arr.pmax, 0.0)
    total = pmax.sum()
    if not total > 0:
        raise ArgumentError("case has no generating capacity")
    lo, hi = config.band_limits
    if lo <= 0.0:
        return WindSelection(selection_index, (), (), 0.0)
    eligible = np.flatnonzero(arr.gen_on & (arr.gen_bus != arr.slack) & (pmax > 0))
    for restart in range(MAX_RESTARTS + 1):
        rng = _stream(config.seed, selection_index, restart)
        failed = 0
        while failed < MAX_FAILED_DRAWS:
            chosen, cap = [], 0.0
            for g in rng.permutation(eligible):
                frac = (cap + pmax[g]) / total
                if frac > hi + 1e-12:
                    failed += 1
                    continue
                chosen.append(int(g))
                cap += pmax[g]
                if frac >= lo - 1e-12:
                    chosen.sort()
                    buses = tuple(int(arr.bus_ids[arr.gen_bus[g]]) for g in chosen)
                    return WindSelection(selection_index, tuple(chosen), buses, float(cap / total))
            failed += 1
    raise InfeasibleSelectionError(
        f"selection {selection_index}: no generator subset reaches wind penetration in [{lo:.3f}, {hi:.3f}]"
    )


# -- scale factors -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ScaleFactorTable:
    """Wind scale factors, ``factors[season][mode]`` -> 48 values."""

    approach: str
    factors: dict

    def __post_init__(self):
        for season, per_mode in self.factors.items():
            for mode, f in per_mode.items():
                f = np.asarray(f, dtype=float)
                if f.shape != (SLOTS_PER_DAY,) or np.any(~np.isfinite(f)) or np.any(f < 0):
                    raise DegenerateProfileError(f"{season}/{mode}: scale factors must be 48 finite values >= 0",
                                                 season=season)

    def get(self, season, slot, mode="mean", wind=True):
        """Factor for a 1-based ``slot``; non-wind generators always get 1."""
        if not wind:
            return 1.0
        return float(self.factors[season][mode][slot - 1])

    @property
    def seasons(self):
        return tuple(self.factors)


def _season_numerators(profiles, mode):
    out = {}
    for s in SEASONS:
        p = profiles[s]
        if mode == "mean":
            out[s] = p.normp * p.mp
        elif mode == "max":
            out[s] = (p.normp + p.netmaxv) * p.mxwp
        else:
            # the lower envelope can cross zero; wind output cannot
            out[s] = np.maximum(p.normp - p.netminv, 0.0) * p.mnwp
    return out


def scale_factor(profiles, season, h, mode="mean", approach="season_focused", annual=None, wind=True):
    """Wind scale factor for one seasonal slot (``h`` is 1-based).

    ``season_independent`` returns the annual normalized profile value;
    ``season_focused`` divides the season's numerator by the average (mean
    mode), maximum (max mode) or minimum (min mode) of the four seasons'
    numerators at the same slot.
    """
    if not wind:
        return 1.0
    if approach == "season_independent":
        if annual is None:
            raise ArgumentError("season-independent factors need the annual profile")
        return float(annual.values[h - 1])
    num = _season_numerators(profiles, mode)
    stack = np.array([num[s][h - 1] for s in SEASONS])
    den = {"mean": stack.mean(), "max": stack.max(), "min": stack.min()}[mode]
    if not den > 0:
        culprit = SEASONS[int(np.argmin(stack))]
        raise DegenerateProfileError(
            f"zero {mode}-mode denominator at {culprit} slot {h}", season=culprit, slot=h
        )
    return float(num[season][h - 1] / den)


def build_scale_factors(approach, profiles=None, annual=None, modes=MODES) -> ScaleFactorTable:
    if approach == "season_independent":
        if annual is None:
            raise ArgumentError("season-independent factors need the annual profile")
        return ScaleFactorTable(approach, {ANNUAL: {"mean": np.asarray(annual.values, dtype=float)}})
    if profiles is None or set(SEASONS) - set(profiles):
        raise ArgumentError("season-focused factors need all four seasonal wind profiles")
    table = {
        s: {m: np.array([scale_factor(profiles, s, h, m) for h in range(1, SLOTS_PER_DAY + 1)]) for m in modes}
        for s in SEASONS
    }
    return ScaleFactorTable(approach, table)


# -- the scan ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ViolationReport:
    """Violation counts per bus for every (season, criterion, mode).

    ``counts[season, criterion, mode]`` is an int array over buses,
    ``totals[season, mode]`` the number of converged cases and
    ``diverged[season, mode]`` the number of cases left out because the
    power flow failed.
    """

    bus_ids: np.ndarray
    seasons: tuple
    criteria: tuple
    modes: tuple
    counts: dict
    totals: dict
    diverged: dict
    metadata: dict = field(default_factory=dict)

    def fraction(self, season, criterion, mode):
        total = self.totals[season, mode]
        c = self.counts[season, criterion, mode]
        return c / total if total else np.zeros_like(c, dtype=float)

    def pooled(self, criterion, modes, seasons=None):
        """(counts, total) summed over ``seasons`` and ``modes``."""
        seasons = self.seasons if seasons is None else seasons
        counts = sum(self.counts[s, criterion, m] for s in seasons for m in modes)
        total = sum(self.totals[s, m] for s in seasons for m in modes)
        return counts, total

    def rows(self):
        """Long-format rows ``(bus, season, criterion, mode, count, total, fraction)``."""
        for s in self.seasons:
            for c in self.criteria:
                for m in self.modes:
                    total = self.totals[s, m]
                    for b, n in zip(self.bus_ids, self.counts[s, c, m]):
                        yield int(b), s, c, m, int(n), int(total), (n / total if total else 0.0)


def base_case_voltages(case, config: ScanConfig | None = None):
    """Solved voltage magnitudes of the unmodified case (reference of the
    relative criterion)."""
    config = config or ScanConfig()
    return solve_acpf(case, tol=config.pf_tol, max_iter=config.pf_max_iter).vm


def _scan_selection(job):
    case, schedules, factors, config, selection, vbase = job
    nb = case.n_bus
    wind = np.zeros(case.n_gen, dtype=bool)
    wind[list(selection.generators)] = True
    lo, hi = config.band
    counts, totals, diverged = {}, {}, {}
    for season in config.seasons():
        sched = schedules[season]
        v_sched = sched.v
        for m in config.modes:
            for c in config.criteria:
                counts[season, c, m] = np.zeros(nb, dtype=np.int64)
            totals[season, m] = 0
            diverged[season, m] = 0
            for h in range(SLOTS_PER_DAY):
                f = factors.factors[season][m][h]
                pg = np.where(wind, sched.pg[h] * f, sched.pg[h])
                qg = np.where(wind, sched.qg[h] * f, sched.qg[h])
                try:
                    sol = solve_acpf(case, pd=sched.pd[h], qd=sched.qd[h], pg=pg, qg=qg, fixed_q=wind,
                                     v0=v_sched[h], tol=config.pf_tol, max_iter=config.pf_max_iter)
                except (DivergedError, SingularJacobianError):
                    diverged[season, m] += 1
                    continue
                totals[season, m] += 1
                vm = sol.vm
                if "relative" in config.criteria:
                    counts[season, "relative", m] += np.abs(vm - vbase) > config.relative_threshold * vbase
                if "absolute" in config.criteria:
                    counts[season, "absolute", m] += (vm < lo) | (vm > hi)
    return counts, totals, diverged


def run_scan(case, schedules, factors: ScaleFactorTable, config: ScanConfig, *,
             selections=None, base_vm=None, workers=1, metadata=None) -> ViolationReport:
    """Run every (selection, season, slot, mode) power flow and count violations.

    Parameters
    ----------
    case : NetworkCase
    schedules : dict
        Season -> DispatchSchedule (``"annual"`` for the season-independent
        approach).
    factors : ScaleFactorTable
    config : ScanConfig
    selections : list of WindSelection, optional
        Defaults to ``select_wind_buses`` for indices ``0 .. S-1``.
    base_vm : array_like, optional
        Reference voltages of the relative criterion.
    workers : int
        Worker processes. Results do not depend on this number.
    """
    seasons = config.seasons()
    for s in seasons:
        if s not in schedules:
            raise ArgumentError(f"no dispatch schedule for {s}")
        if s not in factors.factors:
            raise ArgumentError(f"no scale factors for {s}")
        missing = set(config.modes) - set(factors.factors[s])
        if missing:
            raise ArgumentError(f"scale factors for {s} lack modes {sorted(missing)}")
        if schedules[s].vm.shape != (SLOTS_PER_DAY, case.n_bus):
            raise ArgumentError(f"dispatch schedule for {s} does not match the case")
    if selections is None:
        selections = [select_wind_buses(case, config, i) for i in range(config.selections)]
    vbase = base_case_voltages(case, config) if base_vm is None else np.asarray(base_vm, dtype=float)
    jobs = [(case, schedules, factors, config, sel, vbase) for sel in selections]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_scan_selection, jobs))
    else:
        parts = [_scan_selection(j) for j in jobs]

    nb = case.n_bus
    counts = {(s, c, m): np.zeros(nb, dtype=np.int64) for s in seasons for c in config.criteria for m in config.modes}
    totals = {(s, m): 0 for s in seasons for m in config.modes}
    diverged = dict(totals)
    for c_part, t_part, d_part in parts:
        for k, v in c_part.items():
            counts[k] += v
        for k, v in t_part.items():
            totals[k] += v
        for k, v in d_part.items():
            diverged[k] += v
    if any(diverged.values()):
        logger.warning("%d power flows diverged and were excluded", sum(diverged.values()))
    meta = {
        "approach": config.approach,
        "seed": config.seed,
        "selections": config.selections,
        "penetration": config.penetration,
        "tolerance": config.tolerance,
        "band": list(config.band),
        "relative_threshold": config.relative_threshold,
        "pf_tol": config.pf_tol,
        "pf_max_iter": config.pf_max_iter,
        "wind_selections": [
            {"index": s.index, "buses": list(s.buses), "penetration": s.penetration} for s in selections
        ],
    }
    meta.update(metadata or {})
    return ViolationReport(
        bus_ids=case.arrays.bus_ids.copy(), seasons=seasons, criteria=config.criteria, modes=config.modes,
        counts=counts, totals=totals, diverged=diverged, metadata=meta,
    )


# -- ranking -----------------------------------------------------------------


@dataclass(frozen=True)
class RankEntry:
    rank: int
    bus: int
    wv: float
    alpha1: int | None
    pv1: float | None
    alpha2: int | None
    pv2: float | None
    group: str      # "both", "case1" or "case2"


@dataclass(frozen=True)
class VulnerabilityRanking:
    entries: tuple

    def __len__(self):
        return len(self.entries)

    def top(self, n=10):
        return self.entries[:n]


def _alpha(bus_ids, counts):
    """1-based rank by descending count, ties to the lower bus id; 0-count buses unranked."""
    order = sorted((i for i in range(len(bus_ids)) if counts[i] > 0), key=lambda i: (-counts[i], bus_ids[i]))
    return {i: r for r, i in enumerate(order, start=1)}


def rank_from_counts(bus_ids, count1, total1, count2, total2) -> VulnerabilityRanking:
    """Order buses by the weighted violation index ``alpha1/PV1 + alpha2/PV2``.

    Case 1 and Case 2 are two independent violation tallies. Buses violating
    in both come first (ascending index), then buses violating in only one,
    ordered by their single term. Lower means more vulnerable.
    """
    bus_ids = [int(b) for b in bus_ids]
    count1, count2 = np.asarray(count1), np.asarray(count2)
    a1, a2 = _alpha(bus_ids, count1), _alpha(bus_ids, count2)
    both, single = [], []
    for i, b in enumerate(bus_ids):
        pv1 = count1[i] / total1 if i in a1 else None
        pv2 = count2[i] / total2 if i in a2 else None
        if pv1 is None and pv2 is None:
            continue
        terms = [a / pv for a, pv in ((a1.get(i), pv1), (a2.get(i), pv2)) if pv is not None]
        group = "both" if len(terms) == 2 else ("case1" if pv1 is not None else "case2")
        item = (float(sum(terms)), b, a1.get(i), pv1, a2.get(i), pv2, group)
        (both if group == "both" else single).append(item)
    ordered = sorted(both, key=lambda t: (t[0], t[1])) + sorted(single, key=lambda t: (t[0], t[1]))
    return VulnerabilityRanking(tuple(
        RankEntry(rank, b, wv, al1, None if p1 is None else float(p1), al2, None if p2 is None else float(p2), g)
        for rank, (wv, b, al1, p1, al2, p2, g) in enumerate(ordered, start=1)
    ))


def rank_vulnerability(report: ViolationReport) -> VulnerabilityRanking:
    """Rank buses of a season-focused report.

    Case 1 pools relative-criterion violations of the mean mode over all
    seasons; Case 2 pools absolute-band violations of the min and max modes.
    """
    if "relative" not in report.criteria or "absolute" not in report.criteria:
        raise ArgumentError("ranking needs both the relative and the absolute criterion")
    if "mean" not in report.modes:
        raise ArgumentError("ranking needs mean-mode results")
    case2_modes = [m for m in ("min", "max") if m in report.modes] or ["mean"]
    c1, t1 = report.pooled("relative", ["mean"])
    c2, t2 = report.pooled("absolute", case2_modes)
    return rank_from_counts(report.bus_ids, c1, t1, c2, t2)
