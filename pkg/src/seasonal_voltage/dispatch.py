"""Per-half-hour generator injections from a loss-iterated economic dispatch.

This is the stand-in for a full AC optimal power flow. Each round

1. splits demand plus the current loss estimate among generators at equal
   incremental cost, within [Pmin, Pmax];
2. solves the AC power flow with that dispatch (the slack generator absorbs
   the mismatch, generator reactive limits enforced);
3. re-estimates losses from the solution,

and stops once the total dispatched power moves by less than ``tol`` p.u.
Voltage limits are deliberately not enforced.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import ArgumentError, DivergedError, InfeasibleDispatchError, NumericalError
from .ingest import SLOTS_PER_DAY
from .powerflow import PF_MAX_ITER, PF_TOL, solve_acpf

logger = logging.getLogger(__name__)

LOSS_TOL = 1e-6         # p.u. change in total dispatch between rounds
MAX_LOSS_ROUNDS = 25
_LAMBDA_ITER = 200


def _output_at(curve, pmin, pmax, lam):
    """Generator output minimising cost(p) - lam * p on [pmin, pmax]."""
    c = np.trim_zeros(np.asarray(curve.coeffs, dtype=float), "f")
    if c.size <= 1:
        return pmax if lam > 0 else pmin
    if c.size == 2:
        return pmax if lam > c[0] else pmin
    if c.size == 3 and c[0] > 0:
        return float(np.clip((lam - c[1]) / (2 * c[0]), pmin, pmax))
    if curve.marginal(pmin) >= lam:
        return pmin
    if curve.marginal(pmax) <= lam:
        return pmax
    return brentq(lambda p: curve.marginal(p) - lam, pmin, pmax)


def _response(costs, pmin, pmax):
    """Vectorised p(lam) for quadratic and linear costs; per-unit fallback otherwise."""
    coeffs = [np.trim_zeros(np.asarray(c.coeffs, dtype=float), "f") for c in costs]
    if all(c.size <= 3 for c in coeffs):
        padded = np.array([np.r_[np.zeros(3 - c.size), c] for c in coeffs])
        a, b = padded[:, 0], padded[:, 1]
        if np.all(a >= 0):
            quad = a > 0
            safe_a = np.where(quad, a, 1.0)

            def outputs(lam):
                step = np.where(lam > b, pmax, pmin)
                return np.where(quad, np.clip((lam - b) / (2 * safe_a), pmin, pmax), step)

            return outputs
    return lambda lam: np.array([_output_at(c, a, b, lam) for c, a, b in zip(costs, pmin, pmax)])


def economic_dispatch(costs, pmin, pmax, demand):
    """Equal-incremental-cost dispatch of ``demand`` (same units as the limits).

    Parameters
    ----------
    costs : sequence of CostCurve
        Convex polynomial costs.
    pmin, pmax : array_like
    demand : float

    Returns
    -------
    ndarray
        Outputs summing to ``demand`` (to rounding).

    Raises
    ------
    InfeasibleDispatchError
        ``demand`` lies outside [sum(pmin), sum(pmax)].

    Notes
    -----
    The system incremental cost is bracketed and bisected. At the final
    bracket the outputs at both ends are blended linearly so the balance
    closes exactly; this also splits load among linear-cost units that sit
    exactly at the clearing price.
    """
    pmin = np.asarray(pmin, dtype=float)
    pmax = np.asarray(pmax, dtype=float)
    lo_total, hi_total = pmin.sum(), pmax.sum()
    if demand > hi_total * (1 + 1e-12) or demand < lo_total * (1 - 1e-12):
        raise InfeasibleDispatchError(
            f"demand {demand:.6g} outside the feasible range [{lo_total:.6g}, {hi_total:.6g}]"
        )
    if np.isclose(hi_total, lo_total):
        return pmax.copy()

    outputs = _response(costs, pmin, pmax)
    lam_lo = min(float(c.marginal(a)) for c, a in zip(costs, pmin)) - 1.0
    lam_hi = max(float(c.marginal(b)) for c, b in zip(costs, pmax)) + 1.0
    p_lo, p_hi = outputs(lam_lo), outputs(lam_hi)
    for _ in range(_LAMBDA_ITER):
        if lam_hi - lam_lo <= 1e-13 * max(1.0, abs(lam_hi)):
            break
        mid = 0.5 * (lam_lo + lam_hi)
        p_mid = outputs(mid)
        if p_mid.sum() < demand:
            lam_lo, p_lo = mid, p_mid
        else:
            lam_hi, p_hi = mid, p_mid
    gap = p_hi.sum() - p_lo.sum()
    w = 0.0 if gap <= 0 else (demand - p_lo.sum()) / gap
    return p_lo + w * (p_hi - p_lo)


def scaled_loads(case, load_fraction, allocation=None):
    """Per-bus (Pd, Qd) in MW/MVAr at ``load_fraction`` percent of the base load.

    ``allocation`` gives each bus's share of the total active load (summing to
    1); by default the base case's own distribution is kept. Each bus keeps its
    base Qd/Pd ratio; buses with no active load scale their Qd by the
    fraction.
    """
    if not 0 < load_fraction <= 150:
        raise ArgumentError(f"load fraction {load_fraction} outside (0, 150] percent")
    f = load_fraction / 100.0
    pd0 = np.array([b.pd for b in case.buses], dtype=float)
    qd0 = np.array([b.qd for b in case.buses], dtype=float)
    if allocation is None:
        return pd0 * f, qd0 * f
    w = np.asarray(allocation, dtype=float)
    if w.shape != pd0.shape or np.any(w < 0) or not np.isclose(w.sum(), 1.0, atol=1e-9):
        raise ArgumentError("allocation must hold one non-negative weight per bus, summing to 1")
    pd = f * pd0.sum() * w
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(pd0 != 0, qd0 / pd0, 0.0)
    qd = np.where(pd0 != 0, pd * ratio, qd0 * f)
    return pd, qd


@dataclass(frozen=True, eq=False)
class DispatchPoint:
    pg: np.ndarray      # MW per generator
    qg: np.ndarray      # MVAr per generator
    pd: np.ndarray      # MW per bus
    qd: np.ndarray      # MVAr per bus
    solution: object    # PFSolution at the dispatched point
    losses: float       # MW
    rounds: int


def dispatch_opf(case, load_fraction, allocation=None, *, v0=None, tol=LOSS_TOL,
                 pf_tol=PF_TOL, pf_max_iter=PF_MAX_ITER) -> DispatchPoint:
    """Generator injections for one load level.

    Parameters
    ----------
    case : NetworkCase
    load_fraction : float
        Percent of the base-case load, in (0, 150].
    allocation : array_like, optional
        Per-bus share of the total active load.
    v0 : array_like of complex, optional
        Warm start for the first power flow.
    tol : float
        Convergence threshold on the change of total dispatch, p.u.
    """
    arr = case.arrays
    base = arr.base_mva
    pd, qd = scaled_loads(case, load_fraction, allocation)
    on = arr.gen_on
    costs = [c for c, o in zip(case.cost_curves(), on) if o]
    pmin = arr.pmin[on] * base
    pmax = arr.pmax[on] * base
    demand = pd.sum()
    losses = 0.0
    total = None
    pg = np.zeros(case.n_gen)
    v = v0
    for rounds in range(1, MAX_LOSS_ROUNDS + 1):
        pg[on] = economic_dispatch(costs, pmin, pmax, demand + losses)
        sol = solve_acpf(case, pd=pd, qd=qd, pg=pg, v0=v, tol=pf_tol, max_iter=pf_max_iter)
        v = sol.v
        new_total = sol.pg[on].sum()
        losses = new_total - demand
        if total is not None and abs(new_total - total) < tol * base:
            return DispatchPoint(sol.pg, sol.qg, pd, qd, sol, losses, rounds)
        total = new_total
    raise DivergedError(f"loss iteration did not settle in {MAX_LOSS_ROUNDS} rounds")


@dataclass(frozen=True, eq=False)
class DispatchSchedule:
    """Generator injections for the 48 half-hours of one season's normative day.

    Arrays are indexed ``[slot - 1, generator]`` or ``[slot - 1, bus]``.
    """

    season: str
    load_percent: np.ndarray
    pg: np.ndarray
    qg: np.ndarray
    pd: np.ndarray
    qd: np.ndarray
    vm: np.ndarray
    va: np.ndarray
    losses: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def v(self):
        return self.vm * np.exp(1j * self.va)

    def closure(self):
        """Per-slot |sum Pg - (load + losses)| in MW."""
        return np.abs(self.pg.sum(axis=1) - self.pd.sum(axis=1) - self.losses)


def build_dispatch_schedule(case, load_profile, allocation=None, *, season=None,
                            pf_tol=PF_TOL, pf_max_iter=PF_MAX_ITER) -> DispatchSchedule:
    """Run :func:`dispatch_opf` at every slot of ``load_profile``.

    Each slot is warm-started from the previous slot's solution.

    Raises
    ------
    InfeasibleDispatchError
        Naming the first slot that could not be dispatched.
    """
    pct = np.asarray(load_profile.percent, dtype=float)
    if pct.shape != (SLOTS_PER_DAY,):
        raise ArgumentError(f"load profile needs {SLOTS_PER_DAY} slots")
    season = season or load_profile.season
    rows = []
    v = None
    for h, frac in enumerate(pct, start=1):
        try:
            point = dispatch_opf(case, frac, allocation, v0=v, pf_tol=pf_tol, pf_max_iter=pf_max_iter)
        except NumericalError as exc:
            if isinstance(exc, InfeasibleDispatchError):
                raise InfeasibleDispatchError(f"{season} slot {h}: {exc}", slot=h) from exc
            raise type(exc)(f"{season} slot {h}: {exc}") from exc
        v = point.solution.v
        rows.append(point)
    stack = lambda get: np.array([get(p) for p in rows])  # noqa: E731
    return DispatchSchedule(
        season=season,
        load_percent=pct.copy(),
        pg=stack(lambda p: p.pg),
        qg=stack(lambda p: p.qg),
        pd=stack(lambda p: p.pd),
        qd=stack(lambda p: p.qd),
        vm=stack(lambda p: p.solution.vm),
        va=stack(lambda p: p.solution.va),
        losses=stack(lambda p: p.losses),
        metadata={"rounds": [p.rounds for p in rows], "q_limited": [list(p.solution.q_limited) for p in rows]},
    )
