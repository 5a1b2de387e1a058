"""Newton-Raphson AC power flow in polar coordinates.

The admittance model covers series impedance, line charging, off-nominal
taps, phase shifters and bus shunts. Generator reactive limits are enforced
by converting violating PV buses to PQ and re-solving.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import MatrixRankWarning, splu

from .errors import DivergedError, SingularJacobianError

logger = logging.getLogger(__name__)

PF_TOL = 1e-8
PF_MAX_ITER = 30
Q_LIMIT_SLACK = 1e-6  # p.u. tolerance before a reactive limit counts as violated


def make_ybus(case):
    """Bus admittance matrix and branch from/to admittance matrices (p.u.)."""
    arr = case.arrays
    nb = case.n_bus
    br = case.branches
    nl = len(br)
    f = np.array([arr.index[b.f] for b in br], dtype=int)
    t = np.array([arr.index[b.t] for b in br], dtype=int)
    stat = np.array([1.0 if b.status else 0.0 for b in br])
    z = np.array([complex(b.r, b.x) for b in br])
    ys = stat / z
    bc = stat * np.array([b.b for b in br])
    tap = np.array([b.ratio if b.ratio else 1.0 for b in br], dtype=complex)
    tap *= np.exp(1j * np.deg2rad([b.angle for b in br]))
    ytt = ys + 0.5j * bc
    yff = ytt / (tap * np.conj(tap))
    yft = -ys / np.conj(tap)
    ytf = -ys / tap
    ysh = arr.gs + 1j * arr.bs
    rows = np.r_[np.arange(nl), np.arange(nl)]
    yf = sp.csr_matrix((np.r_[yff, yft], (rows, np.r_[f, t])), shape=(nl, nb))
    yt = sp.csr_matrix((np.r_[ytf, ytt], (rows, np.r_[f, t])), shape=(nl, nb))
    cf = sp.csr_matrix((np.ones(nl), (np.arange(nl), f)), shape=(nl, nb))
    ct = sp.csr_matrix((np.ones(nl), (np.arange(nl), t)), shape=(nl, nb))
    ybus = (cf.T @ yf + ct.T @ yt + sp.diags(ysh)).tocsr()
    return ybus, yf, yt


class JacobianPattern:
    """Sparsity bookkeeping for the reduced Jacobian of one bus-type split.

    Entries are evaluated only at the nonzeros of Ybus:

    * dS_i/dVa_j = j V_i (conj(I_i) d_ij - conj(Y_ij V_j))
    * dS_i/dVm_j = V_i conj(Y_ij) conj(V_j) / |V_j| + conj(I_i) V_i / |V_i| d_ij
    """

    def __init__(self, ybus, pvpq, pq):
        coo = ybus.tocoo()
        self.row, self.col, self.y = coo.row, coo.col, coo.data
        self.diag = self.row == self.col
        nb = ybus.shape[0]
        npvpq = len(pvpq)
        self.size = npvpq + len(pq)
        eq_p = np.full(nb, -1)
        eq_p[pvpq] = np.arange(npvpq)
        eq_q = np.full(nb, -1)
        eq_q[pq] = npvpq + np.arange(len(pq))
        var_a = eq_p
        var_m = eq_q
        # (row equation, column variable, take real part?, derivative kind)
        blocks = [(eq_p, var_a, True, 0), (eq_p, var_m, True, 1), (eq_q, var_a, False, 0), (eq_q, var_m, False, 1)]
        self.blocks = []
        rows, cols = [], []
        for eq, var, real, kind in blocks:
            mask = (eq[self.row] >= 0) & (var[self.col] >= 0)
            self.blocks.append((mask, real, kind))
            rows.append(eq[self.row[mask]])
            cols.append(var[self.col[mask]])
        self.rows = np.concatenate(rows)
        self.cols = np.concatenate(cols)

    def evaluate(self, v):
        i, j, y = self.row, self.col, self.y
        ibus = np.zeros(len(v), dtype=complex)
        np.add.at(ibus, i, y * v[j])
        yv = y * v[j]
        d_va = -1j * v[i] * np.conj(yv)
        d_va[self.diag] += 1j * v[i[self.diag]] * np.conj(ibus[i[self.diag]])
        vn = v / np.abs(v)
        d_vm = v[i] * np.conj(y * vn[j])
        d_vm[self.diag] += np.conj(ibus[i[self.diag]]) * vn[i[self.diag]]
        data = []
        for mask, real, kind in self.blocks:
            d = (d_va, d_vm)[kind][mask]
            data.append(d.real if real else d.imag)
        return sp.csc_matrix((np.concatenate(data), (self.rows, self.cols)), shape=(self.size, self.size))


def jacobian(ybus, v, pvpq, pq):
    """Reduced Jacobian d[P(pvpq); Q(pq)] / d[angle(pvpq); |V|(pq)]."""
    return JacobianPattern(ybus, pvpq, pq).evaluate(np.asarray(v, dtype=complex))


def mismatch(ybus, v, sbus, pvpq, pq):
    mis = v * np.conj(ybus @ v) - sbus
    return np.r_[mis[pvpq].real, mis[pq].imag]


@dataclass(frozen=True, eq=False)
class PFSolution:
    vm: np.ndarray
    va: np.ndarray          # radians
    pg: np.ndarray          # MW per generator
    qg: np.ndarray          # MVAr per generator
    iterations: int
    mismatch: float         # p.u., max abs over the reduced equations
    converged: bool
    bus_type: np.ndarray
    q_limited: tuple = ()
    trace: list = field(default_factory=list)

    @property
    def v(self):
        return self.vm * np.exp(1j * self.va)


def _newton(ybus, sbus, v, pvpq, pq, tol, max_iter, labels):
    npvpq = len(pvpq)
    pattern = JacobianPattern(ybus, pvpq, pq)
    va = np.angle(v)
    vm = np.abs(v)
    f = mismatch(ybus, v, sbus, pvpq, pq)
    norm = np.max(np.abs(f)) if f.size else 0.0
    trace = [norm]
    it = 0
    while norm >= tol and it < max_iter:
        it += 1
        jac = pattern.evaluate(v)
        dx = _solve(jac, -f, labels)
        va[pvpq] += dx[:npvpq]
        vm[pq] += dx[npvpq:]
        v = vm * np.exp(1j * va)
        f = mismatch(ybus, v, sbus, pvpq, pq)
        norm = np.max(np.abs(f))
        trace.append(norm)
        if not np.isfinite(norm):
            break
    return v, norm < tol, it, trace


def _solve(jac, rhs, labels):
    with warnings.catch_warnings():
        warnings.simplefilter("error", MatrixRankWarning)
        try:
            dx = splu(jac).solve(rhs)
        except (RuntimeError, MatrixRankWarning):
            dx = None
    if dx is None or not np.all(np.isfinite(dx)):
        pivot = _zero_pivot(jac.toarray())
        raise SingularJacobianError(f"singular Jacobian at pivot {pivot} ({labels[pivot]})", pivot=labels[pivot])
    return dx


def _zero_pivot(dense):
    _, _, u = scipy.linalg.lu(dense)
    return int(np.argmin(np.abs(np.diag(u))))


def solve_acpf(case, *, pd=None, qd=None, pg=None, qg=None, fixed_q=None, v0=None,
               tol=PF_TOL, max_iter=PF_MAX_ITER, enforce_q_limits=True):
    """Solve the AC power flow.

    Parameters
    ----------
    case : NetworkCase
    pd, qd : array_like, optional
        Per-bus load (MW, MVAr); defaults to the case values.
    pg, qg : array_like, optional
        Per-generator output (MW, MVAr). ``qg`` only matters for generators
        in ``fixed_q``.
    fixed_q : array_like of bool, optional
        Generators that inject a fixed ``qg`` instead of regulating voltage.
    v0 : array_like of complex, optional
        Warm start. Regulated magnitudes are reset to their setpoints.
    enforce_q_limits : bool
        Convert PV buses whose generators exceed reactive limits to PQ.

    Returns
    -------
    PFSolution

    Raises
    ------
    DivergedError
        No convergence within ``max_iter`` Newton steps.
    SingularJacobianError
    """
    arr = case.arrays
    base = arr.base_mva
    ybus = case.ybus
    nb, ng = case.n_bus, case.n_gen
    pd = arr.pd if pd is None else np.asarray(pd, dtype=float) / base
    qd = arr.qd if qd is None else np.asarray(qd, dtype=float) / base
    pg = arr.pg.copy() if pg is None else np.asarray(pg, dtype=float) / base
    qg = arr.qg.copy() if qg is None else np.asarray(qg, dtype=float) / base
    fixed = np.zeros(ng, dtype=bool) if fixed_q is None else np.asarray(fixed_q, dtype=bool).copy()
    on = arr.gen_on
    gbus = arr.gen_bus
    slack = arr.slack
    cg = sp.csr_matrix((on.astype(float), (gbus, np.arange(ng))), shape=(nb, ng))

    if v0 is None:
        v = np.ones(nb, dtype=complex)
    else:
        v = np.asarray(v0, dtype=complex).copy()

    limited = []
    total_it = 0
    trace = []
    while True:
        ctrl = on & ~fixed
        ctrl_bus = np.zeros(nb, dtype=bool)
        ctrl_bus[gbus[ctrl]] = True
        ctrl_bus[slack] = True
        pv = np.flatnonzero(ctrl_bus & (np.arange(nb) != slack))
        pq = np.flatnonzero(~ctrl_bus)
        pvpq = np.r_[pv, pq]
        # regulated magnitudes from the first controlling generator at each bus
        vm = np.abs(v)
        for g in np.flatnonzero(ctrl)[::-1]:
            vm[gbus[g]] = arr.vg[g]
        slack_gens = np.flatnonzero(on & (gbus == slack))
        if slack_gens.size:
            vm[slack] = arr.vg[slack_gens[0]]
        va = np.angle(v) - np.angle(v[slack])
        v = vm * np.exp(1j * va)
        qinj = cg @ np.where(fixed, qg, 0.0)
        sbus = cg @ pg - pd + 1j * (qinj - qd)
        labels = [(int(arr.bus_ids[b]), "angle") for b in pvpq] + [(int(arr.bus_ids[b]), "vm") for b in pq]
        v, ok, it, tr = _newton(ybus, sbus, v, pvpq, pq, tol, max_iter, labels)
        total_it += it
        trace.extend(tr)
        if not ok:
            raise DivergedError(
                f"power flow did not converge in {max_iter} iterations (last mismatch {tr[-1]:.3g} p.u.)",
                trace=trace,
            )
        s_calc = v * np.conj(ybus @ v)
        qg = _distribute_q(s_calc, qd, qg, fixed, ctrl, gbus, arr, nb)
        if not enforce_q_limits:
            break
        cand = ctrl & (gbus != slack)
        over = cand & (qg > arr.qmax + Q_LIMIT_SLACK)
        under = cand & (qg < arr.qmin - Q_LIMIT_SLACK)
        if not (over.any() or under.any()):
            break
        qg = np.where(over, arr.qmax, np.where(under, arr.qmin, qg))
        fixed = fixed | over | under
        limited.extend(int(g) for g in np.flatnonzero(over | under))

    # slack generators absorb the active imbalance; first one takes it all
    pg = pg.copy()
    slack_gens = np.flatnonzero(on & (gbus == slack))
    if slack_gens.size:
        others = float((cg[slack] @ pg).ravel()[0]) - pg[slack_gens].sum()
        pg[slack_gens] = 0.0
        pg[slack_gens[0]] = s_calc[slack].real + pd[slack] - others
    final_f = tr[-1]
    bus_type = np.full(nb, "PQ", dtype=object)
    bus_type[pv] = "PV"
    bus_type[slack] = "slack"
    return PFSolution(
        vm=np.abs(v), va=np.angle(v), pg=pg * base, qg=qg * base, iterations=total_it,
        mismatch=float(final_f), converged=True, bus_type=bus_type, q_limited=tuple(limited), trace=trace,
    )


def _distribute_q(s_calc, qd, qg, fixed, ctrl, gbus, arr, nb):
    """Share each regulated bus's reactive output among its controlling
    generators in proportion to their reactive ranges."""
    qg = np.where(ctrl, 0.0, qg)
    need = s_calc.imag + qd
    for b in np.unique(gbus[ctrl]):
        gens = np.flatnonzero(ctrl & (gbus == b))
        fixed_here = qg[(gbus == b) & fixed & arr.gen_on].sum()
        total = need[b] - fixed_here
        span = arr.qmax[gens] - arr.qmin[gens]
        if len(gens) == 1 or not np.all(np.isfinite(span)) or span.sum() <= 0:
            qg[gens] = total / len(gens)
        else:
            qg[gens] = arr.qmin[gens] + span / span.sum() * (total - arr.qmin[gens].sum())
    return qg


def max_bus_mismatch(case, sol, pd=None, qd=None):
    """Largest per-bus complex power mismatch (p.u.) of a solution, recomputed
    from scratch; independent of the solver's reduced equations."""
    arr = case.arrays
    base = arr.base_mva
    pd = arr.pd if pd is None else np.asarray(pd, dtype=float) / base
    qd = arr.qd if qd is None else np.asarray(qd, dtype=float) / base
    gen = np.zeros(case.n_bus, dtype=complex)
    np.add.at(gen, arr.gen_bus[arr.gen_on], (sol.pg + 1j * sol.qg)[arr.gen_on] / base)
    s_calc = sol.v * np.conj(case.ybus @ sol.v)
    return float(np.max(np.abs(s_calc - (gen - pd - 1j * qd))))
