"""Produce the IEEE 118-bus reference voltages with PYPOWER.

Run once by a maintainer; the JSON output is checked in at
``tests/fixtures/case118_reference.json`` and compared against the
toolkit's own solver in the test-suite. PYPOWER is a dev-only dependency.

PYPOWER's ``runpf`` reactive-limit loop fails on current numpy, so the
limit handling here drives PYPOWER's Newton solver (``newtonpf``) and result
routine (``pfsoln``) directly: every generator outside its reactive range
is fixed at the violated limit and its bus becomes PQ, then the flow is
re-solved, until no limit is violated. Angles are reported relative to the
slack bus.
"""

import json
import sys
from pathlib import Path

import numpy as np
from pypower.bustypes import bustypes
from pypower.case118 import case118
from pypower.ext2int import ext2int
from pypower.idx_brch import PF
from pypower.idx_bus import BUS_TYPE, PD, PQ, QD, REF, VA, VM
from pypower.idx_gen import GEN_BUS, GEN_STATUS, PG, QG, QMAX, QMIN, VG
from pypower.makeSbus import makeSbus
from pypower.makeYbus import makeYbus
from pypower.newtonpf import newtonpf
from pypower.pfsoln import pfsoln
from pypower.ppoption import ppoption


def solve(enforce_q_limits):
    ppc = ext2int(case118())
    base, bus, gen = ppc["baseMVA"], ppc["bus"], ppc["gen"]
    # room for the flow columns PF, QF, PT, QT
    branch = np.c_[ppc["branch"], np.zeros((ppc["branch"].shape[0], 4))]
    opt = ppoption(PF_TOL=1e-10, PF_MAX_IT=30, VERBOSE=0, OUT_ALL=0)
    ybus, yf, yt = makeYbus(base, bus, branch)
    fixed = np.zeros(gen.shape[0], dtype=bool)
    limited = []
    while True:
        ref, pv, pq = bustypes(bus, gen)
        on = np.flatnonzero(gen[:, GEN_STATUS] > 0)
        gbus = gen[on, GEN_BUS].astype(int)
        v0 = bus[:, VM] * np.exp(1j * np.deg2rad(bus[:, VA]))
        v0[gbus] = gen[on, VG] / np.abs(v0[gbus]) * v0[gbus]
        sbus = makeSbus(base, bus, gen)
        v, ok, _ = newtonpf(ybus, sbus, v0, ref, pv, pq, opt)
        if not ok:
            raise RuntimeError("reference power flow did not converge")
        bus, gen, branch = pfsoln(base, bus, gen, branch, ybus, yf, yt, v, ref, pv, pq)
        if not enforce_q_limits:
            break
        gbus_all = gen[:, GEN_BUS].astype(int)
        cand = (gen[:, GEN_STATUS] > 0) & (bus[gbus_all, BUS_TYPE] != REF) & ~fixed
        over = cand & (gen[:, QG] > gen[:, QMAX] + 1e-4)
        under = cand & (gen[:, QG] < gen[:, QMIN] - 1e-4)
        if not (over.any() or under.any()):
            break
        for g in np.flatnonzero(over | under):
            lim = gen[g, QMAX] if over[g] else gen[g, QMIN]
            b = gbus_all[g]
            # a fixed-Q generator behaves as a negative load at its bus
            bus[b, QD] -= lim
            bus[b, PD] -= gen[g, PG]
            gen[g, GEN_STATUS] = 0
            gen[g, QG] = lim
            fixed[g] = True
            limited.append(int(g))
        for b in np.unique(gbus_all[fixed]):
            if not np.any((gen[:, GEN_STATUS] > 0) & (gbus_all == b)):
                bus[b, BUS_TYPE] = PQ
        bus[:, VM] = np.abs(v)
        bus[:, VA] = np.rad2deg(np.angle(v))
    slack = int(np.flatnonzero(bus[:, BUS_TYPE] == REF)[0])
    va = np.deg2rad(bus[:, VA] - bus[slack, VA])
    va = (va + np.pi) % (2 * np.pi) - np.pi
    return {
        "vm": [float(x) for x in bus[:, VM]],
        "va_rad": [float(x) for x in va],
        "q_limited_generators": sorted(limited),
        "branch_pf_mw": [float(x) for x in branch[:, PF]],
    }


def main(out):
    doc = {
        "source": "PYPOWER newtonpf, tolerance 1e-10",
        "case": "IEEE 118-bus",
        "angles": "radians, relative to the slack bus",
        "without_q_limits": solve(False),
        "with_q_limits": solve(True),
    }
    Path(out).write_text(json.dumps(doc, indent=1))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/fixtures/case118_reference.json")
