"""Network case model and its native JSON schema.

Quantities are stored in the units MATPOWER uses (MW, MVAr, p.u. impedances
on the system base, degrees for angles); :meth:`NetworkCase.arrays` exposes
per-unit numpy views for the solvers.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import CaseReferenceError, ConnectivityError, StructuralError

logger = logging.getLogger(__name__)

BUS_TYPES = ("PQ", "PV", "slack")
CASE_SCHEMA = "seasonal_voltage.case"
CASE_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Bus:
    id: int
    type: str
    pd: float
    qd: float
    vm: float = 1.0
    va: float = 0.0
    vmin: float = 0.94
    vmax: float = 1.06
    gs: float = 0.0
    bs: float = 0.0
    base_kv: float = 0.0


@dataclass(frozen=True)
class Branch:
    f: int
    t: int
    r: float
    x: float
    b: float = 0.0
    ratio: float = 0.0
    angle: float = 0.0
    status: int = 1
    rate_a: float = 0.0


@dataclass(frozen=True)
class Generator:
    bus: int
    pg: float
    qg: float = 0.0
    qmax: float = 9999.0
    qmin: float = -9999.0
    vg: float = 1.0
    pmax: float = 9999.0
    pmin: float = 0.0
    status: int = 1


@dataclass(frozen=True)
class CostCurve:
    """Polynomial cost, coefficients highest order first (MATPOWER model 2)."""

    coeffs: tuple

    def marginal(self, p):
        c = np.polyder(np.asarray(self.coeffs, dtype=float))
        return np.polyval(c, p) if c.size else np.zeros_like(np.asarray(p, dtype=float))


@dataclass(frozen=True)
class CaseArrays:
    base_mva: float
    bus_ids: np.ndarray
    index: dict
    pd: np.ndarray
    qd: np.ndarray
    gs: np.ndarray
    bs: np.ndarray
    vm0: np.ndarray
    vmin: np.ndarray
    vmax: np.ndarray
    bus_type: np.ndarray
    slack: int
    gen_bus: np.ndarray
    gen_on: np.ndarray
    pg: np.ndarray
    qg: np.ndarray
    qmin: np.ndarray
    qmax: np.ndarray
    pmin: np.ndarray
    pmax: np.ndarray
    vg: np.ndarray


@dataclass(frozen=True)
class NetworkCase:
    buses: tuple
    branches: tuple
    generators: tuple
    base_mva: float = 100.0
    costs: Optional[tuple] = None
    name: str = "case"
    warnings: tuple = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "branches", tuple(self.branches))
        object.__setattr__(self, "generators", tuple(self.generators))
        if self.costs is not None:
            object.__setattr__(self, "costs", tuple(self.costs))
        self.validate()

    @property
    def n_bus(self):
        return len(self.buses)

    @property
    def n_gen(self):
        return len(self.generators)

    def validate(self):
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            raise StructuralError("duplicate bus ids")
        for b in self.buses:
            if b.type not in BUS_TYPES:
                raise StructuralError(f"bus {b.id}: unknown type {b.type!r}")
        slacks = [b.id for b in self.buses if b.type == "slack"]
        if len(slacks) != 1:
            raise StructuralError(f"expected exactly one slack bus, found {len(slacks)}")
        known = set(ids)
        for i, g in enumerate(self.generators):
            if g.bus not in known:
                raise CaseReferenceError(f"generator {i} references nonexistent bus {g.bus}")
            if g.pmin > g.pmax or g.qmin > g.qmax:
                raise StructuralError(f"generator {i} at bus {g.bus}: inverted limits")
        for k, br in enumerate(self.branches):
            for end in (br.f, br.t):
                if end not in known:
                    raise CaseReferenceError(f"branch {k} ({br.f}-{br.t}) references nonexistent bus {end}")
        if self.costs is not None and len(self.costs) != len(self.generators):
            raise StructuralError("cost curve count does not match generator count")
        self._check_connected()

    def _check_connected(self):
        index = {b.id: i for i, b in enumerate(self.buses)}
        on = [br for br in self.branches if br.status]
        rows = [index[br.f] for br in on]
        cols = [index[br.t] for br in on]
        n = len(self.buses)
        graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        ncomp, labels = connected_components(graph, directed=False)
        if ncomp > 1:
            slack_label = labels[[i for i, b in enumerate(self.buses) if b.type == "slack"][0]]
            islands = [
                [self.buses[i].id for i in np.flatnonzero(labels == lab)]
                for lab in range(ncomp)
                if lab != slack_label
            ]
            raise ConnectivityError(
                f"network has {ncomp} islands; buses cut off from the slack: {sorted(sum(islands, []))}",
                islands=islands,
            )

    @cached_property
    def arrays(self):
        base = self.base_mva
        ids = np.array([b.id for b in self.buses])
        index = {int(b): i for i, b in enumerate(ids)}
        gen_bus = np.array([index[g.bus] for g in self.generators], dtype=int)
        bus_type = np.array([b.type for b in self.buses])
        return CaseArrays(
            base_mva=base,
            bus_ids=ids,
            index=index,
            pd=np.array([b.pd for b in self.buses], dtype=float) / base,
            qd=np.array([b.qd for b in self.buses], dtype=float) / base,
            gs=np.array([b.gs for b in self.buses], dtype=float) / base,
            bs=np.array([b.bs for b in self.buses], dtype=float) / base,
            vm0=np.array([b.vm for b in self.buses], dtype=float),
            vmin=np.array([b.vmin for b in self.buses], dtype=float),
            vmax=np.array([b.vmax for b in self.buses], dtype=float),
            bus_type=bus_type,
            slack=int(np.flatnonzero(bus_type == "slack")[0]),
            gen_bus=gen_bus,
            gen_on=np.array([g.status > 0 for g in self.generators], dtype=bool),
            pg=np.array([g.pg for g in self.generators], dtype=float) / base,
            qg=np.array([g.qg for g in self.generators], dtype=float) / base,
            qmin=np.array([g.qmin for g in self.generators], dtype=float) / base,
            qmax=np.array([g.qmax for g in self.generators], dtype=float) / base,
            pmin=np.array([g.pmin for g in self.generators], dtype=float) / base,
            pmax=np.array([g.pmax for g in self.generators], dtype=float) / base,
            vg=np.array([g.vg for g in self.generators], dtype=float),
        )

    @cached_property
    def ybus(self):
        from .powerflow import make_ybus

        return make_ybus(self)[0]

    def cost_curves(self):
        """Cost curve per generator; missing curves become identical quadratics."""
        if self.costs is not None and all(c is not None for c in self.costs):
            return list(self.costs)
        logger.warning("case %s: polynomial costs missing, using identical quadratics", self.name)
        default = CostCurve((1.0, 0.0, 0.0))
        if self.costs is None:
            return [default] * self.n_gen
        return [c if c is not None else default for c in self.costs]

    # -- JSON schema -------------------------------------------------------

    def to_dict(self):
        return {
            "schema": CASE_SCHEMA,
            "version": CASE_SCHEMA_VERSION,
            "name": self.name,
            "base_mva": self.base_mva,
            "buses": [asdict(b) for b in self.buses],
            "branches": [asdict(b) for b in self.branches],
            "generators": [asdict(g) for g in self.generators],
            "gencost": None
            if self.costs is None
            else [None if c is None else {"model": "polynomial", "coeffs": list(c.coeffs)} for c in self.costs],
        }

    @classmethod
    def from_dict(cls, doc):
        if doc.get("schema") != CASE_SCHEMA:
            raise StructuralError(f"not a {CASE_SCHEMA} document")
        if doc.get("version") != CASE_SCHEMA_VERSION:
            raise StructuralError(f"unsupported case schema version {doc.get('version')!r}")
        try:
            costs = doc.get("gencost")
            if costs is not None:
                costs = [None if c is None else CostCurve(tuple(float(v) for v in c["coeffs"])) for c in costs]
            return cls(
                buses=[Bus(**b) for b in doc["buses"]],
                branches=[Branch(**b) for b in doc["branches"]],
                generators=[Generator(**g) for g in doc["generators"]],
                base_mva=float(doc["base_mva"]),
                costs=costs,
                name=doc.get("name", "case"),
            )
        except (KeyError, TypeError) as exc:
            raise StructuralError(f"malformed case document: {exc}") from exc

    def to_json(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    def with_loads(self, pd_mw, qd_mw):
        """Copy of the case with per-bus loads replaced (MW / MVAr)."""
        from dataclasses import replace

        buses = [replace(b, pd=float(p), qd=float(q)) for b, p, q in zip(self.buses, pd_mw, qd_mw)]
        return replace(self, buses=tuple(buses))
