"""Persistence of profiles, schedules, scan reports and the run manifest.

Every file is written atomically (temporary file, then rename) and with
deterministic formatting, so identical inputs give byte-identical outputs.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import IntegrityError, StructuralError
from .ingest import SLOTS_PER_DAY
from .load import SeasonalLoadProfile
from .scanner import ViolationReport
from .wind import SEASONS, AnnualProfile, NormativeDayProfile

WIND_SCHEMA = "seasonal_voltage.wind_profile"
LOAD_SCHEMA = "seasonal_voltage.load_profile"
ANNUAL_SCHEMA = "seasonal_voltage.annual_wind_profile"
MANIFEST_SCHEMA = "seasonal_voltage.manifest"
SCHEMA_VERSION = 1


# -- primitives --------------------------------------------------------------


def atomic_write(path, data):
    """Write ``data`` (str or bytes) to ``path`` via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _num(x):
    """Stable text form of a float."""
    return repr(float(x))


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return atomic_write(path, buf.getvalue())


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_json(path, doc):
    return atomic_write(path, json.dumps(doc, indent=1, sort_keys=True) + "\n")


def _read_doc(path, schema):
    doc = json.loads(Path(path).read_text())
    if doc.get("schema") != schema:
        raise StructuralError(f"{path}: not a {schema} document")
    if doc.get("version") != SCHEMA_VERSION:
        raise StructuralError(f"{path}: unsupported version {doc.get('version')!r}")
    return doc


def _floats(a):
    return [float(v) for v in np.asarray(a, dtype=float)]


# -- wind profiles -------------------------------------------------------------


def wind_profile_doc(p: NormativeDayProfile):
    return {
        "schema": WIND_SCHEMA,
        "version": SCHEMA_VERSION,
        "season": p.season,
        "slots": {
            "mean": _floats(p.mean),
            "normp": _floats(p.normp),
            "netminv": _floats(p.netminv),
            "netmaxv": _floats(p.netmaxv),
            "minvp": _floats(p.minvp),
            "maxvp": _floats(p.maxvp),
            "chosen_day": [int(v) for v in p.chosen_day],
            "min_day": [int(v) for v in p.min_day],
            "max_day": [int(v) for v in p.max_day],
        },
        "actual": {"mp": p.mp, "mxwp": p.mxwp, "mnwp": p.mnwp, "mean_mw": _floats(p.actual_mean)},
        "training": dict(p.metadata),
    }


def write_wind_profile(p: NormativeDayProfile, path):
    return write_json(path, wind_profile_doc(p))


def read_wind_profile(path) -> NormativeDayProfile:
    doc = _read_doc(path, WIND_SCHEMA)
    sl, act = doc["slots"], doc["actual"]
    arr = lambda k, dtype=float: np.asarray(sl[k], dtype=dtype)  # noqa: E731
    return NormativeDayProfile(
        season=doc["season"], mean=arr("mean"), normp=arr("normp"),
        chosen_day=arr("chosen_day", int), min_day=arr("min_day", int), max_day=arr("max_day", int),
        minvp=arr("minvp"), maxvp=arr("maxvp"), netminv=arr("netminv"), netmaxv=arr("netmaxv"),
        mp=float(act["mp"]), mxwp=float(act["mxwp"]), mnwp=float(act["mnwp"]),
        actual_mean=np.asarray(act["mean_mw"], dtype=float), metadata=doc.get("training", {}),
    )


def write_annual_profile(p: AnnualProfile, path, metadata=None):
    return write_json(path, {
        "schema": ANNUAL_SCHEMA, "version": SCHEMA_VERSION, "pn": _floats(p.values),
        "n_days": p.n_days, "excluded": p.excluded, "metadata": metadata or {},
    })


def read_annual_profile(path) -> AnnualProfile:
    doc = _read_doc(path, ANNUAL_SCHEMA)
    return AnnualProfile(np.asarray(doc["pn"], dtype=float), int(doc["n_days"]), int(doc["excluded"]))


def write_wind_plots(profiles, out_dir):
    """Envelope CSV per season (slot, NORMP, lower, upper) and one CSV of
    actual mean MW per season."""
    out_dir = Path(out_dir)
    paths = []
    for s in SEASONS:
        p = profiles[s]
        rows = zip(range(1, SLOTS_PER_DAY + 1), p.normp, p.lower, p.upper)
        paths.append(write_csv(out_dir / f"plot_wind_envelope_{s}.csv", ["slot", "normp", "lower", "upper"], rows))
    rows = zip(range(1, SLOTS_PER_DAY + 1), *(profiles[s].actual_mean for s in SEASONS))
    paths.append(write_csv(out_dir / "plot_wind_actual_mean.csv", ["slot", *SEASONS], rows))
    return paths


def write_outliers(reports, out_dir):
    """Per-season outlier CSVs, a summary CSV (season, percentage) and a JSON summary."""
    out_dir = Path(out_dir)
    paths = []
    for s in SEASONS:
        if s not in reports:
            continue
        r = reports[s]
        rows = ((s, o.date.isoformat(), o.slot, o.value, o.bound, o.kind) for o in r.outliers)
        paths.append(write_csv(out_dir / f"outliers_{s}.csv", ["season", "date", "slot", "value", "bound", "kind"], rows))
    summary = [(s, reports[s].percentage) for s in SEASONS if s in reports]
    paths.append(write_csv(out_dir / "outlier_summary.csv", ["season", "outlier_percentage"], summary))
    paths.append(write_json(out_dir / "outlier_summary.json", {
        s: {"tested": reports[s].tested, "outliers": reports[s].count, "percentage": reports[s].percentage}
        for s in SEASONS if s in reports
    }))
    return paths


# -- load profiles ---------------------------------------------------------------


def write_load_profile(p: SeasonalLoadProfile, path, metadata=None):
    return write_json(path, {
        "schema": LOAD_SCHEMA, "version": SCHEMA_VERSION, "season": p.season,
        "peak_mw": p.peak_mw, "percent": _floats(p.percent),
        "components_mw": {
            "residential": _floats(p.residential),
            "commercial": _floats(p.commercial),
            "industrial": _floats(p.industrial),
        },
        "metadata": metadata or {},
    })


def read_load_profile(path) -> SeasonalLoadProfile:
    doc = _read_doc(path, LOAD_SCHEMA)
    comp = doc["components_mw"]
    return SeasonalLoadProfile(
        season=doc["season"], percent=np.asarray(doc["percent"], dtype=float), peak_mw=float(doc["peak_mw"]),
        residential=np.asarray(comp["residential"], dtype=float),
        commercial=np.asarray(comp["commercial"], dtype=float),
        industrial=np.asarray(comp["industrial"], dtype=float),
    )


def write_load_plots(profiles, out_dir):
    out_dir = Path(out_dir)
    slots = range(1, SLOTS_PER_DAY + 1)
    return [
        write_csv(out_dir / "plot_load_percent.csv", ["slot", *SEASONS],
                  zip(slots, *(profiles[s].percent for s in SEASONS))),
        write_csv(out_dir / "plot_load_mw.csv", ["slot", *SEASONS],
                  zip(slots, *(profiles[s].total_mw for s in SEASONS))),
    ]


# -- power flow and dispatch -------------------------------------------------------


def write_pf_solution(sol, case, path):
    ids = case.arrays.bus_ids
    return write_csv(path, ["slot", "bus", "vm", "va"],
                     ((0, int(b), vm, va) for b, vm, va in zip(ids, sol.vm, sol.va)))


def write_dispatch(schedule, case, out_dir):
    out_dir = Path(out_dir)
    ids = case.arrays.bus_ids
    s = schedule.season
    gen_rows = ((h + 1, g, schedule.pg[h, g], schedule.qg[h, g])
                for h in range(SLOTS_PER_DAY) for g in range(case.n_gen))
    bus_rows = ((h + 1, int(ids[b]), schedule.vm[h, b], schedule.va[h, b])
                for h in range(SLOTS_PER_DAY) for b in range(case.n_bus))
    return [
        write_csv(out_dir / f"dispatch_{s}.csv", ["slot", "gen", "pg", "qg"], gen_rows),
        write_csv(out_dir / f"dispatch_voltages_{s}.csv", ["slot", "bus", "vm", "va"], bus_rows),
    ]


# -- scan outputs --------------------------------------------------------------------


def write_report(report: ViolationReport, path):
    return write_csv(path, ["bus", "season", "criterion", "mode", "count", "total", "fraction"], report.rows())


def read_report_rows(path):
    rows = read_csv(path)
    for r in rows:
        r["bus"], r["count"], r["total"] = int(r["bus"]), int(r["count"]), int(r["total"])
        r["fraction"] = float(r["fraction"])
    return rows


def write_ranking(ranking, path):
    opt = lambda v: "" if v is None else v  # noqa: E731
    rows = ((e.rank, e.bus, e.wv, opt(e.alpha1), opt(e.pv1), opt(e.alpha2), opt(e.pv2), e.group)
            for e in ranking.entries)
    return write_csv(path, ["rank", "bus", "wv", "alpha1", "pv1", "alpha2", "pv2", "group"], rows)


def write_annual_violation_plot(report: ViolationReport, path):
    """Per-bus percentage of absolute-band violations over all min/max-mode cases."""
    modes = [m for m in ("min", "max") if m in report.modes] or list(report.modes)
    counts, total = report.pooled("absolute", modes)
    rows = ((int(b), 100.0 * c / total if total else 0.0) for b, c in zip(report.bus_ids, counts))
    return write_csv(path, ["bus", "annual_violation_percentage"], rows)


def comparison_rows(focused: ViolationReport, independent: ViolationReport, criterion="relative"):
    """Per-bus mean-mode counts of both approaches.

    The season-focused column pools the four seasons. ``focused_only`` marks
    buses the season-independent scan misses entirely.
    """
    fc, ft = focused.pooled(criterion, ["mean"])
    ic, it = independent.pooled(criterion, ["mean"])
    for b, f, i in zip(focused.bus_ids, fc, ic):
        if f or i:
            yield (int(b), int(f), int(ft), int(i), int(it), int(f > 0 and i == 0))


def write_comparison(focused, independent, path, criterion="relative"):
    return write_csv(path, ["bus", "season_focused", "season_focused_total", "season_independent",
                            "season_independent_total", "focused_only"],
                     comparison_rows(focused, independent, criterion))


# -- manifest --------------------------------------------------------------------------


@dataclass
class PipelineManifest:
    """Record of every stage run into one output directory.

    ``stages[name]`` holds the command-line arguments, input and output file
    hashes and the wall-clock duration of the latest run of that stage.
    """

    root: Path
    stages: dict = field(default_factory=dict)
    versions: dict = field(default_factory=dict)

    @property
    def path(self):
        return Path(self.root) / "manifest.json"

    def record(self, stage, args, inputs, outputs, seconds, config=None):
        root = Path(self.root).resolve()

        def rel(p):
            p = Path(p).resolve()
            return str(p.relative_to(root)) if p.is_relative_to(root) else str(p)

        self.stages[stage] = {
            "args": args,
            "config": config or {},
            "inputs": {rel(p): sha256_file(p) for p in inputs},
            "outputs": {rel(p): sha256_file(p) for p in outputs},
            "seconds": round(float(seconds), 3),
        }

    def save(self):
        return write_json(self.path, {
            "schema": MANIFEST_SCHEMA, "version": SCHEMA_VERSION, "versions": self.versions, "stages": self.stages,
        })

    @classmethod
    def load(cls, path):
        path = Path(path)
        if path.is_dir():
            path = path / "manifest.json"
        if not path.exists():
            return None
        doc = _read_doc(path, MANIFEST_SCHEMA)
        return cls(path.parent, doc.get("stages", {}), doc.get("versions", {}))

    @classmethod
    def open(cls, root, versions=None):
        m = cls.load(root) or cls(Path(root))
        m.versions.update(versions or {})
        return m

    def resolve(self, name):
        p = Path(name)
        return p if p.is_absolute() else Path(self.root) / p

    def verify(self):
        """Raise IntegrityError if any recorded output is missing or altered."""
        for stage, info in self.stages.items():
            for name, digest in info["outputs"].items():
                p = self.resolve(name)
                if not p.exists():
                    raise IntegrityError(f"{stage}: output {name} is missing")
                if sha256_file(p) != digest:
                    raise IntegrityError(f"{stage}: output {name} does not match its recorded hash")


# -- Markdown summary -------------------------------------------------------------------


def render_markdown(report_rows, ranking_rows, metadata=None, comparison=None, top=10):
    """Human-readable summary of a season-focused scan."""
    metadata = metadata or {}
    lines = ["# Seasonal voltage violation summary", ""]
    if metadata:
        keys = ("approach", "seed", "selections", "penetration", "pf_tol")
        lines += [", ".join(f"{k}: {metadata[k]}" for k in keys if k in metadata), ""]
    seasons = [s for s in SEASONS if any(r["season"] == s for r in report_rows)] or \
        sorted({r["season"] for r in report_rows})
    rel = {}
    total = {}
    for r in report_rows:
        if r["criterion"] == "relative" and r["mode"] == "mean":
            rel.setdefault(r["bus"], {})[r["season"]] = r["count"]
            total[r["season"]] = r["total"]
    violating = sorted(b for b, per in rel.items() if any(per.values()))
    lines += ["## Relative-criterion violations, mean wind variation", ""]
    if violating:
        lines.append("| Bus | " + " | ".join(f"{s} (of {total.get(s, 0)})" for s in seasons) + " |")
        lines.append("|---" * (len(seasons) + 1) + "|")
        for b in violating:
            lines.append(f"| {b} | " + " | ".join(str(rel[b].get(s, 0)) for s in seasons) + " |")
    else:
        lines.append("No relative-criterion violations in any season.")
    lines += ["", "## Most vulnerable buses", ""]
    if ranking_rows:
        lines.append("| Rank | Bus | WV | Group |")
        lines.append("|---|---|---|---|")
        for r in ranking_rows[:top]:
            lines.append(f"| {r['rank']} | {r['bus']} | {float(r['wv']):.4g} | {r['group']} |")
    else:
        lines.append("no violations detected")
    if comparison is not None:
        missed = [r["bus"] for r in comparison if r["focused_only"] == "1"]
        lines += ["", "## Approach comparison", ""]
        lines.append("Buses violating only under the season-focused approach: "
                     + (", ".join(missed) if missed else "none"))
    return "\n".join(lines) + "\n"
