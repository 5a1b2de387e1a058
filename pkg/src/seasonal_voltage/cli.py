"""Command-line pipeline.

::

    seasonal-voltage --out run sample-data
    seasonal-voltage --out run build-wind --wind run/inputs/wind_train.csv --speed run/inputs/wind_speed.csv
    seasonal-voltage --out run validate-wind --test run/inputs/wind_test.csv
    seasonal-voltage --out run build-load --demand run/inputs/demand.csv
    seasonal-voltage --out run --seed 7 scan --approach both --selections 20
    seasonal-voltage --out run report

Every stage writes below ``--out`` and records its arguments, input and
output hashes and run time in ``<out>/manifest.json``. ``--config`` names a
JSON file whose keys override the option defaults (``{"selections": 100}``).

Exit codes: 0 success, 2 input error, 3 numerical failure, 4 integrity error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .dispatch import build_dispatch_schedule
from .errors import ArgumentError, InputError, IntegrityError, SeasonalVoltageError
from .ingest import import_case, load_ieee118, parse_demand_table, parse_wind_series, write_demand_table, \
    write_wind_series
from .load import DATA_DIR, LoadRatioSet, annual_load_profile, build_load_profiles, read_load_ratios, \
    read_shapes
from .powerflow import PF_MAX_ITER, PF_TOL
from .reporting import PipelineManifest, read_annual_profile, read_csv, read_load_profile, read_report_rows, \
    read_wind_profile, render_markdown, sha256_file, write_annual_profile, write_annual_violation_plot, \
    write_comparison, write_dispatch, write_json, write_load_plots, write_load_profile, write_outliers, \
    write_ranking, write_report, write_wind_plots, write_wind_profile
from .scanner import ANNUAL, APPROACHES, MODES, ScanConfig, base_case_voltages, build_scale_factors, run_scan, \
    rank_vulnerability
from .synthetic import SAMPLE_SEEDS, synthetic_demand_table, synthetic_wind_power, synthetic_wind_speed
from .wind import SEASONS, TurbineCurve, build_annual_profile, build_seasonal_profiles, validate_holdout

logger = logging.getLogger("seasonal_voltage")

TRAIN_YEARS = (2007, 2011)
TEST_YEARS = (2012, 2015)


def _year_range(text):
    try:
        first, _, last = text.partition("-")
        first, last = int(first), int(last or first)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected YEAR or FIRST-LAST, got {text!r}") from None
    if first > last:
        raise argparse.ArgumentTypeError(f"empty year range {text!r}")
    return first, last


def _modes(text):
    modes = tuple(m.strip() for m in text.split(",") if m.strip())
    bad = set(modes) - set(MODES)
    if not modes or bad:
        raise argparse.ArgumentTypeError(f"modes must be a comma list drawn from {','.join(MODES)}")
    return modes


def _versions():
    return {"seasonal_voltage": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


def _config_snapshot(args):
    snap = {}
    for k, v in sorted(vars(args).items()):
        if k in ("func", "argv"):
            continue
        if isinstance(v, (list, tuple)):
            v = [str(x) if isinstance(x, Path) else x for x in v]
        snap[k] = str(v) if isinstance(v, Path) else v
    return snap


class _Stage:
    """Time a stage and record it in the manifest."""

    def __init__(self, args, name):
        self.args, self.name = args, name
        self.inputs, self.outputs = [], []
        self.t0 = time.perf_counter()

    def finish(self, config=None):
        manifest = PipelineManifest.open(self.args.out, _versions())
        manifest.record(self.name, self.args.argv, self.inputs, self.outputs,
                        time.perf_counter() - self.t0, config or _config_snapshot(self.args))
        manifest.save()
        logger.info("%s: %d outputs in %.1f s", self.name, len(self.outputs), time.perf_counter() - self.t0)


# -- stages --------------------------------------------------------------------


def cmd_sample_data(args):
    """Write the bundled synthetic inputs (fixed seeds, independent of --seed)."""
    st = _Stage(args, "sample-data")
    d = Path(args.out) / "inputs"
    d.mkdir(parents=True, exist_ok=True)
    jobs = {
        "wind_train.csv": lambda p: write_wind_series(
            synthetic_wind_power(range(TRAIN_YEARS[0], TRAIN_YEARS[1] + 1), SAMPLE_SEEDS["wind_train"]), p),
        "wind_test.csv": lambda p: write_wind_series(
            synthetic_wind_power(range(TEST_YEARS[0], TEST_YEARS[1] + 1), SAMPLE_SEEDS["wind_test"]), p),
        "wind_speed.csv": lambda p: write_wind_series(synthetic_wind_speed([2007], SAMPLE_SEEDS["speed"]), p),
        "demand.csv": lambda p: write_demand_table(synthetic_demand_table(seed=SAMPLE_SEEDS["demand"]), p),
    }
    for name, write in jobs.items():
        write(d / name)
        st.outputs.append(d / name)
    st.finish()
    print(f"wrote {len(jobs)} input files to {d}")
    return 0


def cmd_build_wind(args):
    st = _Stage(args, "build-wind")
    series, gaps = parse_wind_series(args.wind, "power")
    st.inputs.append(args.wind)
    if not gaps.empty:
        logger.info("%s: %d slots repaired, %d days dropped, %d readings clamped", args.wind,
                    gaps.repaired_count, len(gaps.dropped_days), gaps.clamped_count)
    first, last = args.train_years
    profiles = build_seasonal_profiles(series, first, last)
    out = Path(args.out) / "wind"
    for s in SEASONS:
        st.outputs.append(write_wind_profile(profiles[s], out / f"profile_{s}.json"))
    st.outputs += write_wind_plots(profiles, out)
    if args.speed:
        speeds, _ = parse_wind_series(args.speed, "speed")
        st.inputs.append(args.speed)
        curve = TurbineCurve(args.cut_in, args.rated_speed, args.cut_out, args.rated_power)
        annual = build_annual_profile(speeds, curve)
        st.outputs.append(write_annual_profile(annual, out / "annual_profile.json", {
            "turbine": [curve.v_ci, curve.v_r, curve.v_co, curve.rated],
        }))
    st.finish()
    for s in SEASONS:
        p = profiles[s]
        print(f"{s:7s} MP {p.mp:8.1f} MW  MXWP {p.mxwp:8.1f} MW  MNWP {p.mnwp:8.1f} MW")
    return 0


def _read_wind_profiles(wind_dir):
    wind_dir = Path(wind_dir)
    paths = {s: wind_dir / f"profile_{s}.json" for s in SEASONS}
    missing = [str(p) for p in paths.values() if not p.exists()]
    if missing:
        raise ArgumentError(f"wind profiles missing (run build-wind first): {', '.join(missing)}")
    return {s: read_wind_profile(p) for s, p in paths.items()}, list(paths.values())


def cmd_validate_wind(args):
    st = _Stage(args, "validate-wind")
    profiles, paths = _read_wind_profiles(args.wind_dir or Path(args.out) / "wind")
    for s, p in profiles.items():
        if p.season != s:
            raise ArgumentError(f"profile file for {s} holds season {p.season!r}")
    test, _ = parse_wind_series(args.test, "power")
    st.inputs += [*paths, args.test]
    reports = validate_holdout(test, profiles)
    st.outputs += write_outliers(reports, Path(args.out) / "validation")
    st.finish()
    print("season   outlier %")
    for s in SEASONS:
        print(f"{s:8s} {reports[s].percentage:9.4f}")
    return 0


def cmd_build_load(args):
    st = _Stage(args, "build-load")
    table = parse_demand_table(args.demand)
    shapes = {}
    for path in args.shapes:
        shapes.update(read_shapes(path))
    ratios = read_load_ratios(args.load_ratios) if args.load_ratios else LoadRatioSet.uniform()
    st.inputs += [args.demand, *args.shapes] + ([args.load_ratios] if args.load_ratios else [])
    years = range(args.years[0], args.years[1] + 1) if args.years else None
    profiles = build_load_profiles(table, shapes, ratios, years)
    out = Path(args.out) / "load"
    meta = {"load_ratios": {s: ratios.ratios[s] for s in SEASONS}}
    for s in SEASONS:
        st.outputs.append(write_load_profile(profiles[s], out / f"profile_{s}.json", meta))
    st.outputs += write_load_plots(profiles, out)
    st.finish()
    for s in SEASONS:
        p = profiles[s]
        print(f"{s:7s} peak {p.peak_mw:9.1f} MW at slot {int(np.argmax(p.percent)) + 1}, "
              f"minimum {p.percent.min():5.1f} %")
    return 0


def cmd_scan(args):
    st = _Stage(args, "scan")
    out = Path(args.out)
    scan_dir = out / "scan"
    approaches = APPROACHES if args.approach == "both" else (args.approach,)

    if args.case:
        case = import_case(args.case)
        st.inputs.append(args.case)
    else:
        case = load_ieee118()
    load_dir = Path(args.load_dir or out / "load")
    load_paths = {s: load_dir / f"profile_{s}.json" for s in SEASONS}
    missing = [str(p) for p in load_paths.values() if not p.exists()]
    if missing:
        raise ArgumentError(f"load profiles missing (run build-load first): {', '.join(missing)}")
    loads = {s: read_load_profile(p) for s, p in load_paths.items()}
    st.inputs += list(load_paths.values())

    wind_dir = Path(args.wind_dir or out / "wind")
    factors, profile_hashes = {}, {}
    if "season_focused" in approaches:
        profiles, paths = _read_wind_profiles(wind_dir)
        st.inputs += paths
        factors["season_focused"] = build_scale_factors("season_focused", profiles, modes=args.modes)
    if "season_independent" in approaches:
        path = wind_dir / "annual_profile.json"
        if not path.exists():
            raise ArgumentError(f"{path} missing (run build-wind with --speed)")
        st.inputs.append(path)
        factors["season_independent"] = build_scale_factors(
            "season_independent", annual=read_annual_profile(path), modes=("mean",))
        loads[ANNUAL] = annual_load_profile(loads)
    for p in st.inputs:
        profile_hashes[Path(p).name] = sha256_file(p)

    schedules = {}
    for s in loads:
        if s == ANNUAL and "season_independent" not in approaches:
            continue
        schedules[s] = build_dispatch_schedule(case, loads[s], season=s, pf_tol=args.pf_tol,
                                               pf_max_iter=args.pf_max_iter)
        st.outputs += write_dispatch(schedules[s], case, scan_dir / "dispatch")
    logger.info("dispatched %d seasonal days", len(schedules))

    reports = {}
    for approach in approaches:
        config = ScanConfig(selections=args.selections, penetration=args.penetration, tolerance=args.tolerance,
                            seed=args.seed, modes=args.modes, approach=approach, pf_tol=args.pf_tol,
                            pf_max_iter=args.pf_max_iter)
        if not reports:
            base_vm = base_case_voltages(case, config)
        rep = run_scan(case, schedules, factors[approach], config, base_vm=base_vm, workers=args.workers,
                       metadata={"profiles": profile_hashes, "case": case.name})
        reports[approach] = rep
        st.outputs.append(write_report(rep, scan_dir / f"report_{approach}.csv"))
        meta = dict(rep.metadata)
        meta["totals"] = {f"{s}/{m}": rep.totals[s, m] for s, m in sorted(rep.totals)}
        meta["diverged"] = {f"{s}/{m}": rep.diverged[s, m] for s, m in sorted(rep.diverged)}
        st.outputs.append(write_json(scan_dir / f"metadata_{approach}.json", meta))
        n_div = sum(rep.diverged.values())
        print(f"{approach}: {sum(rep.totals.values())} power flows solved, {n_div} diverged")
    focused = reports.get("season_focused")
    if focused is not None:
        if set(focused.criteria) == {"relative", "absolute"} and "mean" in focused.modes:
            st.outputs.append(write_ranking(rank_vulnerability(focused), scan_dir / "ranking.csv"))
        st.outputs.append(write_annual_violation_plot(focused, scan_dir / "plot_annual_violations.csv"))
    if len(reports) == 2:
        st.outputs.append(write_comparison(reports["season_focused"], reports["season_independent"],
                                           scan_dir / "comparison.csv"))
    st.finish()
    return 0


def cmd_report(args):
    manifest_path = Path(args.manifest or Path(args.out) / "manifest.json")
    manifest = PipelineManifest.load(manifest_path)
    if manifest is None:
        raise ArgumentError(f"no manifest at {manifest_path}")
    manifest.verify()
    if "scan" not in manifest.stages:
        raise ArgumentError("manifest has no scan stage")
    outputs = {Path(name).name: manifest.resolve(name) for name in manifest.stages["scan"]["outputs"]}
    approach = "season_focused" if "report_season_focused.csv" in outputs else "season_independent"
    rows = read_report_rows(outputs[f"report_{approach}.csv"])
    ranking = read_csv(outputs["ranking.csv"]) if "ranking.csv" in outputs else []
    comparison = read_csv(outputs["comparison.csv"]) if "comparison.csv" in outputs else None
    meta_path = outputs.get(f"metadata_{approach}.json")
    meta = json.loads(meta_path.read_text()) if meta_path else {}
    text = render_markdown(rows, ranking, meta, comparison, top=args.top)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


# -- parser ----------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="seasonal-voltage", description=__doc__.split("\n\n")[0])
    p.add_argument("--config", type=Path, help="JSON file of option defaults")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: out)")
    p.add_argument("--seed", type=int, default=0, help="seed of every random draw (default: 0)")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample-data", help="write the bundled synthetic input files")
    s.set_defaults(func=cmd_sample_data)

    s = sub.add_parser("build-wind", help="normative-day wind profiles from a power record")
    s.add_argument("--wind", type=Path, required=True, help="timestamp,value CSV of farm output (MW)")
    s.add_argument("--train-years", type=_year_range, default=TRAIN_YEARS, help="FIRST-LAST (default 2007-2011)")
    s.add_argument("--speed", type=Path, help="timestamp,value CSV of wind speed (m/s) for the annual profile")
    s.add_argument("--cut-in", type=float, default=3.0)
    s.add_argument("--rated-speed", type=float, default=12.5)
    s.add_argument("--cut-out", type=float, default=25.0)
    s.add_argument("--rated-power", type=float, default=100.0)
    s.set_defaults(func=cmd_build_wind)

    s = sub.add_parser("validate-wind", help="outlier test of held-out years against the profiles")
    s.add_argument("--test", type=Path, required=True, help="timestamp,value CSV of held-out farm output")
    s.add_argument("--wind-dir", type=Path, help="profile directory (default <out>/wind)")
    s.set_defaults(func=cmd_validate_wind)

    s = sub.add_parser("build-load", help="seasonal load profiles from monthly sector energy")
    s.add_argument("--demand", type=Path, required=True, help="year,month,sector,mwh CSV")
    s.add_argument("--shapes", type=Path, nargs="+", default=[DATA_DIR / "default_shapes.csv"],
                   help="sector,season,slot,value CSV(s) (default: bundled shapes)")
    s.add_argument("--load-ratios", type=Path, help="season,lr CSV (default 0.2 every season)")
    s.add_argument("--years", type=_year_range, help="demand years to average (default: all)")
    s.set_defaults(func=cmd_build_load)

    s = sub.add_parser("scan", help="dispatch, wind placement and voltage-violation scan")
    s.add_argument("--case", type=Path, help="case .json or MATPOWER .m (default: IEEE 118-bus)")
    s.add_argument("--wind-dir", type=Path)
    s.add_argument("--load-dir", type=Path)
    s.add_argument("--approach", choices=(*APPROACHES, "both"), default="season_focused")
    s.add_argument("--selections", type=int, default=20, help="random wind placements S (default 20)")
    s.add_argument("--penetration", type=float, default=0.5, help="wind share of generating capacity")
    s.add_argument("--tolerance", type=float, default=0.05, help="accepted penetration deviation")
    s.add_argument("--modes", type=_modes, default=MODES, help="comma list of mean,min,max")
    s.add_argument("--pf-tol", type=float, default=PF_TOL)
    s.add_argument("--pf-max-iter", type=int, default=PF_MAX_ITER)
    s.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on it)")
    s.set_defaults(func=cmd_scan)

    s = sub.add_parser("report", help="Markdown summary of a scan")
    s.add_argument("--manifest", type=Path, help="default <out>/manifest.json")
    s.add_argument("--output", type=Path, help="write here instead of stdout")
    s.add_argument("--top", type=int, default=10)
    s.set_defaults(func=cmd_report)
    return p


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path)
    known, _ = pre.parse_known_args(argv)
    if known.config is None:
        return
    try:
        doc = json.loads(known.config.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"config {known.config}: {exc}") from None
    if not isinstance(doc, dict):
        raise InputError(f"config {known.config}: expected a JSON object")
    defaults = {k.replace("-", "_"): v for k, v in doc.items()}
    if "modes" in defaults and isinstance(defaults["modes"], str):
        defaults["modes"] = _modes(defaults["modes"])
    parser.set_defaults(**defaults)
    for action in parser._subparsers._group_actions:
        for sp in action.choices.values():
            sp.set_defaults(**{k: v for k, v in defaults.items() if any(a.dest == k for a in sp._actions)})


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        args.argv = argv
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except IntegrityError as exc:
        print(f"integrity error: {exc}", file=sys.stderr)
        return exc.exit_code
    except SeasonalVoltageError as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, UnicodeDecodeError) as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
