"""Command-line entry point: ``nucflex {kinetics,build-tables,dispatch,report}``.

Exit codes: 0 success, 1 usage, 2 data, 3 internal.
"""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import __version__, kinetics, lookup
from .dispatch import metrics, run
from .errors import InputError, NucflexError, PreconditionError
from .scenario_io import load_config, read_results, write_metrics_table, write_results

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
DEFAULT_CONFIG = "case_study.yaml"

log = logging.getLogger("nucflex")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _overrides(pairs) -> dict:
    out = {}
    for item in pairs or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        try:
            out[key] = float(value)
        except ValueError as exc:
            raise UsageError(f"--set {key}: not a number: {value!r}") from exc
    return out


def _params(args) -> kinetics.NuclideParams:
    try:
        return replace(kinetics.NuclideParams(), **_overrides(args.set))
    except TypeError as exc:
        raise UsageError(f"unknown nuclide parameter in --set ({exc})") from exc


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from exc


def _grid(lo: float, hi: float, step: float) -> list[float]:
    if step <= 0:
        raise InputError("grid step must be > 0")
    n = int(math.floor((hi - lo) / step + 1e-9))
    return [round(lo + i * step, 10) for i in range(n + 1)]


# --------------------------------------------------------------------------- kinetics


def cmd_kinetics(args) -> int:
    params = _params(args)
    if args.ramp == "custom":
        if not args.points:
            raise UsageError("--ramp custom needs --points t:p,t:p,...")
        try:
            pts = [tuple(float(v) for v in pair.split(":")) for pair in args.points.split(",")]
        except ValueError as exc:
            raise UsageError(f"bad --points: {args.points!r}") from exc
        profile = kinetics.PowerProfile.from_points(pts)
    else:
        profile = kinetics.shape_profile(args.ramp, args.p0, args.rate)
    trace = kinetics.simulate(params, profile, args.horizon, args.dt)
    trace.write_csv(args.out)
    peak_t, peak = trace.peak()
    print(f"wrote {args.out}: {len(trace.t)} samples, peak defect {peak:.1f} pcm at t={peak_t:.2f} h")
    return EXIT_OK


# --------------------------------------------------------------------------- tables


def cmd_build_tables(args) -> int:
    params = _params(args)
    margins = args.margin_grid or _grid(args.margin_min, args.margin_max, args.margin_step)
    p0s = args.p0_grid or _grid(0.0, 1.0, args.p0_step)
    table = lookup.build_table(params, margins, p0s, buffer_pcm=args.buffer, dt=args.dt,
                               deadtime_horizon=args.deadtime_horizon, n_jobs=args.jobs)
    if not args.no_verify:
        bad = lookup.verify_table(table, params, dt=args.dt)
        if bad:
            print(f"verification failed at margins {bad[:10]}", file=sys.stderr)
            return EXIT_INTERNAL
    table.write(args.out)
    if args.curve:
        curve = lookup.build_pmin_curve(params, p0s, args.dt, args.jobs)
        with open(args.curve, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["p0_frac", "peak_defect_pcm"])
            for p0, peak in curve:
                w.writerow([repr(p0), repr(peak)])
    print(f"wrote {args.out}: {len(table)} rows" + ("" if args.no_verify else ", verified"))
    return EXIT_OK


# --------------------------------------------------------------------------- dispatch


def _run_one(job):
    cfg_path, mode, seed, days, out = job
    cfg = load_config(cfg_path)
    if days is not None:
        cfg.doc = {**cfg.doc, "horizon_days": days}
    bundle = cfg.series(synthetic_seed=seed, days=cfg.horizon_days)
    scenario = cfg.scenario(mode)
    result = run(scenario, bundle.series())
    synthetic = seed is not None or cfg.get("data") is None
    if synthetic and seed is None:
        seed = cfg.get("synthetic", "seed", default=7)
    extra = {"seed": seed if synthetic else None, "data": "synthetic" if synthetic else "files"}
    write_results(result, out, config_digest=cfg.digest(), horizon_days=cfg.horizon_days, extra=extra)
    return mode, metrics(result).as_dict(), result.flags


def _resolve_config(path: str | None) -> Path:
    if path is None:
        from .scenario_io import preset_path
        return preset_path(DEFAULT_CONFIG)
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {path}")
    return p


def cmd_dispatch(args) -> int:
    cfg_path = _resolve_config(args.config)
    cfg = load_config(cfg_path)
    modes = args.mode or [cfg.mode]
    if len(set(modes)) != len(modes):
        raise UsageError("--mode values must be distinct")
    out = Path(args.out)
    multi = len(modes) > 1
    jobs = [(str(cfg_path), m, args.synthetic, args.days, out / f"mode-{m}" if multi else out) for m in modes]
    if args.jobs > 1 and multi:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    table = write_metrics_table({f"Mode-{m}": met for m, met, _ in results},
                                out / "summary.csv" if multi else None)
    _print_table(table)
    for m, _, flags in results:
        for f in flags:
            print(f"Mode-{m}: {f}", file=sys.stderr)
    return EXIT_OK


def _print_table(csv_text: str) -> None:
    rows = [line.split(",") for line in csv_text.strip().splitlines()]
    head = ["Scenario", "NSE (%)", "VRE Curt (%)", "Cost (M$)", "Cost+NSE (M$)", "1st refuel (d)", "Refuels"]
    body = []
    for r in rows[1:]:
        nums = [f"{float(v):.2f}" if v not in ("",) else "-" for v in r[1:6]]
        body.append([r[0], *nums, r[6]])
    widths = [max(len(x[i]) for x in [head, *body]) for i in range(len(head))]
    for line in [head, *body]:
        print("  ".join(c.rjust(w) for c, w in zip(line, widths)))


# --------------------------------------------------------------------------- report


def cmd_report(args) -> int:
    bundles = [read_results(d) for d in args.dirs]
    names = [Path(d).name for d in args.dirs]
    if len(set(names)) != len(names):
        names = [str(d) for d in args.dirs]
    horizons = {(b.manifest["horizon_days"], b.manifest["window_hours"]) for b in bundles}
    if len(horizons) > 1:
        raise InputError(f"bundles have mismatched horizons/windows: {sorted(horizons)}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    windows = bundles[0].manifest["windows"]
    for attr, fname in (("alpha", "alpha.csv"), ("pmin_frac", "pmin.csv"), ("k_eff", "k_eff.csv")):
        cols, series = [], []
        for name, b in zip(names, bundles):
            for reactor in b.manifest["reactors"]:
                cols.append(f"{name}:{reactor}")
                series.append(b.series(attr, reactor))
        with open(out / fname, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["window", *cols])
            for n in range(windows):
                w.writerow([n, *(_cell(s[n]) for s in series)])
    keys = sorted(bundles[0].metrics)
    with open(out / "metrics.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", *names])
        for k in keys:
            w.writerow([k, *(_cell(b.metrics.get(k)) for b in bundles)])
    print(write_metrics_table(dict(zip(names, (b.metrics for b in bundles)))), end="")
    return EXIT_OK


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    v = float(v)
    if math.isnan(v):
        return "nan"
    return repr(v) if math.isfinite(v) else ("inf" if v > 0 else "-inf")


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nucflex", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"nucflex {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    k = sub.add_parser("kinetics", help="iodine/xenon trace for a ramp scenario")
    k.add_argument("--ramp", choices=[*kinetics.RAMP_SHAPES, "custom"], default="down")
    k.add_argument("--p0", type=float, default=0.5, help="target power fraction")
    k.add_argument("--rate", type=float, default=kinetics.RAMP_RATE, help="ramp rate, fraction per hour")
    k.add_argument("--points", help="custom profile breakpoints t:p,t:p,...")
    k.add_argument("--horizon", type=float, default=kinetics.PEAK_HORIZON)
    k.add_argument("--dt", type=float, default=kinetics.DEFAULT_DT)
    k.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a nuclide parameter")
    k.add_argument("--out", required=True)
    k.set_defaults(func=cmd_kinetics)

    b = sub.add_parser("build-tables", help="precompute the margin -> (P_min, deadtime) table")
    b.add_argument("--margin-grid", type=_float_list, help="explicit comma-separated margins (pcm)")
    b.add_argument("--margin-min", type=float, default=0.0)
    b.add_argument("--margin-max", type=float, default=5000.0)
    b.add_argument("--margin-step", type=float, default=50.0)
    b.add_argument("--p0-grid", type=_float_list, help="explicit comma-separated power fractions")
    b.add_argument("--p0-step", type=float, default=0.05)
    b.add_argument("--buffer", type=float, default=0.0, help="safety buffer below the margin (pcm)")
    b.add_argument("--dt", type=float, default=kinetics.DEFAULT_DT)
    b.add_argument("--deadtime-horizon", type=float, default=lookup.DEADTIME_HORIZON)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--no-verify", action="store_true")
    b.add_argument("--curve", help="also write the P0 -> peak defect curve here")
    b.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a nuclide parameter")
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_build_tables)

    d = sub.add_parser("dispatch", help="run a rolling-horizon scenario")
    d.add_argument("--config", help=f"scenario YAML (default: preset {DEFAULT_CONFIG})")
    d.add_argument("--mode", type=int, choices=[1, 2, 3], action="append")
    d.add_argument("--synthetic", type=int, metavar="SEED", help="use synthetic data with this seed")
    d.add_argument("--days", type=int, help="override the horizon length")
    d.add_argument("--jobs", type=int, default=1)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_dispatch)

    r = sub.add_parser("report", help="merge result bundles into comparison files")
    r.add_argument("dirs", nargs="+")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, PreconditionError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NucflexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
