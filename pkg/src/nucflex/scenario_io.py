"""Time-series ingestion, scenario configuration, synthetic data and result bundles."""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from . import __version__
from .dispatch import (
    Metrics,
    RefuelEvent,
    ScenarioConfig,
    ScenarioResult,
    SeriesData,
    TrajectoryRow,
    metrics,
    nuclear_unit,
)
from .errors import InputError, SchemaError
from .kinetics import NuclideParams
from .lookup import FlexibilityTable, build_table
from .reactivity import DegradationParams
from .uc import StorageSpec, write_solution

PRESET_ENV = "NUCFLEX_PRESET_DIR"
DEMAND_HEADER = ["timestamp", "demand_mw"]
VRE_HEADER = ["timestamp", "wind_cf", "solar_cf"]
TRAJECTORY_FIELDS = ["window", "reactor", "k_eff", "margin_pcm", "alpha", "pmin_frac", "deadtime_hr", "refueling"]
EVENT_FIELDS = ["reactor", "start_hour", "end_hour", "duration_hours", "k_before", "k_after"]
ORIGIN = "2021-01-01T00:00"


def preset_dir() -> Path:
    env = os.environ.get(PRESET_ENV)
    if env:
        return Path(env)
    return Path(str(resources.files("nucflex") / "presets"))


def preset_path(name: str) -> Path:
    path = preset_dir() / name
    if not path.exists():
        raise InputError(f"preset {name!r} not found in {path.parent}")
    return path


def shipped_table(params: NuclideParams) -> FlexibilityTable | None:
    """A preset table built with default grids for exactly these parameters."""
    for path in sorted(preset_dir().glob("*_table.csv")):
        table = FlexibilityTable.read(path)
        if table.metadata.get("params") == params.digest():
            return table
    return None


# --------------------------------------------------------------------------- series


@dataclass(frozen=True)
class TimeSeriesBundle:
    demand: np.ndarray
    wind_cf: np.ndarray
    solar_cf: np.ndarray
    wind_mw: float = 0.0
    solar_mw: float = 0.0
    origin: str = ORIGIN

    def __post_init__(self):
        n = len(self.demand)
        if len(self.wind_cf) != n or len(self.solar_cf) != n:
            raise InputError("demand, wind and solar series must have equal length")
        if np.any(self.demand < 0):
            raise InputError("demand must be >= 0")
        for name in ("wind_cf", "solar_cf"):
            v = getattr(self, name)
            if np.any((v < 0) | (v > 1)):
                raise InputError(f"{name} must lie in [0, 1]")
        if self.wind_mw < 0 or self.solar_mw < 0:
            raise InputError("installed VRE capacities must be >= 0")

    def __len__(self):
        return len(self.demand)

    @property
    def vre_available(self) -> np.ndarray:
        return self.wind_mw * self.wind_cf + self.solar_mw * self.solar_cf

    def series(self) -> SeriesData:
        return SeriesData(self.demand, self.vre_available)

    def with_capacities(self, wind_mw: float, solar_mw: float) -> "TimeSeriesBundle":
        return TimeSeriesBundle(self.demand, self.wind_cf, self.solar_cf, wind_mw, solar_mw, self.origin)

    def timestamps(self) -> list[str]:
        t0 = datetime.fromisoformat(self.origin)
        return [(t0 + timedelta(hours=h)).strftime("%Y-%m-%dT%H:%M") for h in range(len(self))]

    def write(self, demand_path, vre_path) -> None:
        stamps = self.timestamps()
        with open(demand_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(DEMAND_HEADER)
            for ts, d in zip(stamps, self.demand):
                w.writerow([ts, repr(round(float(d), 6))])
        with open(vre_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(VRE_HEADER)
            for ts, wcf, scf in zip(stamps, self.wind_cf, self.solar_cf):
                w.writerow([ts, repr(round(float(wcf), 6)), repr(round(float(scf), 6))])


def _read_csv(path, header: list[str]) -> tuple[list[str], np.ndarray]:
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        got = next(reader, None)
        if got is None or [c.strip() for c in got] != header:
            raise SchemaError(f"{path}: expected header {','.join(header)}, got {got}")
        stamps, values = [], []
        for row_no, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise InputError(f"{path}: row {row_no}: expected {len(header)} fields, got {len(row)}")
            try:
                datetime.fromisoformat(row[0].strip())
                vals = [float(x) for x in row[1:]]
            except ValueError as exc:
                raise InputError(f"{path}: row {row_no}: unparseable ({exc})") from exc
            if not all(math.isfinite(v) for v in vals):
                raise InputError(f"{path}: row {row_no}: non-finite value")
            stamps.append(row[0].strip())
            values.append(vals)
    return stamps, np.array(values, dtype=float).reshape(-1, len(header) - 1)


def load_series(demand_path, vre_path, wind_mw: float = 0.0, solar_mw: float = 0.0) -> TimeSeriesBundle:
    """Read ``timestamp,demand_mw`` and ``timestamp,wind_cf,solar_cf`` files."""
    d_stamps, d = _read_csv(demand_path, DEMAND_HEADER)
    v_stamps, v = _read_csv(vre_path, VRE_HEADER)
    if len(d_stamps) != len(v_stamps):
        raise InputError(f"length mismatch: {len(d_stamps)} demand rows vs {len(v_stamps)} VRE rows")
    if not d_stamps:
        raise InputError(f"{demand_path}: no data rows")
    for row_no, (a, b) in enumerate(zip(d_stamps, v_stamps), start=1):
        if a != b:
            raise InputError(f"row {row_no}: timestamps differ ({a} vs {b})")
    t0 = datetime.fromisoformat(d_stamps[0])
    for row_no, ts in enumerate(d_stamps, start=1):
        if datetime.fromisoformat(ts) != t0 + timedelta(hours=row_no - 1):
            raise InputError(f"{demand_path}: row {row_no}: timestamps must be consecutive hours")
    for row_no, val in enumerate(d[:, 0], start=1):
        if val < 0:
            raise InputError(f"{demand_path}: row {row_no}: negative demand {val}")
    for row_no, (wcf, scf) in enumerate(v, start=1):
        if not (0 <= wcf <= 1 and 0 <= scf <= 1):
            raise InputError(f"{vre_path}: row {row_no}: capacity factor outside [0, 1]")
    return TimeSeriesBundle(d[:, 0], v[:, 0], v[:, 1], wind_mw, solar_mw, t0.strftime("%Y-%m-%dT%H:%M"))


@dataclass(frozen=True)
class SynthParams:
    mean_demand_mw: float = 4800.0
    daily_amplitude: float = 0.15
    weekly_amplitude: float = 0.05
    noise_sd: float = 0.02
    solar_peak: float = 0.85
    wind_mean: float = 0.36
    wind_phi: float = 0.95
    wind_sd: float = 0.25
    wind_mw: float = 7500.0
    solar_mw: float = 3000.0


def synth_case(seed: int, days: int, params: SynthParams | None = None) -> TimeSeriesBundle:
    """Deterministic synthetic demand and VRE factors for ``days`` days.

    Demand is a diurnal plus weekly sinusoid with seeded noise; solar is a
    clipped daylight arc with seeded cloudiness; wind is a seeded AR(1)
    process pushed through a logistic so it stays in [0, 1].
    """
    if days < 3:
        raise InputError("days must be >= 3")
    sp = params or SynthParams()
    rng = np.random.default_rng(seed)
    H = days * 24
    h = np.arange(H)
    hod = h % 24
    demand = sp.mean_demand_mw * (
        1.0
        + sp.daily_amplitude * np.sin(2 * np.pi * (hod - 10) / 24)
        + sp.weekly_amplitude * np.cos(2 * np.pi * h / (24 * 7))
        + rng.normal(0.0, sp.noise_sd, H)
    )
    demand = np.maximum(demand, 0.0)

    arc = np.clip(np.sin(np.pi * (hod - 6) / 12), 0.0, None)
    cloud = np.repeat(rng.uniform(0.55, 1.0, days), 24)
    solar = np.clip(sp.solar_peak * arc * cloud, 0.0, 1.0)

    z = np.empty(H)
    z[0] = rng.normal(0.0, sp.wind_sd / math.sqrt(1 - sp.wind_phi**2))
    shocks = rng.normal(0.0, sp.wind_sd, H)
    for t in range(1, H):
        z[t] = sp.wind_phi * z[t - 1] + shocks[t]
    offset = math.log(sp.wind_mean / (1 - sp.wind_mean))
    wind = 1.0 / (1.0 + np.exp(-(offset + z)))
    return TimeSeriesBundle(np.round(demand, 6), np.round(wind, 6), np.round(solar, 6),
                            sp.wind_mw, sp.solar_mw)


# --------------------------------------------------------------------------- config


def load_schema() -> dict:
    with open(Path(str(resources.files("nucflex") / "presets" / "config.schema.json"))) as fh:
        return json.load(fh)


@dataclass
class CaseConfig:
    """A validated configuration document plus the directory it came from."""

    doc: dict
    base_dir: Path = field(default_factory=Path.cwd)

    def get(self, *keys, default=None):
        node = self.doc
        for k in keys:
            if not isinstance(node, dict) or k not in node or node[k] is None:
                return default
            node = node[k]
        return node

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p

    def digest(self) -> str:
        text = json.dumps(self.doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    @property
    def mode(self) -> int:
        return int(self.get("mode", default=2))

    @property
    def horizon_days(self) -> int:
        return int(self.get("horizon_days", default=90))

    def nuclide_params(self) -> NuclideParams:
        return NuclideParams(**self.get("nuclide", default={}))

    def degradation(self) -> DegradationParams:
        d = self.get("degradation", default={})
        base = DegradationParams()
        return DegradationParams(
            d.get("k_bol", base.k_BOL),
            d.get("m_per_day", base.m),
            d.get("block_scale", base.block_scale),
        )

    def table(self, params: NuclideParams | None = None) -> FlexibilityTable:
        params = params or self.nuclide_params()
        path = self.get("table")
        if path is not None:
            table = FlexibilityTable.read(self.resolve(path))
        else:
            table = shipped_table(params) or build_table(params)
        return table

    def scenario(self, mode: int | None = None, table: FlexibilityTable | None = None) -> ScenarioConfig:
        mode = self.mode if mode is None else mode
        nc = self.get("nuclear_costs", default={})
        fleet = []
        initial_k = {}
        for r in self.get("reactors", default=[]):
            fleet.append(nuclear_unit(
                r["id"], float(r["p_max"]), mode,
                c_var=nc.get("c_var", 2.8), c_start=nc.get("c_start", 107.68),
                c_shut=nc.get("c_shut", 107.68), min_up=nc.get("min_up", 4),
                min_dn_base=nc.get("min_dn_base", 6),
            ))
            if "initial_k_eff" in r:
                initial_k[r["id"]] = float(r["initial_k_eff"])
        if not fleet:
            raise InputError("configuration defines no reactors")
        st = self.get("storage")
        storage = None if st is None else StorageSpec(st["power_mw"], st["duration_h"], st.get("efficiency", 0.85))
        return ScenarioConfig(
            mode=mode,
            fleet=fleet,
            table=table if table is not None else self.table(),
            horizon_days=self.horizon_days,
            degradation=self.degradation(),
            initial_k=initial_k,
            window_hours=int(self.get("window_hours", default=72)),
            refuel_days=float(self.get("refuel_days", default=35)),
            storage=storage,
            c_nse=float(self.get("c_nse", default=9000.0)),
            delta=float(self.get("delta_mw", default=1.0)),
            big_m=self.get("big_m"),
            stable_hours=int(self.get("stable_hours", default=6)),
            rel_gap=float(self.get("rel_gap", default=1e-3)),
            backend=self.get("backend", default="highs"),
            time_limit=self.get("time_limit"),
        )

    def series(self, *, synthetic_seed: int | None = None, days: int | None = None) -> TimeSeriesBundle:
        days = days or self.horizon_days
        wind_mw = float(self.get("vre", "wind_mw", default=0.0))
        solar_mw = float(self.get("vre", "solar_mw", default=0.0))
        data = self.get("data")
        if synthetic_seed is None and data is not None:
            return load_series(self.resolve(data["demand"]), self.resolve(data["vre"]), wind_mw, solar_mw)
        syn = dict(self.get("synthetic", default={}))
        seed = synthetic_seed if synthetic_seed is not None else syn.pop("seed", 7)
        syn.pop("seed", None)
        sp = SynthParams(**syn, wind_mw=wind_mw, solar_mw=solar_mw)
        return synth_case(seed, days, sp)


def parse_config(doc, base_dir=None) -> CaseConfig:
    try:
        jsonschema.validate(doc, load_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaError(f"config {where}: {exc.message}") from exc
    return CaseConfig(doc, Path(base_dir) if base_dir else Path.cwd())


def load_config(path) -> CaseConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SchemaError(f"{path}: not valid YAML ({exc})") from exc
    return parse_config(doc if doc is not None else {}, path.parent)


# --------------------------------------------------------------------------- results


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def _write_rows(path: Path, header, rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) if not isinstance(v, str) else v for v in row])
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc


def write_results(result: ScenarioResult, out_dir, *, config_digest: str = "", horizon_days: int | None = None,
                  extra: dict | None = None) -> dict:
    """Write the result bundle and return its manifest."""
    out = Path(out_dir)
    try:
        (out / "windows").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"{out}: {exc.strerror}") from exc
    W = result.window_hours
    for n, (sol, inst) in enumerate(zip(result.solutions, result.instances)):
        write_solution(sol, inst, out / "windows" / f"w{n:04d}_units.csv",
                       out / "windows" / f"w{n:04d}_system.csv", hour_offset=n * W)
    _write_rows(out / "trajectory.csv", TRAJECTORY_FIELDS,
                ([getattr(r, f) for f in TRAJECTORY_FIELDS] for r in result.trajectory))
    _write_rows(out / "events.csv", EVENT_FIELDS,
                ([e.reactor, e.start_hour, e.end_hour, e.duration_hours, e.k_before, e.k_after]
                 for e in result.events))
    m = metrics(result) if result.solutions else None
    mdict = m.as_dict() if m else {}
    _write_rows(out / "metrics.csv", ["metric", "value"], sorted(mdict.items()))
    manifest = {
        "tool": "nucflex",
        "version": __version__,
        "config_hash": config_digest,
        "mode": result.mode,
        "window_hours": W,
        "windows": result.n_windows,
        "horizon_days": horizon_days if horizon_days is not None else result.n_windows * W // 24,
        "reactors": result.reactors,
        "flags": result.flags,
    }
    if extra:
        manifest.update(extra)
    try:
        with open(out / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=1, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise InputError(f"{out / 'manifest.json'}: {exc.strerror}") from exc
    return manifest


def _parse(v: str):
    if v == "":
        return None
    if v in ("True", "False"):
        return v == "True"
    try:
        return int(v)
    except ValueError:
        return float(v)


@dataclass
class ResultBundle:
    manifest: dict
    trajectory: list[TrajectoryRow]
    events: list[RefuelEvent]
    metrics: dict

    def series(self, attr: str, reactor: str) -> np.ndarray:
        return np.array([getattr(r, attr) for r in self.trajectory if r.reactor == reactor], dtype=float)


def read_results(out_dir) -> ResultBundle:
    out = Path(out_dir)
    try:
        manifest = json.loads((out / "manifest.json").read_text())
        with open(out / "trajectory.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        with open(out / "events.csv", newline="") as fh:
            ev_rows = list(csv.DictReader(fh))
        with open(out / "metrics.csv", newline="") as fh:
            met = {r["metric"]: _parse(r["value"]) for r in csv.DictReader(fh)}
    except OSError as exc:
        raise InputError(f"{out}: incomplete result bundle ({exc})") from exc
    traj = [
        TrajectoryRow(int(r["window"]), r["reactor"], float(r["k_eff"]), float(r["margin_pcm"]),
                      float(r["alpha"]), float(r["pmin_frac"]), float(r["deadtime_hr"]), int(r["refueling"]))
        for r in rows
    ]
    events = [
        RefuelEvent(r["reactor"], int(r["start_hour"]), _parse(r["end_hour"]), float(r["k_before"]),
                    _parse(r["k_after"]))
        for r in ev_rows
    ]
    return ResultBundle(manifest, traj, events, met)


def write_metrics_table(rows: dict[str, Metrics | dict], path=None) -> str:
    """Scenario comparison: NSE, curtailment and cost per scenario, one row each."""
    lines = ["scenario,nse_pct,curtailment_pct,cost_musd,cost_with_penalty_musd,first_refuel_day,refuel_events"]
    for name, m in rows.items():
        d = m.as_dict() if isinstance(m, Metrics) else m
        first = d["first_refuel_hour"]
        first_day = "" if first is None or math.isinf(float(first)) else _fmt(float(first) / 24)
        lines.append(",".join([
            name, _fmt(d["nse_pct"]), _fmt(d["curtailment_pct"]),
            _fmt(d["cost_without_penalty"] / 1e6), _fmt(d["cost_total"] / 1e6), first_day,
            _fmt(int(d["refuel_events"])),
        ]))
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


__all__ = [
    "TimeSeriesBundle", "SynthParams", "CaseConfig", "ResultBundle", "load_series", "synth_case",
    "load_config", "parse_config", "load_schema", "write_results", "read_results",
    "write_metrics_table", "preset_dir", "preset_path", "shipped_table",
]
