"""Margin-dependent flexibility limits: minimum power and post-shutdown deadtime.

The xenon kinetics are simulated once, offline, and condensed into a
:class:`FlexibilityTable` mapping the remaining reactivity margin (pcm) to
the lowest reachable power fraction and the mandatory downtime after a trip
from full power.  Dispatch code only ever queries the table.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from . import kinetics
from .errors import InputError, PreconditionError, SchemaError
from .kinetics import AP1000, NuclideParams

DEADTIME_HORIZON = 240.0
TABLE_HEADER = ["margin_pcm", "pmin_frac", "deadtime_hr"]


def default_p0_grid() -> list[float]:
    return [round(0.05 * i, 10) for i in range(21)]


def default_margin_grid() -> list[float]:
    return [50.0 * i for i in range(101)]


def _check_grid(grid: Sequence[float], name: str, lo=None, hi=None) -> list[float]:
    values = [float(v) for v in grid]
    if not values:
        raise InputError(f"{name} is empty")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise InputError(f"{name} must be strictly ascending")
    if lo is not None and values[0] < lo or hi is not None and values[-1] > hi:
        raise InputError(f"{name} must lie in [{lo}, {hi}]")
    return values


def build_pmin_curve(params: NuclideParams, p0_grid: Sequence[float],
                     dt: float = kinetics.DEFAULT_DT, n_jobs: int = 1) -> list[tuple[float, float]]:
    grid = _check_grid(p0_grid, "p0_grid", 0.0, 1.0)
    if n_jobs > 1 and len(grid) > 1:
        with ProcessPoolExecutor(n_jobs) as pool:
            peaks = list(pool.map(kinetics.peak_defect, [params] * len(grid), grid, [dt] * len(grid)))
    else:
        peaks = [kinetics.peak_defect(params, p0, dt) for p0 in grid]
    return list(zip(grid, peaks))


def select_pmin(margin_pcm: float, curve: Sequence[tuple[float, float]], buffer_pcm: float = 0.0) -> float:
    """Smallest grid power whose ramp-down peak stays strictly below the margin.

    Falls back to 1.0 (no ramping) when no grid point qualifies.
    """
    if not curve:
        raise InputError("empty P0 curve")
    for p0, peak in sorted(curve):
        if margin_pcm - buffer_pcm - peak > 0:
            return float(p0)
    return 1.0


class Deadtime(NamedTuple):
    hours: float
    indefinite: bool


def deadtime(params: NuclideParams, margin_pcm: float, horizon: float = DEADTIME_HORIZON,
             dt: float = kinetics.DEFAULT_DT) -> Deadtime:
    """Hours after a full-power trip until the defect is below the margin and falling.

    Rounded up to whole hours.  If the defect is still above the margin at
    the end of ``horizon`` the result is capped at the horizon and flagged.
    """
    if margin_pcm < 0:
        raise PreconditionError("margin_pcm must be >= 0")
    trace = kinetics.shutdown_trace(params, horizon, dt)
    above = np.flatnonzero(trace.defect_pcm > margin_pcm)
    if above.size == 0:
        return Deadtime(0.0, False)
    last = int(above[-1])
    if last == len(trace) - 1:
        return Deadtime(float(math.ceil(horizon - 1e-9)), True)
    # first grid time known to be below the margin
    t_clear = float(trace.t[last + 1])
    xe = trace.xenon[last + 1]
    io = trace.iodine[last + 1]
    if params.lambda_I * io - params.lambda_Xe * xe >= 0:
        # still building up; cannot be the post-peak tail
        return Deadtime(float(math.ceil(horizon - 1e-9)), True)
    return Deadtime(float(math.ceil(t_clear - 1e-9)), False)


@dataclass
class FlexibilityTable:
    margin_pcm: np.ndarray
    pmin_frac: np.ndarray
    deadtime_hr: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.margin_pcm = np.asarray(self.margin_pcm, dtype=float)
        self.pmin_frac = np.asarray(self.pmin_frac, dtype=float)
        self.deadtime_hr = np.asarray(self.deadtime_hr, dtype=float)
        n = len(self.margin_pcm)
        if n == 0 or len(self.pmin_frac) != n or len(self.deadtime_hr) != n:
            raise InputError("table columns must be non-empty and of equal length")

    def __len__(self):
        return len(self.margin_pcm)

    def check_invariants(self) -> None:
        m, p, d = self.margin_pcm, self.pmin_frac, self.deadtime_hr
        if np.any(np.diff(m) <= 0):
            raise InputError("table margins must be strictly increasing")
        if np.any(np.diff(p) > 0):
            raise InputError("pmin_frac must be non-increasing in margin")
        if np.any(np.diff(d) > 0):
            raise InputError("deadtime_hr must be non-increasing in margin")
        if np.any((p < 0) | (p > 1)):
            raise InputError("pmin_frac outside [0, 1]")

    def rows(self):
        return list(zip(self.margin_pcm.tolist(), self.pmin_frac.tolist(), self.deadtime_hr.tolist()))

    def write(self, path) -> None:
        md = self.metadata
        header = " ".join(f"{k}={_fmt_meta(v)}" for k, v in md.items())
        with open(path, "w", newline="") as fh:
            fh.write(f"# nucflex-table {header}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TABLE_HEADER)
            for margin, pmin, dead in self.rows():
                w.writerow([repr(margin), repr(pmin), repr(dead)])

    @classmethod
    def read(cls, path) -> "FlexibilityTable":
        with open(path, newline="") as fh:
            lines = fh.read().splitlines()
        metadata = {}
        body = []
        for line in lines:
            if line.startswith("#"):
                metadata.update(_parse_meta(line))
            elif line.strip():
                body.append(line)
        if not body or next(csv.reader([body[0]])) != TABLE_HEADER:
            raise SchemaError(f"{path}: expected header {','.join(TABLE_HEADER)}")
        rows = []
        for lineno, row in enumerate(csv.reader(body[1:]), start=2):
            try:
                rows.append([float(x) for x in row])
            except ValueError as exc:
                raise InputError(f"{path}: unparseable table row {lineno}: {row}") from exc
            if len(row) != 3:
                raise InputError(f"{path}: table row {lineno} has {len(row)} fields")
        arr = np.array(rows, dtype=float).reshape(-1, 3)
        table = cls(arr[:, 0], arr[:, 1], arr[:, 2], metadata)
        table.check_invariants()
        return table


def _fmt_meta(value) -> str:
    if isinstance(value, (list, tuple)):
        return ";".join(repr(float(v)) for v in value)
    return str(value)


def _parse_meta(line: str) -> dict:
    out = {}
    for token in line.lstrip("#").split():
        if "=" in token:
            key, val = token.split("=", 1)
            out[key] = val
    return out


def build_table(params: NuclideParams, margin_grid: Sequence[float] | None = None,
                p0_grid: Sequence[float] | None = None, *, buffer_pcm: float = 0.0,
                dt: float = kinetics.DEFAULT_DT, deadtime_horizon: float = DEADTIME_HORIZON,
                n_jobs: int = 1) -> FlexibilityTable:
    margins = _check_grid(default_margin_grid() if margin_grid is None else margin_grid,
                          "margin_grid", lo=0.0)
    p0s = _check_grid(default_p0_grid() if p0_grid is None else p0_grid, "p0_grid", 0.0, 1.0)
    curve = build_pmin_curve(params, p0s, dt, n_jobs)
    pmin = [select_pmin(m, curve, buffer_pcm) for m in margins]
    dead = [deadtime(params, m, deadtime_horizon, dt).hours for m in margins]
    metadata = {
        "params": params.digest(),
        "dt": repr(dt),
        "deadtime_horizon": repr(deadtime_horizon),
        "buffer_pcm": repr(float(buffer_pcm)),
        "p0_grid": p0s,
    }
    table = FlexibilityTable(np.array(margins), np.array(pmin), np.array(dead), metadata)
    table.check_invariants()
    return table


def query(table: FlexibilityTable, margin_pcm: float) -> tuple[float, float]:
    """Conservative lookup: the row with the largest grid margin not above the query."""
    i = int(np.searchsorted(table.margin_pcm, margin_pcm, side="right")) - 1
    i = max(i, 0)
    return float(table.pmin_frac[i]), float(table.deadtime_hr[i])


def verify_table(table: FlexibilityTable, params: NuclideParams,
                 dt: float = kinetics.DEFAULT_DT) -> list[float]:
    """Re-simulate every row's ramp and return the margins whose peak is not below the margin.

    Rows pinned at full power because no ramp is safe (margin at or below the
    full-power equilibrium defect) carry no ramp and are skipped.
    """
    full_power = kinetics.peak_defect(params, 1.0, dt)
    bad = []
    for margin, pmin, _ in table.rows():
        if pmin >= 1.0 and margin <= full_power:
            continue
        if not kinetics.peak_defect(params, pmin, dt) < margin:
            bad.append(margin)
    return bad


class FlexibilityLookup(BaseEstimator):
    """Estimator wrapper around :func:`build_table` and :func:`query`.

    ``fit`` builds the table on a margin grid (``X`` as a column of margins,
    or the default 0-5000 pcm grid when ``X`` is None); ``predict`` returns
    ``(pmin_frac, deadtime_hr)`` rows for queried margins.
    """

    def __init__(self, params: NuclideParams = AP1000, p0_grid=None, buffer_pcm=0.0,
                 dt=kinetics.DEFAULT_DT, deadtime_horizon=DEADTIME_HORIZON, n_jobs=1):
        self.params = params
        self.p0_grid = p0_grid
        self.buffer_pcm = buffer_pcm
        self.dt = dt
        self.deadtime_horizon = deadtime_horizon
        self.n_jobs = n_jobs

    def fit(self, X=None, y=None):
        if X is None:
            margins = default_margin_grid()
        else:
            margins = check_array(X, ensure_2d=False).ravel().tolist()
        self.table_ = build_table(self.params, margins, self.p0_grid, buffer_pcm=self.buffer_pcm,
                                  dt=self.dt, deadtime_horizon=self.deadtime_horizon,
                                  n_jobs=self.n_jobs)
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "table_")
        margins = check_array(X, ensure_2d=False).ravel()
        return np.array([query(self.table_, m) for m in margins]).reshape(-1, 2)

    @classmethod
    def from_table(cls, table: FlexibilityTable, params: NuclideParams = AP1000):
        est = cls(params)
        est.table_ = table
        est.n_features_in_ = 1
        return est
