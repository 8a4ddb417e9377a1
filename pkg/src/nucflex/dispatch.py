"""Rolling-horizon dispatch with reactivity tracking and endogenous refueling.

Each window: refresh every reactor's limits from its current margin (or
hold it offline while refueling), solve the window's unit commitment,
burn the fuel by the window's capacity factor and hand the end state to
the next window.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from . import lookup
from .errors import InputError, InfeasibleError
from .lookup import FlexibilityTable
from .reactivity import CoreState, DegradationParams, capacity_factor, degrade, reactivity_margin
from .uc import (
    BoundaryState,
    GeneratorSpec,
    StorageSpec,
    UCInstance,
    UCSolution,
    UnitLimits,
    build,
    extract,
    next_boundary,
)
from .milp import solve as milp_solve

log = logging.getLogger(__name__)

# mode -> (minimum generation as a fraction of p_max, ramp rate as a fraction of p_max per hour)
MODES = {1: (1.0, None), 2: (0.5, 0.25), 3: (0.2, 0.25)}
REFUEL_TOL = 1e-12


def nuclear_unit(id: str, p_max: float, mode: int, *, c_var=2.8, c_start=107.68, c_shut=107.68,
                 min_up=4, min_dn_base=6) -> GeneratorSpec:
    """A reactor configured for one of the three operating modes."""
    if mode not in MODES:
        raise InputError(f"mode must be one of {sorted(MODES)}")
    pmin, ramp = MODES[mode]
    ramp_mw = None if ramp is None else ramp * p_max
    return GeneratorSpec(id, p_max, pmin, ramp_mw, ramp_mw, min_up, min_dn_base, c_var, c_start,
                         c_shut, True)


@dataclass
class ScenarioConfig:
    mode: int
    fleet: Sequence[GeneratorSpec]
    table: FlexibilityTable
    horizon_days: int
    degradation: Mapping[str, DegradationParams] | DegradationParams = field(default_factory=DegradationParams)
    initial_k: Mapping[str, float] = field(default_factory=dict)
    window_hours: int = 72
    refuel_days: float = 35
    storage: StorageSpec | None = None
    c_nse: float = 9000.0
    delta: float = 1.0
    big_m: float | None = None
    stable_hours: int = 6
    rel_gap: float = 1e-3
    backend: str = "highs"
    time_limit: float | None = None

    def __post_init__(self):
        if self.refuel_days <= 0:
            raise InputError("refuel_days must be > 0")
        if self.window_hours < 1:
            raise InputError("window_hours must be >= 1")
        if (self.horizon_days * 24) % self.window_hours:
            raise InputError("window_hours must divide the horizon length in hours")

    @property
    def n_windows(self) -> int:
        return self.horizon_days * 24 // self.window_hours

    @property
    def nuclear(self) -> list[GeneratorSpec]:
        return [g for g in self.fleet if g.is_nuclear]

    def degradation_for(self, gid: str) -> DegradationParams:
        if isinstance(self.degradation, DegradationParams):
            return self.degradation
        return self.degradation[gid]


@dataclass
class TrajectoryRow:
    window: int
    reactor: str
    k_eff: float
    margin_pcm: float
    alpha: float
    pmin_frac: float
    deadtime_hr: float
    refueling: int


@dataclass
class RefuelEvent:
    reactor: str
    start_hour: int
    end_hour: int | None = None
    k_before: float = float("nan")
    k_after: float | None = None

    @property
    def duration_hours(self) -> int | None:
        return None if self.end_hour is None else self.end_hour - self.start_hour


@dataclass
class ScenarioResult:
    mode: int
    window_hours: int
    reactors: list[str]
    solutions: list[UCSolution] = field(default_factory=list)
    instances: list[UCInstance] = field(default_factory=list)
    trajectory: list[TrajectoryRow] = field(default_factory=list)
    events: list[RefuelEvent] = field(default_factory=list)
    outage_windows: list[bool] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)

    @property
    def n_windows(self) -> int:
        return len(self.solutions)

    def series(self, attr: str, reactor: str) -> np.ndarray:
        return np.array([getattr(r, attr) for r in self.trajectory if r.reactor == reactor])

    def first_refuel_hour(self, reactor: str | None = None) -> float:
        hours = [e.start_hour for e in self.events if reactor is None or e.reactor == reactor]
        return float(min(hours)) if hours else math.inf


@dataclass(frozen=True)
class SeriesData:
    """Hourly demand and VRE availability, both in MW."""

    demand: np.ndarray
    vre_available: np.ndarray

    def __post_init__(self):
        if len(self.demand) != len(self.vre_available):
            raise InputError("demand and VRE series must have equal length")


def _solve_window(instance: UCInstance, config: ScenarioConfig, window: int, flags: list[str]) -> UCSolution:
    model, index = build(instance)
    gap = config.rel_gap
    report, x = milp_solve(model, gap, None, config.time_limit, config.backend)
    if report.status == "limit":
        gap *= 10
        log.warning("window %d hit a solver limit; re-solving at rel_gap %.3g", window, gap)
        report, x = milp_solve(model, gap, None, config.time_limit, config.backend)
        if report.status == "limit":
            flags.append(f"window {window}: solver limit, incumbent accepted (gap {report.gap})")
    if report.status in ("infeasible", "unbounded") or x is None:
        raise InfeasibleError(f"window {window}: {report.status}; NSE slack should make every window feasible")
    if report.status == "limit":
        report = replace(report, status="gap-feasible")
    return extract(report, x, instance, index, model)


def run(config: ScenarioConfig, data: SeriesData, *, initial_boundary: BoundaryState | None = None,
        progress=None) -> ScenarioResult:
    W = config.window_hours
    N = config.n_windows
    if len(data.demand) < N * W:
        raise InputError(f"data covers {len(data.demand)} h, scenario needs {N * W} h")
    reactors = config.nuclear
    refuel_hours = int(round(config.refuel_days * 24))
    cores = {
        g.id: CoreState(config.initial_k.get(g.id, config.degradation_for(g.id).k_BOL))
        for g in reactors
    }
    outage_left = {g.id: 0 for g in reactors}
    open_event: dict[str, RefuelEvent] = {}
    boundary = initial_boundary or BoundaryState.initial(config.fleet)
    result = ScenarioResult(config.mode, W, [g.id for g in reactors])

    for n in range(N):
        limits = {}
        rows = {}
        in_outage = False
        for g in reactors:
            core = cores[g.id]
            deg = config.degradation_for(g.id)
            if outage_left[g.id] == 0 and core.k_eff <= 1.0 + REFUEL_TOL:
                outage_left[g.id] = refuel_hours
                ev = RefuelEvent(g.id, n * W, k_before=core.k_eff)
                open_event[g.id] = ev
                result.events.append(ev)
            offline = 0
            if outage_left[g.id] > 0:
                in_outage = True
                offline = min(outage_left[g.id], W)
                outage_left[g.id] -= offline
                if outage_left[g.id] == 0:
                    core = CoreState(deg.k_BOL, 0.0, core.block_index)
                    ev = open_event.pop(g.id)
                    ev.end_hour = n * W + offline
                    ev.k_after = core.k_eff
            core = replace(core, refuel_countdown=outage_left[g.id] / 24.0)
            cores[g.id] = core
            if offline == W:
                limits[g.id] = UnitLimits(g.p_min_base, g.min_dn_base, W)
                rows[g.id] = TrajectoryRow(n, g.id, core.k_eff, math.nan, 0.0, math.nan, math.nan, 1)
                continue
            margin = reactivity_margin(core.k_eff)
            pmin, dead = lookup.query(config.table, margin)
            lim = UnitLimits.combine(g, pmin, dead, offline)
            limits[g.id] = lim
            rows[g.id] = TrajectoryRow(n, g.id, core.k_eff, margin, 0.0, lim.p_min_effective, dead,
                                       int(offline > 0))

        sl = slice(n * W, (n + 1) * W)
        instance = UCInstance(
            T=W,
            demand=data.demand[sl],
            vre_available=data.vre_available[sl],
            generators=tuple(config.fleet),
            boundary=boundary,
            storage=config.storage,
            limits=limits,
            c_nse=config.c_nse,
            delta=config.delta,
            big_m=config.big_m,
            stable_hours=config.stable_hours,
        )
        sol = _solve_window(instance, config, n, result.flags)

        for gi, g in enumerate(config.fleet):
            if not g.is_nuclear:
                continue
            core = cores[g.id]
            alpha = capacity_factor(np.clip(sol.p[gi], 0.0, g.p_max), g.p_max, W)
            rows[g.id].alpha = alpha
            if limits[g.id].offline_hours < W and outage_left[g.id] == 0:
                cores[g.id] = degrade(core, config.degradation_for(g.id), alpha)
            else:
                cores[g.id] = replace(core, block_index=core.block_index + 1)
            result.trajectory.append(rows[g.id])

        boundary = next_boundary(sol, instance)
        result.solutions.append(sol)
        result.instances.append(instance)
        result.outage_windows.append(in_outage)
        if progress is not None:
            progress(n, N)
    return result


@dataclass
class Metrics:
    nse_pct: float
    curtailment_pct: float
    curtailment_defined: bool
    cost_total: float
    cost_without_penalty: float
    nse_penalty: float
    variable_cost: float
    start_cost: float
    shut_cost: float
    nse_mwh: float
    nse_operational_mwh: float
    nse_refueling_mwh: float
    demand_mwh: float
    vre_available_mwh: float
    vre_curtailed_mwh: float
    first_refuel_hour: float
    refuel_events: int
    windows: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def metrics(result: ScenarioResult) -> Metrics:
    demand = nse = nse_ref = avail = curt = 0.0
    var = start = shut = pen = total = 0.0
    for sol, inst, outage in zip(result.solutions, result.instances, result.outage_windows):
        demand += float(inst.demand.sum())
        window_nse = float(sol.nse.sum())
        nse += window_nse
        if outage:
            nse_ref += window_nse
        avail += float(inst.vre_available.sum())
        curt += float((inst.vre_available - sol.vre_used).sum())
        parts = sol.cost_breakdown(inst)
        var += parts["variable"]
        start += parts["start"]
        shut += parts["shut"]
        pen += parts["nse_penalty"]
        total += sol.objective
    defined = avail > 0
    return Metrics(
        nse_pct=100.0 * nse / demand if demand > 0 else 0.0,
        curtailment_pct=100.0 * curt / avail if defined else 0.0,
        curtailment_defined=defined,
        cost_total=total,
        cost_without_penalty=total - pen,
        nse_penalty=pen,
        variable_cost=var,
        start_cost=start,
        shut_cost=shut,
        nse_mwh=nse,
        nse_operational_mwh=nse - nse_ref,
        nse_refueling_mwh=nse_ref,
        demand_mwh=demand,
        vre_available_mwh=avail,
        vre_curtailed_mwh=curt,
        first_refuel_hour=result.first_refuel_hour(),
        refuel_events=len(result.events),
        windows=result.n_windows,
    )
