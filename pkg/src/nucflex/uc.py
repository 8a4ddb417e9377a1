"""One rolling window of the unit-commitment MILP.

Time indices run over the window hours ``0..T-1``; the hour before the
window (index -1) is described by :class:`BoundaryState`.  Ramp-state
binaries at hour ``t`` classify the change from ``t-1`` to ``t``: ``rd``
for a ramp down, ``up`` for a ramp up and ``st`` for holding steady.
Ramping acts on the auxiliary output ``p_aux = p - P_min * z_on`` so that
the window's minimum level is the reference.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    InfeasibleError,
    InternalConsistencyError,
    ModelBuildError,
    UnboundedError,
)
from .milp import MILPModel, ModelBuilder, SolveReport
from .milp import solve as milp_solve

CHECK_TOL = 1e-6
LONG_AGO = 10**6


@dataclass(frozen=True)
class GeneratorSpec:
    id: str
    p_max: float
    p_min_base: float = 0.0
    ramp_up: float | None = None
    ramp_down: float | None = None
    min_up: int = 1
    min_dn_base: int = 1
    c_var: float = 0.0
    c_start: float = 0.0  # $/MW of capacity per start
    c_shut: float = 0.0  # $/MW of capacity per shutdown
    is_nuclear: bool = False

    def __post_init__(self):
        if self.p_max <= 0:
            raise ModelBuildError(f"{self.id}: p_max must be > 0")
        if not 0.0 <= self.p_min_base <= 1.0:
            raise ModelBuildError(f"{self.id}: p_min_base must lie in [0, 1]")
        for name in ("ramp_up", "ramp_down"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ModelBuildError(f"{self.id}: {name} must be > 0")
        if min(self.c_var, self.c_start, self.c_shut) < 0:
            raise ModelBuildError(f"{self.id}: costs must be >= 0")
        if self.min_up < 1 or self.min_dn_base < 1:
            raise ModelBuildError(f"{self.id}: min up/down times must be >= 1 h")

    @property
    def ramp_up_mw(self) -> float:
        return self.p_max if self.ramp_up is None else min(self.ramp_up, self.p_max)

    @property
    def ramp_down_mw(self) -> float:
        return self.p_max if self.ramp_down is None else min(self.ramp_down, self.p_max)


@dataclass(frozen=True)
class StorageSpec:
    power: float
    duration: float
    efficiency: float = 0.85

    def __post_init__(self):
        if self.power <= 0 or self.duration <= 0 or not 0 < self.efficiency <= 1:
            raise ModelBuildError("storage power/duration must be > 0 and efficiency in (0, 1]")

    @property
    def energy(self) -> float:
        return self.power * self.duration


@dataclass(frozen=True)
class UnitLimits:
    """Per-window limits for one nuclear unit."""

    p_min_effective: float
    min_dn_effective: int
    offline_hours: int = 0

    @property
    def forced_offline(self) -> bool:
        return self.offline_hours > 0

    @classmethod
    def combine(cls, gen: GeneratorSpec, table_pmin: float, deadtime_hr: float,
                offline_hours: int = 0) -> "UnitLimits":
        """Apply the max-with-base rules to looked-up values."""
        return cls(
            max(gen.p_min_base, float(table_pmin)),
            max(gen.min_dn_base, int(np.ceil(deadtime_hr - 1e-9))),
            int(offline_hours),
        )


@dataclass(frozen=True)
class UnitBoundary:
    on: bool
    p: float = 0.0
    hours_since_start: int = LONG_AGO
    hours_since_shut: int = LONG_AGO
    last_rd: int = 0
    stable_remaining: int = 0


@dataclass(frozen=True)
class BoundaryState:
    units: Mapping[str, UnitBoundary]
    soc: float = 0.0

    @classmethod
    def initial(cls, generators: Sequence[GeneratorSpec], on: bool = True, level: float = 1.0,
                soc: float = 0.0) -> "BoundaryState":
        return cls({g.id: UnitBoundary(on, g.p_max * level if on else 0.0) for g in generators}, soc)


@dataclass
class UCInstance:
    T: int
    demand: np.ndarray
    vre_available: np.ndarray
    generators: tuple[GeneratorSpec, ...]
    boundary: BoundaryState
    storage: StorageSpec | None = None
    limits: Mapping[str, UnitLimits] = field(default_factory=dict)
    c_nse: float = 9000.0
    delta: float = 1.0
    big_m: float | None = None
    stable_hours: int = 6

    def __post_init__(self):
        self.demand = np.asarray(self.demand, dtype=float)
        self.vre_available = np.asarray(self.vre_available, dtype=float)
        self.generators = tuple(self.generators)

    def validate(self) -> None:
        if self.T < 1:
            raise ModelBuildError("T must be >= 1")
        if len(self.demand) != self.T or len(self.vre_available) != self.T:
            raise ModelBuildError("demand and vre_available must have length T")
        if np.any(self.demand < 0) or np.any(self.vre_available < 0):
            raise ModelBuildError("demand and VRE availability must be >= 0")
        if self.delta <= 0:
            raise ModelBuildError("delta must be > 0")
        if self.big_m is not None and self.big_m < max(g.p_max for g in self.generators):
            raise ModelBuildError("big_m must be >= the largest p_max")
        if self.stable_hours < 0:
            raise ModelBuildError("stable_hours must be >= 0")
        ids = [g.id for g in self.generators]
        if len(set(ids)) != len(ids):
            raise ModelBuildError("duplicate generator ids")
        for g in self.generators:
            b = self.boundary.units.get(g.id)
            if b is None:
                raise ModelBuildError(f"inconsistent boundary state: no entry for {g.id}")
            if not b.on and abs(b.p) > CHECK_TOL:
                raise ModelBuildError(f"inconsistent boundary state: {g.id} offline with p={b.p}")
            if b.p < -CHECK_TOL or b.p > g.p_max + CHECK_TOL:
                raise ModelBuildError(f"inconsistent boundary state: {g.id} p outside [0, p_max]")
            if min(b.hours_since_start, b.hours_since_shut, b.stable_remaining) < 0 or b.last_rd not in (0, 1):
                raise ModelBuildError(f"inconsistent boundary state for {g.id}")
            if b.last_rd and not b.on:
                raise ModelBuildError(f"inconsistent boundary state: {g.id} ramping while offline")
        if self.storage is not None and not -CHECK_TOL <= self.boundary.soc <= self.storage.energy + CHECK_TOL:
            raise ModelBuildError("inconsistent boundary state: storage level outside capacity")

    def unit_limits(self, g: GeneratorSpec) -> UnitLimits:
        return self.limits.get(g.id) or UnitLimits(g.p_min_base, g.min_dn_base)

    def m_for(self, g: GeneratorSpec) -> float:
        return self.big_m if self.big_m is not None else g.p_max + self.delta


@dataclass
class VarIndex:
    p: np.ndarray
    z_on: np.ndarray
    z_start: np.ndarray
    z_shut: np.ndarray
    rd: np.ndarray
    up: np.ndarray
    st: np.ndarray
    p_aux: np.ndarray
    nse: np.ndarray
    vre_used: np.ndarray
    charge: np.ndarray
    discharge: np.ndarray
    soc: np.ndarray


def _seam_reference(g: GeneratorSpec, b: UnitBoundary, pmin_mw: float) -> float:
    """Output carried into the window for ramp comparisons.

    Clipped to the window's operating range so that a tighter minimum
    level looked up for this window is reachable from the previous one.
    """
    if not b.on:
        return 0.0
    return float(min(max(b.p, pmin_mw), g.p_max))


def build(instance: UCInstance) -> tuple[MILPModel, VarIndex]:
    instance.validate()
    T = instance.T
    G = len(instance.generators)
    mb = ModelBuilder()
    neg = lambda: np.full((G, T), -1, dtype=int)  # noqa: E731
    idx = VarIndex(neg(), neg(), neg(), neg(), neg(), neg(), neg(), neg(),
                   *(np.full(T, -1, dtype=int) for _ in range(5)))

    for gi, g in enumerate(instance.generators):
        lim = instance.unit_limits(g)
        b = instance.boundary.units[g.id]
        P = g.p_max
        pmin_frac = lim.p_min_effective if g.is_nuclear else g.p_min_base
        pmin = pmin_frac * P
        for t in range(T):
            idx.p[gi, t] = mb.add_var(f"p[{g.id},{t}]", 0.0, P, cost=g.c_var)
            idx.z_on[gi, t] = mb.add_var(f"z_on[{g.id},{t}]", binary=True)
            start_cost = g.c_start * P if g.is_nuclear else 0.0
            shut_cost = g.c_shut * P if g.is_nuclear else 0.0
            idx.z_start[gi, t] = mb.add_var(f"z_start[{g.id},{t}]", binary=True, cost=start_cost)
            idx.z_shut[gi, t] = mb.add_var(f"z_shut[{g.id},{t}]", binary=True, cost=shut_cost)
            if g.is_nuclear:
                idx.rd[gi, t] = mb.add_var(f"rd[{g.id},{t}]", binary=True)
                idx.up[gi, t] = mb.add_var(f"up[{g.id},{t}]", binary=True)
                idx.st[gi, t] = mb.add_var(f"st[{g.id},{t}]", binary=True)
                idx.p_aux[gi, t] = mb.add_var(f"p_aux[{g.id},{t}]", 0.0, P)
        _commitment_rows(mb, idx, gi, g, b, lim, pmin, T)
        if g.is_nuclear:
            _stable_time_rows(mb, idx, gi, g, b, pmin, T, instance)
        else:
            _plain_ramp_rows(mb, idx, gi, g, b, T)

    st = instance.storage
    for t in range(T):
        idx.nse[t] = mb.add_var(f"nse[{t}]", 0.0, instance.demand[t], cost=instance.c_nse)
        idx.vre_used[t] = mb.add_var(f"vre_used[{t}]", 0.0, instance.vre_available[t])
        if st is not None:
            idx.charge[t] = mb.add_var(f"charge[{t}]", 0.0, st.power)
            idx.discharge[t] = mb.add_var(f"discharge[{t}]", 0.0, st.power)
            idx.soc[t] = mb.add_var(f"soc[{t}]", 0.0, st.energy)
    for t in range(T):
        terms = [(idx.p[gi, t], 1.0) for gi in range(G)]
        terms += [(idx.vre_used[t], 1.0), (idx.nse[t], 1.0)]
        if st is not None:
            terms += [(idx.discharge[t], 1.0), (idx.charge[t], -1.0)]
        mb.add_constr(terms, "=", instance.demand[t], f"balance[{t}]")
        if st is not None:
            terms = [(idx.soc[t], 1.0), (idx.charge[t], -st.efficiency), (idx.discharge[t], 1.0)]
            rhs = instance.boundary.soc if t == 0 else 0.0
            if t > 0:
                terms.append((idx.soc[t - 1], -1.0))
            mb.add_constr(terms, "=", rhs, f"storage[{t}]")
    return mb.build(), idx


def _commitment_rows(mb, idx, gi, g, b, lim, pmin, T):
    z, s, d, p = idx.z_on[gi], idx.z_start[gi], idx.z_shut[gi], idx.p[gi]
    P = g.p_max
    z_prev_const = 1.0 if b.on else 0.0
    for t in range(T):
        # z_t - z_{t-1} = start_t - shut_t
        terms = [(z[t], 1.0), (s[t], -1.0), (d[t], 1.0)]
        if t == 0:
            mb.add_constr(terms, "=", z_prev_const, f"transition[{g.id},{t}]")
        else:
            mb.add_constr(terms + [(z[t - 1], -1.0)], "=", 0.0, f"transition[{g.id},{t}]")
        mb.add_constr([(s[t], 1.0), (d[t], 1.0)], "<=", 1.0, f"one_event[{g.id},{t}]")
        mb.add_constr([(p[t], 1.0), (z[t], -pmin)], ">=", 0.0, f"min_gen[{g.id},{t}]")
        mb.add_constr([(p[t], 1.0), (z[t], -P)], "<=", 0.0, f"max_gen[{g.id},{t}]")
        up_terms = [(s[k], 1.0) for k in range(max(0, t - g.min_up + 1), t + 1)]
        mb.add_constr(up_terms + [(z[t], -1.0)], "<=", 0.0, f"min_up[{g.id},{t}]")
        dn = lim.min_dn_effective if g.is_nuclear else g.min_dn_base
        dn_terms = [(d[k], 1.0) for k in range(max(0, t - dn + 1), t + 1)]
        mb.add_constr(dn_terms + [(z[t], 1.0)], "<=", 1.0, f"min_dn[{g.id},{t}]")

    offline = min(lim.offline_hours, T) if g.is_nuclear else 0
    if offline:
        for t in range(offline):
            mb.fix(z[t], 0.0)
        return
    # obligations carried over the seam
    if b.on:
        keep_on = g.min_up - (b.hours_since_start + 1)
        for t in range(min(max(keep_on, 0), T)):
            mb.fix(z[t], 1.0)
    else:
        dn = lim.min_dn_effective if g.is_nuclear else g.min_dn_base
        keep_off = dn - (b.hours_since_shut + 1)
        for t in range(min(max(keep_off, 0), T)):
            mb.fix(z[t], 0.0)


def _plain_ramp_rows(mb, idx, gi, g, b, T):
    p, s, d = idx.p[gi], idx.z_start[gi], idx.z_shut[gi]
    P = g.p_max
    for t in range(T):
        if t == 0:
            prev_terms, prev_const = [], b.p
        else:
            prev_terms, prev_const = [(p[t - 1], -1.0)], 0.0
        mb.add_constr([(p[t], 1.0), (s[t], -P)] + prev_terms, "<=", g.ramp_up_mw + prev_const,
                      f"ramp_up[{g.id},{t}]")
        neg_prev = [(j, -a) for j, a in prev_terms]
        mb.add_constr([(p[t], -1.0), (d[t], -P)] + neg_prev, "<=", g.ramp_down_mw - prev_const,
                      f"ramp_dn[{g.id},{t}]")


def _stable_time_rows(mb, idx, gi, g, b, pmin, T, inst: UCInstance):
    p, z, d = idx.p[gi], idx.z_on[gi], idx.z_shut[gi]
    rd, up, st, aux = idx.rd[gi], idx.up[gi], idx.st[gi], idx.p_aux[gi]
    M = inst.m_for(g)
    delta = inst.delta
    RU, RD = g.ramp_up_mw, g.ramp_down_mw
    p_ref = _seam_reference(g, b, pmin)
    aux_ref = p_ref - (pmin if b.on else 0.0)
    z_ref = 1.0 if b.on else 0.0
    for t in range(T):
        mb.add_constr([(aux[t], 1.0), (p[t], -1.0), (z[t], pmin)], "=", 0.0, f"p_aux[{g.id},{t}]")
        # diff = aux_t - aux_{t-1}, as terms plus a constant moved to the rhs
        if t == 0:
            diff, c = [(aux[t], 1.0)], -aux_ref
        else:
            diff, c = [(aux[t], 1.0), (aux[t - 1], -1.0)], 0.0
        ndiff = [(j, -a) for j, a in diff]
        mb.add_constr(diff + [(up[t], -M)], ">=", delta - M - c, f"up_detect[{g.id},{t}]")
        mb.add_constr(diff + [(up[t], -RU)], "<=", -c, f"up_cap[{g.id},{t}]")
        mb.add_constr(ndiff + [(rd[t], -M)], ">=", delta - M + c, f"rd_detect[{g.id},{t}]")
        mb.add_constr(ndiff + [(rd[t], -RD), (d[t], -M)], "<=", c, f"rd_cap[{g.id},{t}]")
        mb.add_constr([(rd[t], 1.0), (up[t], 1.0), (st[t], 1.0), (z[t], -1.0)], "=", 0.0,
                      f"ramp_state[{g.id},{t}]")
        # constant output while steady: |p_t - p_{t-1}| <= M (1 - st_t) + M (1 - z_{t-1})
        if t == 0:
            pd, pc = [(p[t], 1.0)], -p_ref
            zterm, zc = [], z_ref
        else:
            pd, pc = [(p[t], 1.0), (p[t - 1], -1.0)], 0.0
            zterm, zc = [(z[t - 1], M)], 0.0
        rhs = 2 * M - M * zc
        mb.add_constr(pd + [(st[t], M)] + zterm, "<=", rhs - pc, f"steady_hi[{g.id},{t}]")
        mb.add_constr([(j, -a) for j, a in pd] + [(st[t], M)] + zterm, "<=", rhs + pc,
                      f"steady_lo[{g.id},{t}]")

    H = inst.stable_hours
    # st_h >= rd_{t-1} - rd_t - (1 - z_h) for h in [t, t + H)
    for t in range(T):
        for h in range(t, min(t + H, T)):
            terms = [(st[h], 1.0), (rd[t], 1.0), (z[h], -1.0)]
            if t == 0:
                mb.add_constr(terms, ">=", b.last_rd - 1.0, f"stable[{g.id},{t},{h}]")
            else:
                mb.add_constr(terms + [(rd[t - 1], -1.0)], ">=", -1.0, f"stable[{g.id},{t},{h}]")
    for h in range(min(b.stable_remaining, T)):
        mb.add_constr([(st[h], 1.0), (z[h], -1.0)], ">=", 0.0, f"stable_carry[{g.id},{h}]")


@dataclass
class UCSolution:
    generator_ids: list[str]
    p: np.ndarray
    z_on: np.ndarray
    z_start: np.ndarray
    z_shut: np.ndarray
    rd: np.ndarray
    up: np.ndarray
    st: np.ndarray
    p_aux: np.ndarray
    nse: np.ndarray
    vre_used: np.ndarray
    curtailment: np.ndarray
    charge: np.ndarray
    discharge: np.ndarray
    soc: np.ndarray
    objective: float
    report: SolveReport | None = None

    @property
    def T(self) -> int:
        return self.p.shape[1]

    def cost_breakdown(self, instance: UCInstance) -> dict[str, float]:
        """Objective components recomputed from the solution values."""
        var = start = shut = 0.0
        for gi, g in enumerate(instance.generators):
            var += g.c_var * float(self.p[gi].sum())
            if g.is_nuclear:
                start += g.c_start * g.p_max * float(self.z_start[gi].sum())
                shut += g.c_shut * g.p_max * float(self.z_shut[gi].sum())
        nse = instance.c_nse * float(self.nse.sum())
        return {"variable": var, "start": start, "shut": shut, "nse_penalty": nse,
                "total": var + start + shut + nse}


def extract(report: SolveReport, x, instance: UCInstance, index: VarIndex,
            model: MILPModel | None = None) -> UCSolution:
    if report.status == "infeasible":
        raise InfeasibleError("unit-commitment window is infeasible")
    if report.status == "unbounded":
        raise UnboundedError("unit-commitment window is unbounded")
    if x is None:
        raise InfeasibleError(f"solver returned no incumbent (status {report.status})")
    x = np.asarray(x, dtype=float)

    def take(ix, binary=False):
        out = np.where(ix >= 0, x[np.maximum(ix, 0)], 0.0)
        if binary:
            r = np.round(out)
            if np.any(np.abs(out - r) > CHECK_TOL):
                raise InternalConsistencyError("non-integral binary in solution")
            out = r + 0.0  # drop signed zeros
        return out

    st_present = instance.storage is not None
    zero_t = np.zeros(instance.T)
    sol = UCSolution(
        generator_ids=[g.id for g in instance.generators],
        p=take(index.p),
        z_on=take(index.z_on, True),
        z_start=take(index.z_start, True),
        z_shut=take(index.z_shut, True),
        rd=take(index.rd, True),
        up=take(index.up, True),
        st=take(index.st, True),
        p_aux=take(index.p_aux),
        nse=take(index.nse),
        vre_used=take(index.vre_used),
        curtailment=np.zeros(instance.T),
        charge=take(index.charge) if st_present else zero_t.copy(),
        discharge=take(index.discharge) if st_present else zero_t.copy(),
        soc=take(index.soc) if st_present else zero_t.copy(),
        objective=float(report.objective),
        report=report,
    )
    sol.curtailment = np.maximum(instance.vre_available - sol.vre_used, 0.0)
    problems = check_solution(instance, sol)
    if model is not None:
        viol = model.max_violation(x)
        if viol > 1e-5 * max(1.0, float(np.abs(model.rhs).max(initial=0))):
            problems.append(f"model rows violated by {viol:.3g}")
    if problems:
        raise InternalConsistencyError("; ".join(problems[:10]))
    return sol


def check_solution(instance: UCInstance, sol: UCSolution, tol: float = CHECK_TOL) -> list[str]:
    """Re-verify every unit-commitment rule directly on solution values.

    Returns a list of human-readable violations (empty when the solution
    is valid).  Written independently of :func:`build`.
    """
    out: list[str] = []
    T = instance.T
    scale = max(1.0, float(np.max(instance.demand, initial=0.0)))
    atol = tol * scale

    def bad(msg):
        out.append(msg)

    for arr_name in ("z_on", "z_start", "z_shut", "rd", "up", "st"):
        arr = getattr(sol, arr_name)
        if np.any((arr != 0) & (arr != 1)):
            bad(f"{arr_name} not binary")

    supply = sol.p.sum(axis=0) + sol.vre_used + sol.discharge - sol.charge + sol.nse
    for t in np.flatnonzero(np.abs(supply - instance.demand) > atol):
        bad(f"balance violated at hour {t}")
    if np.any(sol.vre_used > instance.vre_available + atol) or np.any(sol.vre_used < -atol):
        bad("VRE use outside availability")
    if np.any(sol.nse < -atol) or np.any(sol.nse > instance.demand + atol):
        bad("NSE outside [0, demand]")

    st = instance.storage
    if st is not None:
        prev = instance.boundary.soc
        for t in range(T):
            expect = prev + st.efficiency * sol.charge[t] - sol.discharge[t]
            if abs(sol.soc[t] - expect) > atol:
                bad(f"storage balance violated at hour {t}")
            prev = sol.soc[t]
        if (np.any(sol.soc < -atol) or np.any(sol.soc > st.energy + atol)
                or np.any(sol.charge < -atol) or np.any(sol.charge > st.power + atol)
                or np.any(sol.discharge < -atol) or np.any(sol.discharge > st.power + atol)):
            bad("storage outside limits")

    H = instance.stable_hours
    for gi, g in enumerate(instance.generators):
        b = instance.boundary.units[g.id]
        lim = instance.unit_limits(g)
        P = g.p_max
        pmin = (lim.p_min_effective if g.is_nuclear else g.p_min_base) * P
        z, s, d, p = sol.z_on[gi], sol.z_start[gi], sol.z_shut[gi], sol.p[gi]
        z_prev = np.concatenate([[1.0 if b.on else 0.0], z[:-1]])
        if np.any(z - z_prev != s - d):
            bad(f"{g.id}: commitment transitions inconsistent")
        if np.any(s + d > 1):
            bad(f"{g.id}: start and shutdown in the same hour")
        on = z == 1
        if np.any(np.abs(p[~on]) > atol):
            bad(f"{g.id}: generation while offline")
        if np.any(p[on] < pmin - atol) or np.any(p[on] > P + atol):
            bad(f"{g.id}: generation outside [P_min, P_max] while committed")
        # minimum up / down, including hours carried over the seam
        dn = lim.min_dn_effective if g.is_nuclear else g.min_dn_base
        offline = min(lim.offline_hours, T) if g.is_nuclear else 0
        if np.any(z[:offline] != 0):
            bad(f"{g.id}: committed during forced outage")
        for t in range(T):
            if s[t] and np.any(z[t:min(t + g.min_up, T)] == 0):
                bad(f"{g.id}: shut down inside min-up window after start at {t}")
            if d[t] and np.any(z[t:min(t + dn, T)] == 1):
                bad(f"{g.id}: restarted inside min-down window after shutdown at {t}")
        if not offline:
            if b.on:
                keep = max(g.min_up - (b.hours_since_start + 1), 0)
                if np.any(z[:min(keep, T)] == 0):
                    bad(f"{g.id}: carried min-up obligation broken")
            else:
                keep = max(dn - (b.hours_since_shut + 1), 0)
                if np.any(z[:min(keep, T)] == 1):
                    bad(f"{g.id}: carried min-down obligation broken")

        if not g.is_nuclear:
            p_prev = np.concatenate([[b.p], p[:-1]])
            inc = p - p_prev
            if np.any(inc > g.ramp_up_mw + P * s + atol) or np.any(-inc > g.ramp_down_mw + P * d + atol):
                bad(f"{g.id}: ramp limit exceeded")
            continue

        rd, up, stb = sol.rd[gi], sol.up[gi], sol.st[gi]
        if np.any(rd + up + stb != z):
            bad(f"{g.id}: ramp states do not partition commitment")
        aux = p - pmin * z
        if np.any(np.abs(aux - sol.p_aux[gi]) > atol):
            bad(f"{g.id}: p_aux inconsistent")
        p_ref = _seam_reference(g, b, pmin)
        aux_prev = np.concatenate([[p_ref - (pmin if b.on else 0.0)], aux[:-1]])
        p_prev = np.concatenate([[p_ref], p[:-1]])
        diff = aux - aux_prev
        for t in range(T):
            if up[t] and not (instance.delta - atol <= diff[t] <= g.ramp_up_mw + atol):
                bad(f"{g.id}: hour {t} flagged ramp-up with change {diff[t]:.3f}")
            if rd[t] and not (instance.delta - atol <= -diff[t] <= g.ramp_down_mw + atol):
                bad(f"{g.id}: hour {t} flagged ramp-down with change {diff[t]:.3f}")
            if not up[t] and diff[t] > atol:
                bad(f"{g.id}: hour {t} increases output without ramp-up flag")
            if not rd[t] and -diff[t] > atol and not d[t]:
                bad(f"{g.id}: hour {t} decreases output without ramp-down flag")
            if stb[t] and z_prev[t] == 1 and abs(p[t] - p_prev[t]) > atol:
                bad(f"{g.id}: output changes during steady hour {t}")
        rd_prev = np.concatenate([[b.last_rd], rd[:-1]])
        for t in range(T):
            if rd_prev[t] == 1 and rd[t] == 0:
                for h in range(t, min(t + H, T)):
                    if z[h] == 1 and stb[h] != 1:
                        bad(f"{g.id}: stable period after ramp-down ending at {t} broken at {h}")
        for h in range(min(b.stable_remaining, T)):
            if z[h] == 1 and stb[h] != 1:
                bad(f"{g.id}: carried stable obligation broken at {h}")

    recomputed = sol.cost_breakdown(instance)["total"]
    if abs(recomputed - sol.objective) > tol * max(1.0, abs(sol.objective)):
        bad(f"objective mismatch: solver {sol.objective!r} vs recomputed {recomputed!r}")
    return out


def solve_window(instance: UCInstance, rel_gap: float = 1e-3, backend: str = "highs",
                 node_limit: int | None = None, time_limit: float | None = None) -> UCSolution:
    model, index = build(instance)
    report, x = milp_solve(model, rel_gap, node_limit, time_limit, backend)
    return extract(report, x, instance, index, model)


def next_boundary(sol: UCSolution, instance: UCInstance) -> BoundaryState:
    T = instance.T
    H = instance.stable_hours
    units = {}
    for gi, g in enumerate(instance.generators):
        b = instance.boundary.units[g.id]
        z = sol.z_on[gi]
        on = bool(z[-1] == 1)
        z_full = np.concatenate([[1 if b.on else 0], z])  # z_full[t+1] is hour t
        if on:
            starts = [t for t in range(T) if z_full[t + 1] == 1 and z_full[t] == 0]
            hss = (T - 1 - starts[-1]) if starts else b.hours_since_start + T
            hsd = b.hours_since_shut + T if not starts else LONG_AGO
        else:
            shuts = [t for t in range(T) if z_full[t + 1] == 0 and z_full[t] == 1]
            hsd = (T - 1 - shuts[-1]) if shuts else b.hours_since_shut + T
            hss = LONG_AGO
        hss, hsd = min(hss, LONG_AGO), min(hsd, LONG_AGO)
        last_rd = int(sol.rd[gi, -1]) if g.is_nuclear else 0
        remaining = 0
        if g.is_nuclear:
            remaining = max(b.stable_remaining - T, 0)
            rd_prev = np.concatenate([[b.last_rd], sol.rd[gi, :-1]])
            for t in range(T):
                if rd_prev[t] == 1 and sol.rd[gi, t] == 0:
                    remaining = max(remaining, t + H - T)
        units[g.id] = UnitBoundary(on, float(sol.p[gi, -1]) if on else 0.0, int(hss), int(hsd),
                                   last_rd, int(remaining))
    soc = float(sol.soc[-1]) if instance.storage is not None else instance.boundary.soc
    return BoundaryState(units, soc)


UNIT_FIELDS = ["generator", "t", "p", "z_on", "z_start", "z_shut", "rd", "up", "st", "p_aux"]
SYSTEM_FIELDS = ["t", "demand", "vre_available", "vre_used", "curtailment", "nse",
                 "charge", "discharge", "soc"]


def _num(v) -> str:
    v = float(v)
    if v == 0:
        return "0"
    return repr(round(v, 9))


def write_solution(sol: UCSolution, instance: UCInstance, unit_path, system_path, hour_offset: int = 0) -> None:
    """Generator-hour and system-hour records as CSV."""
    with open(unit_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(UNIT_FIELDS)
        for gi, gid in enumerate(sol.generator_ids):
            for t in range(sol.T):
                w.writerow([gid, t + hour_offset, _num(sol.p[gi, t]), int(sol.z_on[gi, t]),
                            int(sol.z_start[gi, t]), int(sol.z_shut[gi, t]), int(sol.rd[gi, t]),
                            int(sol.up[gi, t]), int(sol.st[gi, t]), _num(sol.p_aux[gi, t])])
    with open(system_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SYSTEM_FIELDS)
        for t in range(sol.T):
            w.writerow([t + hour_offset, _num(instance.demand[t]), _num(instance.vre_available[t]),
                        _num(sol.vre_used[t]), _num(sol.curtailment[t]), _num(sol.nse[t]),
                        _num(sol.charge[t]), _num(sol.discharge[t]), _num(sol.soc[t])])


def instance_to_dict(instance: UCInstance) -> dict:
    return {
        "T": instance.T,
        "demand": [float(v) for v in instance.demand],
        "vre_available": [float(v) for v in instance.vre_available],
        "generators": [asdict(g) for g in instance.generators],
        "storage": asdict(instance.storage) if instance.storage else None,
        "limits": {k: asdict(v) for k, v in instance.limits.items()},
        "boundary": {
            "soc": instance.boundary.soc,
            "units": {k: asdict(v) for k, v in instance.boundary.units.items()},
        },
        "c_nse": instance.c_nse,
        "delta": instance.delta,
        "big_m": instance.big_m,
        "stable_hours": instance.stable_hours,
    }


def instance_from_dict(d: dict) -> UCInstance:
    return UCInstance(
        T=d["T"],
        demand=np.array(d["demand"]),
        vre_available=np.array(d["vre_available"]),
        generators=tuple(GeneratorSpec(**g) for g in d["generators"]),
        boundary=BoundaryState({k: UnitBoundary(**v) for k, v in d["boundary"]["units"].items()},
                               d["boundary"]["soc"]),
        storage=StorageSpec(**d["storage"]) if d["storage"] else None,
        limits={k: UnitLimits(**v) for k, v in d["limits"].items()},
        c_nse=d["c_nse"],
        delta=d["delta"],
        big_m=d["big_m"],
        stable_hours=d["stable_hours"],
    )


def dump_instance(instance: UCInstance, path) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_dict(instance), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_instance(path) -> UCInstance:
    with open(path) as fh:
        return instance_from_dict(json.load(fh))


__all__ = [
    "GeneratorSpec", "StorageSpec", "UnitLimits", "UnitBoundary", "BoundaryState", "UCInstance",
    "UCSolution", "VarIndex", "build", "extract", "check_solution", "solve_window",
    "next_boundary", "write_solution", "dump_instance", "load_instance",
]
