"""MILP solve front-end: reference branch-and-bound and a HiGHS backend.

The reference backend is exact, single threaded and deterministic.  HiGHS
(through :func:`scipy.optimize.milp`) is used for window-sized dispatch
models where the reference backend would be too slow.
"""
from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass

import numpy as np

from ..errors import PreconditionError
from .model import MILPModel
from .simplex import FEAS_TOL, solve_lp

GAP_EPS = 1e-9
INT_TOL = 1e-6


@dataclass
class SolveReport:
    status: str  # optimal | gap-feasible | infeasible | unbounded | limit
    objective: float | None
    bound: float | None
    gap: float | None
    wall_time: float
    nodes: int
    backend: str = "reference"

    @property
    def has_solution(self) -> bool:
        return self.objective is not None

    def key(self) -> tuple:
        """Everything except wall time, for determinism checks."""
        return (self.status, self.objective, self.bound, self.gap, self.nodes, self.backend)


def relative_gap(incumbent: float, bound: float) -> float:
    return max(incumbent - bound, 0.0) / max(abs(incumbent), GAP_EPS)


def solve(model: MILPModel, rel_gap: float = 1e-3, node_limit: int | None = None,
          time_limit: float | None = None, backend: str = "reference"):
    """Solve ``model``; returns ``(SolveReport, x)`` with ``x`` None when no incumbent exists."""
    model.validate()
    if backend == "reference":
        return _branch_and_bound(model, rel_gap, node_limit, time_limit)
    if backend == "highs":
        return _highs(model, rel_gap, node_limit, time_limit)
    raise PreconditionError(f"unknown backend {backend!r}")


def _lp(model: MILPModel, lb, ub):
    return solve_lp(model.c, model.A, model.sense, model.rhs, lb, ub)


def _branch_and_bound(model, rel_gap, node_limit, time_limit):
    start = time.perf_counter()
    binaries = np.flatnonzero(model.binary)
    counter = itertools.count()
    incumbent_x = None
    incumbent = np.inf
    nodes = 0
    unbounded = False

    root = _lp(model, model.lb.copy(), model.ub.copy())
    nodes += 1
    if root.status == "unbounded":
        return SolveReport("unbounded", None, None, None, time.perf_counter() - start, nodes), None
    if root.status != "optimal":
        return SolveReport("infeasible" if root.status == "infeasible" else "limit", None, None, None,
                           time.perf_counter() - start, nodes), None
    # heap entries: (bound, tie counter, lb, ub, lp x)
    heap = [(root.objective, next(counter), model.lb.copy(), model.ub.copy(), root.x)]
    hit_limit = False
    while heap:
        best_bound = heap[0][0]
        if incumbent_x is not None and relative_gap(incumbent, best_bound) <= rel_gap:
            break
        if node_limit is not None and nodes >= node_limit or (
            time_limit is not None and time.perf_counter() - start > time_limit
        ):
            hit_limit = True
            break
        bound, _, lb, ub, x = heapq.heappop(heap)
        if bound >= incumbent - _prune_tol(incumbent):
            continue
        frac = np.abs(x[binaries] - np.round(x[binaries]))
        if binaries.size == 0 or frac.max() <= INT_TOL:
            xi = x.copy()
            xi[binaries] = np.round(xi[binaries])
            if model.max_violation(xi) <= FEAS_TOL * 10:
                value = float(model.c @ xi)
                if value < incumbent:
                    incumbent, incumbent_x = value, xi
                continue
        j = int(binaries[_most_fractional(x[binaries])])
        for val in (0.0, 1.0):
            clb, cub = lb.copy(), ub.copy()
            clb[j] = cub[j] = val
            res = _lp(model, clb, cub)
            nodes += 1
            if res.status == "unbounded":
                unbounded = True
                continue
            if res.status != "optimal":
                continue
            if res.objective < incumbent - _prune_tol(incumbent):
                heapq.heappush(heap, (res.objective, next(counter), clb, cub, res.x))
    wall = time.perf_counter() - start
    if incumbent_x is None:
        if unbounded:
            return SolveReport("unbounded", None, None, None, wall, nodes), None
        status = "limit" if hit_limit else "infeasible"
        best = heap[0][0] + model.offset if heap else None
        return SolveReport(status, None, best, None, wall, nodes), None
    bound = min(heap[0][0], incumbent) if heap else incumbent
    gap = relative_gap(incumbent, bound)
    if hit_limit:
        status = "limit"
    elif not heap or gap <= 0.0:
        status = "optimal"
    else:
        status = "gap-feasible"
    return (
        SolveReport(status, incumbent + model.offset, bound + model.offset, gap, wall, nodes),
        incumbent_x,
    )


def _prune_tol(incumbent: float) -> float:
    if not np.isfinite(incumbent):
        return 0.0
    return 1e-9 * max(1.0, abs(incumbent))


def _most_fractional(xb: np.ndarray) -> int:
    """Position of the binary closest to 0.5; lowest position on ties."""
    dist = np.abs(xb - np.floor(xb) - 0.5)  # 0 means x = k + 0.5
    frac = np.abs(xb - np.round(xb))
    dist = np.where(frac > INT_TOL, dist, np.inf)
    return int(np.argmin(dist))


def _highs(model: MILPModel, rel_gap, node_limit, time_limit):
    from scipy.optimize import Bounds, LinearConstraint, milp

    start = time.perf_counter()
    lo, hi = model.row_ranges()
    options = {"mip_rel_gap": rel_gap, "disp": False, "presolve": True}
    if time_limit is not None:
        options["time_limit"] = time_limit
    if node_limit is not None:
        options["node_limit"] = node_limit
    constraints = [LinearConstraint(model.A, lo, hi)] if model.n_rows else []
    res = milp(model.c, constraints=constraints, integrality=model.binary.astype(int),
               bounds=Bounds(model.lb, model.ub), options=options)
    wall = time.perf_counter() - start
    nodes = int(getattr(res, "mip_node_count", 0) or 0)
    if res.status == 2:
        return SolveReport("infeasible", None, None, None, wall, nodes, "highs"), None
    if res.status == 3:
        return SolveReport("unbounded", None, None, None, wall, nodes, "highs"), None
    if res.x is None:
        return SolveReport("limit", None, None, None, wall, nodes, "highs"), None
    x = np.asarray(res.x, dtype=float)
    x[model.binary] = np.round(x[model.binary])
    obj = float(model.c @ x)
    bound = getattr(res, "mip_dual_bound", None)
    bound = obj if bound is None or not np.isfinite(bound) else min(float(bound), obj)
    gap = relative_gap(obj, bound)
    if res.status == 0:
        status = "optimal" if gap <= 1e-9 else "gap-feasible"
    else:
        status = "limit"
    return SolveReport(status, obj + model.offset, bound + model.offset, gap, wall, nodes, "highs"), x
