"""Exhaustive oracle: every binary assignment, one LP per surviving leaf.

Subtrees are skipped only when interval arithmetic over the variable
bounds proves a row unsatisfiable, which never changes the optimum.  Leaf
LPs go through HiGHS so the oracle shares no code with the reference
simplex.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

from ..errors import PreconditionError
from .model import MILPModel

MAX_BINARIES = 24
_TOL = 1e-9


def enumerate_exact(model: MILPModel, max_binaries: int = MAX_BINARIES):
    """Return ``(status, objective, x)``; status is optimal, infeasible or unbounded."""
    model.validate()
    bins = np.flatnonzero(model.binary)
    if bins.size > max_binaries:
        raise PreconditionError(f"{bins.size} binaries exceed the oracle limit of {max_binaries}")
    A = model.A.toarray()
    lo_row, hi_row = model.row_ranges()
    lb, ub = model.lb.copy(), model.ub.copy()

    best = [np.inf, None]
    unbounded = [False]

    def activity_range(lb, ub):
        with np.errstate(invalid="ignore"):
            t1, t2 = A * lb, A * ub
        t1 = np.nan_to_num(t1, nan=0.0, posinf=np.inf, neginf=-np.inf)  # 0 * inf
        t2 = np.nan_to_num(t2, nan=0.0, posinf=np.inf, neginf=-np.inf)
        return np.minimum(t1, t2).sum(axis=1), np.maximum(t1, t2).sum(axis=1)

    def possible(lb, ub):
        amin, amax = activity_range(lb, ub)
        slack = 1e-7 * (1 + np.abs(lo_row)) + 1e-7
        return not (np.any(amax < lo_row - slack) or np.any(amin > hi_row + 1e-7 * (1 + np.abs(hi_row)) + 1e-7))

    def leaf(lb, ub):
        A_ub, b_ub, A_eq, b_eq = _split_rows(A, lo_row, hi_row)
        res = linprog(model.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                      bounds=list(zip(_none(lb), _none(ub))), method="highs")
        if res.status == 3:
            unbounded[0] = True
        elif res.status == 0 and res.fun < best[0] - _TOL * max(1.0, abs(best[0]) if np.isfinite(best[0]) else 1.0):
            best[0], best[1] = float(res.fun), np.asarray(res.x)

    def recurse(k, lb, ub):
        if not possible(lb, ub):
            return
        if k == bins.size:
            leaf(lb, ub)
            return
        j = bins[k]
        for v in (0.0, 1.0):
            if v < lb[j] or v > ub[j]:
                continue
            clb, cub = lb.copy(), ub.copy()
            clb[j] = cub[j] = v
            recurse(k + 1, clb, cub)

    recurse(0, lb, ub)
    if unbounded[0]:
        return "unbounded", None, None
    if best[1] is None:
        return "infeasible", None, None
    x = best[1].copy()
    x[bins] = np.round(x[bins])
    return "optimal", best[0] + model.offset, x


def _none(arr):
    return [None if not np.isfinite(v) else float(v) for v in arr]


def _split_rows(A, lo, hi):
    eq = np.isfinite(lo) & np.isfinite(hi) & (lo == hi)
    up = np.isfinite(hi) & ~eq
    dn = np.isfinite(lo) & ~eq
    A_ub = np.vstack([A[up], -A[dn]])
    b_ub = np.concatenate([hi[up], -lo[dn]])
    if A_ub.shape[0] == 0:
        A_ub = b_ub = None
    A_eq = A[eq] if eq.any() else None
    b_eq = lo[eq] if eq.any() else None
    return A_ub, b_ub, A_eq, b_eq
