"""Bounded-variable primal simplex (two phases, Bland's rule).

Dense and deliberately plain: it serves desk-scale relaxations inside the
reference branch-and-bound, where determinism matters more than speed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from ..errors import SolverNumericalError

FEAS_TOL = 1e-7
OPT_TOL = 1e-7
PIVOT_TOL = 1e-9

_LOWER, _UPPER, _FREE, _BASIC = 0, 1, 2, 3


@dataclass
class LPResult:
    status: str  # optimal | infeasible | unbounded | limit
    x: np.ndarray | None
    objective: float | None
    iterations: int


def solve_lp(c, A, sense, rhs, lb, ub, max_iter: int = 50_000) -> LPResult:
    """Minimize ``c @ x`` subject to row senses and simple bounds.

    ``A`` may be dense or sparse; it is densified here.
    """
    A = A.toarray() if hasattr(A, "toarray") else np.asarray(A, dtype=float)
    m, n = A.shape
    c = np.asarray(c, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    if np.any(lb > ub + FEAS_TOL):
        return LPResult("infeasible", None, None, 0)
    if m == 0:
        x = np.where(c > 0, lb, np.where(c < 0, ub, np.where(np.isfinite(lb), lb, np.where(np.isfinite(ub), ub, 0.0))))
        if not np.all(np.isfinite(x)):
            return LPResult("unbounded", None, None, 0)
        return LPResult("optimal", x, float(c @ x), 0)

    # slacks: A x + s = rhs
    s_lo = np.array([0.0 if s == "<=" else (-np.inf if s == ">=" else 0.0) for s in sense])
    s_hi = np.array([np.inf if s == "<=" else 0.0 for s in sense])

    x0 = np.where(np.isfinite(lb), lb, np.where(np.isfinite(ub), ub, 0.0))
    resid = rhs - A @ x0

    # columns: structurals, slacks, then artificials where the slack cannot absorb the residual
    cols = [A, np.eye(m)]
    lo = [lb, s_lo]
    hi = [ub, s_hi]
    value = np.concatenate([x0, np.zeros(m)])
    basis = []
    art_cols = []
    for i in range(m):
        r = resid[i]
        if s_lo[i] - FEAS_TOL <= r <= s_hi[i] + FEAS_TOL:
            basis.append(n + i)
            value[n + i] = r
        else:
            art_cols.append(i)
    n_art = len(art_cols)
    if n_art:
        E = np.zeros((m, n_art))
        for k, i in enumerate(art_cols):
            E[i, k] = 1.0 if resid[i] >= 0 else -1.0
        cols.append(E)
        lo.append(np.zeros(n_art))
        hi.append(np.full(n_art, np.inf))
        value = np.concatenate([value, np.abs(resid[art_cols])])
        # artificial k is basic in row art_cols[k]; keep basis ordered by row
        row_to_var = {i: n + i for i in range(m) if i not in art_cols}
        for k, i in enumerate(art_cols):
            row_to_var[i] = n + m + k
        basis = [row_to_var[i] for i in range(m)]

    M = np.hstack(cols)
    lo = np.concatenate(lo)
    hi = np.concatenate(hi)
    N = M.shape[1]
    status = np.full(N, _LOWER)
    for j in range(N):
        if np.isfinite(lo[j]) and value[j] == lo[j]:
            status[j] = _LOWER
        elif np.isfinite(hi[j]) and value[j] == hi[j]:
            status[j] = _UPPER
        else:
            status[j] = _FREE
    for j in basis:
        status[j] = _BASIC

    total_iter = 0
    if n_art:
        c1 = np.zeros(N)
        c1[n + m:] = 1.0
        st, it = _iterate(M, rhs, c1, lo, hi, value, status, basis, max_iter)
        total_iter += it
        if st != "optimal":
            return LPResult("limit" if st == "limit" else "infeasible", None, None, total_iter)
        if value[n + m:].sum() > FEAS_TOL * max(1.0, np.abs(rhs).max()):
            return LPResult("infeasible", None, None, total_iter)
        # pin artificials at zero for phase 2
        hi[n + m:] = 0.0
        for j in range(n + m, N):
            value[j] = 0.0 if status[j] != _BASIC else value[j]
            if status[j] != _BASIC:
                status[j] = _LOWER

    c2 = np.concatenate([c, np.zeros(N - n)])
    st, it = _iterate(M, rhs, c2, lo, hi, value, status, basis, max_iter - total_iter)
    total_iter += it
    if st != "optimal":
        return LPResult(st, None, None, total_iter)
    x = value[:n].copy()
    return LPResult("optimal", x, float(c @ x), total_iter)


def _factor(M, basis):
    B = M[:, basis]
    try:
        lu = la.lu_factor(B, check_finite=False)
    except (la.LinAlgError, ValueError) as exc:
        raise SolverNumericalError("singular basis") from exc
    diag = np.abs(np.diag(lu[0]))
    if diag.min() < 1e-11 * max(1.0, diag.max()):
        raise SolverNumericalError("numerically singular basis")
    return lu


def _iterate(M, rhs, cost, lo, hi, value, status, basis, max_iter):
    """Primal simplex from a primal-feasible basis; updates state in place."""
    m = M.shape[0]
    nonbasic_mask = status != _BASIC
    for it in range(max_iter):
        lu = _factor(M, basis)
        nb = np.flatnonzero(status != _BASIC)
        # recompute basic values from nonbasic ones to avoid drift
        xb = la.lu_solve(lu, rhs - M[:, nb] @ value[nb], check_finite=False)
        value[basis] = xb
        y = la.lu_solve(lu, cost[basis], trans=1, check_finite=False)
        d = cost - y @ M

        entering = -1
        direction = 0
        for j in nb:  # Bland: lowest eligible index
            if lo[j] == hi[j]:
                continue
            sj = status[j]
            if d[j] < -OPT_TOL and (sj == _LOWER or sj == _FREE):
                entering, direction = j, 1
                break
            if d[j] > OPT_TOL and (sj == _UPPER or sj == _FREE):
                entering, direction = j, -1
                break
        if entering < 0:
            return "optimal", it

        w = la.lu_solve(lu, M[:, entering], check_finite=False)
        # basic i moves by -direction * w_i per unit step
        theta = hi[entering] - lo[entering]
        leave_row = -1
        leave_to = None
        for i in range(m):
            delta = -direction * w[i]
            if abs(delta) <= PIVOT_TOL:
                continue
            bj = basis[i]
            if delta < 0:
                if not np.isfinite(lo[bj]):
                    continue
                ratio = max((value[bj] - lo[bj]) / -delta, 0.0)
                bound = _LOWER
            else:
                if not np.isfinite(hi[bj]):
                    continue
                ratio = max((hi[bj] - value[bj]) / delta, 0.0)
                bound = _UPPER
            if ratio < theta - 1e-12 or (
                leave_row >= 0 and abs(ratio - theta) <= 1e-12 and bj < basis[leave_row]
            ):
                theta, leave_row, leave_to = ratio, i, bound
        if not np.isfinite(theta):
            return "unbounded", it

        value[entering] += direction * theta
        if leave_row < 0:
            # bound flip of the entering variable
            status[entering] = _UPPER if direction > 0 else _LOWER
            continue
        bj = basis[leave_row]
        value[basis] = value[basis] - direction * theta * w
        value[bj] = lo[bj] if leave_to == _LOWER else hi[bj]
        status[bj] = leave_to
        status[entering] = _BASIC
        basis[leave_row] = entering
    return "limit", max_iter
