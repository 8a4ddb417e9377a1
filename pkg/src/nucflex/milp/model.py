"""Solver-neutral MILP container and a small incremental builder."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from ..errors import ModelBuildError

SENSES = ("<=", ">=", "=")


@dataclass
class MILPModel:
    """minimize c.x + offset  s.t.  A x (sense) rhs,  lb <= x <= ub,  x_j in {0,1} for binaries."""

    c: np.ndarray
    A: sparse.csr_matrix
    sense: list[str]
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    binary: np.ndarray
    var_names: list[str] = field(default_factory=list)
    row_names: list[str] = field(default_factory=list)
    offset: float = 0.0

    @property
    def n_vars(self) -> int:
        return len(self.c)

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    @property
    def n_binaries(self) -> int:
        return int(self.binary.sum())

    def validate(self) -> None:
        if self.A.shape != (len(self.rhs), len(self.c)):
            raise ModelBuildError("constraint matrix shape does not match rhs/objective")
        for name, arr in (("c", self.c), ("rhs", self.rhs), ("A", self.A.data)):
            if not np.all(np.isfinite(arr)):
                raise ModelBuildError(f"non-finite entries in {name}")
        if np.any(self.lb > self.ub):
            raise ModelBuildError("variable with lb > ub")
        if np.any(np.isnan(self.lb)) or np.any(np.isnan(self.ub)):
            raise ModelBuildError("NaN bound")
        b = self.binary
        if np.any(self.lb[b] < 0) or np.any(self.ub[b] > 1):
            raise ModelBuildError("binary variable bounds must lie within [0, 1]")
        if any(s not in SENSES for s in self.sense):
            raise ModelBuildError("unknown constraint sense")

    def objective(self, x: np.ndarray) -> float:
        return float(self.c @ x + self.offset)

    def row_ranges(self) -> tuple[np.ndarray, np.ndarray]:
        """Constraints as lo <= A x <= hi."""
        lo = np.full(self.n_rows, -np.inf)
        hi = np.full(self.n_rows, np.inf)
        for i, (s, r) in enumerate(zip(self.sense, self.rhs)):
            if s in ("<=", "="):
                hi[i] = r
            if s in (">=", "="):
                lo[i] = r
        return lo, hi

    def max_violation(self, x: np.ndarray) -> float:
        """Largest absolute violation over rows, bounds and integrality."""
        x = np.asarray(x, dtype=float)
        ax = self.A @ x
        lo, hi = self.row_ranges()
        viol = [0.0]
        viol.append(float(np.max(np.maximum(lo - ax, 0), initial=0)))
        viol.append(float(np.max(np.maximum(ax - hi, 0), initial=0)))
        viol.append(float(np.max(np.maximum(self.lb - x, 0), initial=0)))
        viol.append(float(np.max(np.maximum(x - self.ub, 0), initial=0)))
        xb = x[self.binary]
        viol.append(float(np.max(np.abs(xb - np.round(xb)), initial=0)))
        return max(viol)

    def with_bounds(self, lb: np.ndarray, ub: np.ndarray) -> "MILPModel":
        return MILPModel(self.c, self.A, self.sense, self.rhs, lb, ub, self.binary,
                         self.var_names, self.row_names, self.offset)


class ModelBuilder:
    """Accumulate variables and rows, then freeze into a :class:`MILPModel`."""

    def __init__(self):
        self._c: list[float] = []
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._bin: list[bool] = []
        self.var_names: list[str] = []
        self._rows: list[int] = []
        self._cols: list[int] = []
        self._vals: list[float] = []
        self._sense: list[str] = []
        self._rhs: list[float] = []
        self.row_names: list[str] = []
        self.offset = 0.0

    def add_var(self, name: str, lb: float = 0.0, ub: float = math.inf, *,
                binary: bool = False, cost: float = 0.0) -> int:
        if binary:
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        self._c.append(float(cost))
        self._lb.append(float(lb))
        self._ub.append(float(ub))
        self._bin.append(bool(binary))
        self.var_names.append(name)
        return len(self._c) - 1

    def add_cost(self, j: int, cost: float) -> None:
        self._c[j] += cost

    def fix(self, j: int, value: float) -> None:
        self._lb[j] = self._ub[j] = float(value)

    def add_constr(self, terms, sense: str, rhs: float, name: str = "") -> int:
        """``terms`` is an iterable of (var index, coefficient); repeated indices are summed."""
        if sense not in SENSES:
            raise ModelBuildError(f"unknown sense {sense!r}")
        i = len(self._rhs)
        merged: dict[int, float] = {}
        for j, a in terms:
            merged[j] = merged.get(j, 0.0) + float(a)
        for j in sorted(merged):
            if merged[j] != 0.0:
                self._rows.append(i)
                self._cols.append(j)
                self._vals.append(merged[j])
        self._sense.append(sense)
        self._rhs.append(float(rhs))
        self.row_names.append(name)
        return i

    def build(self) -> MILPModel:
        n, m = len(self._c), len(self._rhs)
        A = sparse.csr_matrix((self._vals, (self._rows, self._cols)), shape=(m, n))
        model = MILPModel(
            np.array(self._c), A, list(self._sense), np.array(self._rhs),
            np.array(self._lb), np.array(self._ub), np.array(self._bin, dtype=bool),
            list(self.var_names), list(self.row_names), self.offset,
        )
        model.validate()
        return model
