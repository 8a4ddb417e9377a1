"""Plain-text model dump/load.

Format (one record per line, whitespace separated, ``#`` comments)::

    nucflex-milp 1
    OFFSET <float>
    VAR <index> <name> <lb> <ub> <C|B> <cost>
    ROW <index> <name> <sense> <rhs>
    COEF <row> <col> <value>

Floats are written with ``repr`` so a dump/load round trip is exact.
Names must not contain whitespace; empty names are written as ``-``.
"""
from __future__ import annotations

import numpy as np
from scipy import sparse

from ..errors import SchemaError
from .model import MILPModel

MAGIC = "nucflex-milp 1"


def dumps(model: MILPModel) -> str:
    lines = [MAGIC, f"OFFSET {model.offset!r}"]
    names = model.var_names or [""] * model.n_vars
    for j in range(model.n_vars):
        kind = "B" if model.binary[j] else "C"
        lines.append(f"VAR {j} {names[j] or '-'} {float(model.lb[j])!r} {float(model.ub[j])!r} "
                     f"{kind} {float(model.c[j])!r}")
    rnames = model.row_names or [""] * model.n_rows
    for i in range(model.n_rows):
        lines.append(f"ROW {i} {rnames[i] or '-'} {model.sense[i]} {float(model.rhs[i])!r}")
    coo = model.A.tocoo()
    order = np.lexsort((coo.col, coo.row))
    for k in order:
        lines.append(f"COEF {coo.row[k]} {coo.col[k]} {float(coo.data[k])!r}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> MILPModel:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0].strip() != MAGIC:
        raise SchemaError("not a nucflex-milp dump")
    offset = 0.0
    var, row, coef = [], [], []
    for ln in lines[1:]:
        parts = ln.split()
        tag = parts[0]
        if tag == "OFFSET":
            offset = float(parts[1])
        elif tag == "VAR":
            var.append(parts[1:])
        elif tag == "ROW":
            row.append(parts[1:])
        elif tag == "COEF":
            coef.append((int(parts[1]), int(parts[2]), float(parts[3])))
        else:
            raise SchemaError(f"unknown record {tag!r}")
    n, m = len(var), len(row)
    if [int(v[0]) for v in var] != list(range(n)) or [int(r[0]) for r in row] != list(range(m)):
        raise SchemaError("VAR/ROW records must be numbered consecutively from 0")
    name = lambda s: "" if s == "-" else s  # noqa: E731
    A = sparse.csr_matrix(
        ([c[2] for c in coef], ([c[0] for c in coef], [c[1] for c in coef])), shape=(m, n)
    )
    model = MILPModel(
        c=np.array([float(v[5]) for v in var]),
        A=A,
        sense=[r[2] for r in row],
        rhs=np.array([float(r[3]) for r in row]),
        lb=np.array([float(v[2]) for v in var]),
        ub=np.array([float(v[3]) for v in var]),
        binary=np.array([v[4] == "B" for v in var], dtype=bool),
        var_names=[name(v[1]) for v in var],
        row_names=[name(r[1]) for r in row],
        offset=offset,
    )
    model.validate()
    return model


def dump(model: MILPModel, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(model))


def load(path) -> MILPModel:
    with open(path) as fh:
        return loads(fh.read())
