from .enumerate import enumerate_exact
from .io import dump, dumps, load, loads
from .model import MILPModel, ModelBuilder
from .simplex import LPResult, solve_lp
from .solver import SolveReport, solve

__all__ = [
    "MILPModel", "ModelBuilder", "SolveReport", "LPResult",
    "solve", "solve_lp", "enumerate_exact", "dump", "dumps", "load", "loads",
]
