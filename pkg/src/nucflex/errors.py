"""Exception hierarchy shared across the package."""


class NucflexError(Exception):
    """Base class for all package errors."""


class PreconditionError(NucflexError, ValueError):
    """An operation was called with arguments outside its contract."""


class InputError(NucflexError, ValueError):
    """Malformed user data (series files, grids, configuration)."""


class SchemaError(InputError):
    """A file or document does not match its published schema."""


class InvalidCoreStateError(NucflexError, ValueError):
    """Core state that should have triggered refueling (k_eff < 1)."""


class ModelBuildError(NucflexError):
    """A unit-commitment instance cannot be turned into a consistent model."""


class SolverNumericalError(NucflexError, ArithmeticError):
    """The reference LP backend met a numerically singular basis."""


class InfeasibleError(NucflexError):
    """Solver proved the model infeasible."""


class UnboundedError(NucflexError):
    """Solver proved the model unbounded."""


class InternalConsistencyError(NucflexError, AssertionError):
    """A solution failed the independent constraint re-check."""
