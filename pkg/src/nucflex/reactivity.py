"""Multiplication-factor bookkeeping across dispatch blocks."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import InputError, InvalidCoreStateError, PreconditionError

DEFAULT_K_BOL = 1.045
FULL_POWER_CYCLE_DAYS = 540


@dataclass(frozen=True)
class DegradationParams:
    """Linear k_eff burnup model.

    ``m`` is the k_eff loss per full-power day; ``block_scale`` converts it
    to a loss per dispatch block (3 for a 72 h window).  The default ``m``
    exhausts the default BOL excess in 540 full-power days.
    """

    k_BOL: float = DEFAULT_K_BOL
    m: float = (DEFAULT_K_BOL - 1.0) / FULL_POWER_CYCLE_DAYS
    block_scale: float = 3.0

    def __post_init__(self):
        if not self.k_BOL > 1:
            raise PreconditionError("k_BOL must be > 1")
        if not self.m > 0:
            raise PreconditionError("m must be > 0")
        if not self.block_scale >= 1:
            raise PreconditionError("block_scale must be >= 1")

    @classmethod
    def calibrated(cls, k_BOL: float = DEFAULT_K_BOL, cycle_days: float = FULL_POWER_CYCLE_DAYS,
                   block_scale: float = 3.0) -> "DegradationParams":
        return cls(k_BOL, (k_BOL - 1.0) / cycle_days, block_scale)


@dataclass(frozen=True)
class CoreState:
    k_eff: float
    refuel_countdown: float = 0.0
    block_index: int = 0

    def __post_init__(self):
        if self.refuel_countdown < 0:
            raise PreconditionError("refuel_countdown must be >= 0")


def reactivity_margin(k_eff: float) -> float:
    """Excess reactivity (k - 1)/k in pcm."""
    if k_eff < 1:
        raise InvalidCoreStateError(f"k_eff={k_eff!r} < 1; the core should be refueling")
    return (k_eff - 1.0) / k_eff * 1e5


def capacity_factor(generation: Sequence[float], p_max: float, T: int | None = None) -> float:
    gen = np.asarray(generation, dtype=float)
    if T is None:
        T = len(gen)
    if len(gen) != T:
        raise InputError(f"generation series has {len(gen)} entries, expected {T}")
    if T == 0:
        raise InputError("empty generation series")
    if p_max <= 0:
        raise InputError("p_max must be > 0")
    tol = 1e-6 * p_max
    if np.any(gen < -tol) or np.any(gen > p_max + tol):
        raise InputError("generation outside [0, p_max]")
    return float(np.clip(gen.sum() / (p_max * T), 0.0, 1.0))


def degrade(state: CoreState, params: DegradationParams, alpha: float) -> CoreState:
    if not 0.0 <= alpha <= 1.0:
        raise PreconditionError(f"alpha must lie in [0, 1], got {alpha!r}")
    return replace(
        state,
        k_eff=state.k_eff - params.m * params.block_scale * alpha,
        block_index=state.block_index + 1,
    )


def full_power_cycle_days(params: DegradationParams) -> int:
    """Days of continuous full power until k_eff reaches 1."""
    return math.ceil((params.k_BOL - 1.0) / params.m - 1e-9)
