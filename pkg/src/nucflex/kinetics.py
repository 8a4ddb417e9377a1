"""Iodine-135 / xenon-135 balance under a time-varying neutron flux.

Concentrations are in atoms/cm^3, time in hours, flux in n/cm^2/hr and the
xenon defect in pcm.  The integrator is a fixed-step classical Runge-Kutta
scheme; every public function is pure.
"""
from __future__ import annotations

import bisect
import csv
import hashlib
import math
from dataclasses import astuple, dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import PreconditionError

MAX_DT = 0.1
DEFAULT_DT = 0.02
PEAK_HORIZON = 96.0
RAMP_RATE = 0.25  # fraction of full power per hour


@dataclass(frozen=True)
class NuclideParams:
    """Nuclear constants of the one-point xenon model.

    The default values are the AP1000 set.  Note that the iodine decay
    constant 0.01033 /hr is an order of magnitude below the value implied
    by the 6.6 h half-life of I-135 (about 0.1033 /hr); it is shipped as
    published and can be overridden like any other field.
    """

    lambda_I: float = 0.01033
    lambda_Xe: float = 0.0753
    gamma_I: float = 0.0639
    gamma_Xe: float = 0.00237
    sigma_abs_Xe: float = 2.65e-18
    Sigma_f: float = 0.39497
    nu: float = 2.42
    phi0: float = 1.8e17

    def __post_init__(self):
        for name, value in zip(self.__dataclass_fields__, astuple(self)):
            if not (math.isfinite(value) and value > 0):
                raise PreconditionError(f"{name} must be finite and > 0, got {value!r}")
        if self.gamma_I + self.gamma_Xe >= 1:
            raise PreconditionError("gamma_I + gamma_Xe must be < 1")

    def digest(self) -> str:
        text = ",".join(repr(v) for v in astuple(self))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


AP1000 = NuclideParams()


@dataclass(frozen=True)
class XenonState:
    iodine: float
    xenon: float

    def __post_init__(self):
        if self.iodine < 0 or self.xenon < 0:
            raise PreconditionError(f"negative concentration in {self!r}")


@dataclass(frozen=True)
class PowerProfile:
    """Piecewise-linear power fraction, constant after the last breakpoint."""

    times: tuple[float, ...]
    fractions: tuple[float, ...]

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        fractions = tuple(float(f) for f in self.fractions)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "fractions", fractions)
        if not times or len(times) != len(fractions):
            raise PreconditionError("profile needs matching, non-empty times and fractions")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise PreconditionError("profile times must be strictly increasing")
        if any(not 0.0 <= f <= 1.0 for f in fractions):
            raise PreconditionError("power fractions must lie in [0, 1]")

    @classmethod
    def constant(cls, fraction: float) -> "PowerProfile":
        return cls((0.0,), (fraction,))

    @classmethod
    def from_points(cls, points: Iterable[tuple[float, float]]) -> "PowerProfile":
        pts = list(points)
        return cls(tuple(p[0] for p in pts), tuple(p[1] for p in pts))

    def __call__(self, t: float) -> float:
        ts = self.times
        if t <= ts[0]:
            return self.fractions[0]
        if t >= ts[-1]:
            return self.fractions[-1]
        i = bisect.bisect_right(ts, t)
        t0, t1 = ts[i - 1], ts[i]
        f0, f1 = self.fractions[i - 1], self.fractions[i]
        return f0 + (f1 - f0) * (t - t0) / (t1 - t0)

    @property
    def initial(self) -> float:
        return self.fractions[0]


def ramp_profile(levels: Sequence[float], rate: float = RAMP_RATE, start: float = 0.0) -> PowerProfile:
    """Chain of linear ramps through ``levels`` at ``rate`` fraction/hr.

    ``ramp_profile([1.0, 0.5])`` is the full-power to 50 % ramp-down that
    starts at t=0 and holds afterwards.  Equal consecutive levels are merged.
    """
    if rate <= 0:
        raise PreconditionError("ramp rate must be positive")
    levels = [float(x) for x in levels]
    points = [(start, levels[0])]
    for level in levels[1:]:
        t, prev = points[-1]
        t_next = t + abs(level - prev) / rate
        if t_next == t:  # equal levels, or a step too small to register in t
            continue
        points.append((t_next, level))
    return PowerProfile.from_points(points)


def flux_at(params: NuclideParams, profile: PowerProfile, t: float) -> float:
    if t < 0:
        raise PreconditionError("t must be >= 0")
    return params.phi0 * profile(t)


def equilibrium_state(params: NuclideParams, power_fraction: float) -> XenonState:
    if not 0.0 <= power_fraction <= 1.0:
        raise PreconditionError("power_fraction must lie in [0, 1]")
    phi = params.phi0 * power_fraction
    iodine = params.gamma_I * phi * params.Sigma_f / params.lambda_I
    xenon = phi * params.Sigma_f * (params.gamma_I + params.gamma_Xe) / (
        params.lambda_Xe + params.sigma_abs_Xe * phi
    )
    return XenonState(iodine, xenon)


def _rhs(p: NuclideParams, iodine: float, xenon: float, phi: float) -> tuple[float, float]:
    fission = phi * p.Sigma_f
    d_iodine = -p.lambda_I * iodine + p.gamma_I * fission
    d_xenon = (
        p.lambda_I * iodine
        - p.lambda_Xe * xenon
        + p.gamma_Xe * fission
        - p.sigma_abs_Xe * phi * xenon
    )
    return d_iodine, d_xenon


def _check_dt(dt: float) -> None:
    if not (0.0 < dt <= MAX_DT):
        raise PreconditionError(f"dt must satisfy 0 < dt <= {MAX_DT} h, got {dt!r}")


def _rk4(p, iodine, xenon, phi_a, phi_m, phi_b, dt):
    k1 = _rhs(p, iodine, xenon, phi_a)
    k2 = _rhs(p, iodine + 0.5 * dt * k1[0], xenon + 0.5 * dt * k1[1], phi_m)
    k3 = _rhs(p, iodine + 0.5 * dt * k2[0], xenon + 0.5 * dt * k2[1], phi_m)
    k4 = _rhs(p, iodine + dt * k3[0], xenon + dt * k3[1], phi_b)
    iodine += dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    xenon += dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    # RK4 can undershoot zero by rounding on a decaying component
    return max(iodine, 0.0), max(xenon, 0.0)


def step(state: XenonState, params: NuclideParams, flux: float, dt: float) -> XenonState:
    """Advance one RK4 step under a flux held constant over the step."""
    _check_dt(dt)
    if flux < 0:
        raise PreconditionError("flux must be >= 0")
    return XenonState(*_rk4(params, state.iodine, state.xenon, flux, flux, flux, dt))


def xenon_defect(state: XenonState, params: NuclideParams) -> float:
    return params.sigma_abs_Xe * state.xenon / (params.nu * params.Sigma_f) * 1e5


@dataclass(frozen=True)
class KineticsTrace:
    t: np.ndarray
    iodine: np.ndarray
    xenon: np.ndarray
    defect_pcm: np.ndarray = field(repr=False)
    power: np.ndarray | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.t)

    def peak(self) -> tuple[float, float]:
        """(time, defect) of the maximum defect; first occurrence on ties."""
        i = int(np.argmax(self.defect_pcm))
        return float(self.t[i]), float(self.defect_pcm[i])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t_hr", "power", "iodine", "xenon", "defect_pcm"])
            power = self.power if self.power is not None else np.full(len(self.t), np.nan)
            for row in zip(self.t, power, self.iodine, self.xenon, self.defect_pcm):
                w.writerow([f"{row[0]:.6f}", *(repr(float(v)) for v in row[1:])])


def n_steps(horizon: float, dt: float) -> int:
    return int(math.floor(horizon / dt + 1e-9))


def simulate(
    params: NuclideParams,
    profile: PowerProfile,
    horizon: float,
    dt: float = DEFAULT_DT,
    initial: XenonState | None = None,
) -> KineticsTrace:
    """Integrate from ``initial`` (default: equilibrium at the profile's
    starting power) and sample at every step, t = 0, dt, ..., n*dt."""
    if horizon <= 0:
        raise PreconditionError("horizon must be > 0")
    _check_dt(dt)
    if initial is None:
        initial = equilibrium_state(params, profile.initial)
    n = n_steps(horizon, dt)
    t = np.arange(n + 1) * dt
    io = np.empty(n + 1)
    xe = np.empty(n + 1)
    iodine, xenon = initial.iodine, initial.xenon
    io[0], xe[0] = iodine, xenon
    phi0 = params.phi0
    for k in range(n):
        ta = k * dt
        iodine, xenon = _rk4(
            params, iodine, xenon,
            phi0 * profile(ta), phi0 * profile(ta + 0.5 * dt), phi0 * profile(ta + dt),
            dt,
        )
        io[k + 1], xe[k + 1] = iodine, xenon
    defect = params.sigma_abs_Xe * xe / (params.nu * params.Sigma_f) * 1e5
    power = np.array([profile(tk) for tk in t])
    return KineticsTrace(t, io, xe, defect, power)


@lru_cache(maxsize=512)
def peak_defect(params: NuclideParams, P0_fraction: float, dt: float = DEFAULT_DT,
                horizon: float = PEAK_HORIZON) -> float:
    """Absolute maximum defect (pcm) over a full-power to ``P0_fraction``
    ramp at 25 %/hr, held for the rest of ``horizon``.

    The maximum includes t=0, so ``P0_fraction=1`` returns the full-power
    equilibrium defect.
    """
    if not 0.0 <= P0_fraction <= 1.0:
        raise PreconditionError("P0_fraction must lie in [0, 1]")
    profile = ramp_profile([1.0, P0_fraction])
    trace = simulate(params, profile, horizon, dt, equilibrium_state(params, 1.0))
    return float(trace.defect_pcm.max())


@lru_cache(maxsize=32)
def shutdown_trace(params: NuclideParams, horizon: float, dt: float = DEFAULT_DT) -> KineticsTrace:
    """Instant full-power to zero shutdown from full-power equilibrium."""
    return simulate(params, PowerProfile.constant(0.0), horizon, dt,
                    equilibrium_state(params, 1.0))


RAMP_SHAPES = ("none", "down", "up", "down-up", "up-down")


def shape_profile(shape: str, p0: float, rate: float = RAMP_RATE) -> PowerProfile:
    """The four ramp scenarios (plus a flat reference) between full power and ``p0``."""
    if shape == "none":
        return PowerProfile.constant(1.0)
    if shape == "down":
        return ramp_profile([1.0, p0], rate)
    if shape == "up":
        return ramp_profile([p0, 1.0], rate)
    if shape == "down-up":
        return ramp_profile([1.0, p0, 1.0], rate)
    if shape == "up-down":
        return ramp_profile([p0, 1.0, p0], rate)
    raise PreconditionError(f"unknown ramp shape {shape!r}; choose from {RAMP_SHAPES}")
