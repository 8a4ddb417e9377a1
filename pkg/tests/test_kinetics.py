import math
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from nucflex import kinetics as kin
from nucflex.errors import PreconditionError
from nucflex.kinetics import NuclideParams, PowerProfile, XenonState

# Hand evaluation with the AP1000 constants:
#   I_eq  = 0.0639 * 1.8e17 * 0.39497 / 0.01033                     = 4.3978e17
#   Xe_eq = 1.8e17 * 0.39497 * 0.06627 / (0.0753 + 2.65e-18*1.8e17) = 8.5306e15
#   rho   = 2.65e-18 * Xe_eq / (2.42 * 0.39497) * 1e5               = 2365.1 pcm
HAND_IODINE = 4.3978e17
HAND_XENON = 8.5306e15
HAND_DEFECT = 2365.1


def _piecewise(rhs, profile, horizon, y0):
    edges = [0.0] + [t for t in profile.times if 0 < t < horizon] + [horizon]
    y = [y0.iodine, y0.xenon]
    segments = []
    for a, b in zip(edges, edges[1:]):
        sol = solve_ivp(rhs, (a, b), y, method="LSODA", rtol=1e-10, atol=1e3, dense_output=True, max_step=0.5)
        segments.append((a, b, sol.sol))
        y = sol.y[:, -1]

    class Dense:
        def sol(self, t):
            t = np.atleast_1d(t)
            out = np.empty((2, t.size))
            for k, tk in enumerate(t):
                for a, b, f in segments:
                    if a <= tk <= b:
                        out[:, k] = f(tk)
                        break
            return out

    return Dense()


def test_flux_examples(params):
    assert kin.flux_at(params, PowerProfile.constant(1.0), 5.0) == pytest.approx(1.8e17)
    assert kin.flux_at(params, PowerProfile.constant(0.0), 3.0) == 0.0
    ramp = PowerProfile.from_points([(0.0, 1.0), (2.0, 0.5)])
    assert kin.flux_at(params, ramp, 1.0) == pytest.approx(0.75 * 1.8e17)
    with pytest.raises(PreconditionError):
        kin.flux_at(params, ramp, -1.0)


def test_equilibrium_matches_hand_values(params):
    eq = kin.equilibrium_state(params, 1.0)
    assert eq.iodine == pytest.approx(HAND_IODINE, rel=1e-4)
    assert eq.xenon == pytest.approx(HAND_XENON, rel=1e-4)
    assert kin.equilibrium_state(params, 0.0) == XenonState(0.0, 0.0)


def test_defect_examples(params):
    eq = kin.equilibrium_state(params, 1.0)
    assert kin.xenon_defect(eq, params) == pytest.approx(HAND_DEFECT, rel=1e-4)
    assert kin.xenon_defect(XenonState(1e18, 0.0), params) == 0.0
    assert kin.xenon_defect(XenonState(0.0, 2 * eq.xenon), params) == pytest.approx(
        2 * kin.xenon_defect(eq, params))


def test_step_examples(params):
    assert kin.step(XenonState(0, 0), params, 0.0, 0.05) == XenonState(0.0, 0.0)
    eq = kin.equilibrium_state(params, 1.0)
    nxt = kin.step(eq, params, params.phi0, 0.05)
    assert nxt.iodine == pytest.approx(eq.iodine, rel=1e-9)
    assert nxt.xenon == pytest.approx(eq.xenon, rel=1e-9)
    # shutdown: lambda_I * I_eq > lambda_Xe * Xe_eq, so xenon builds up
    assert params.lambda_I * eq.iodine > params.lambda_Xe * eq.xenon
    assert kin.step(eq, params, 0.0, 0.05).xenon > eq.xenon


@pytest.mark.parametrize("dt", [0.0, -0.01, 0.1000001, 0.5])
def test_step_rejects_bad_dt(params, dt):
    with pytest.raises(PreconditionError):
        kin.step(XenonState(0, 0), params, 0.0, dt)


def test_params_invariants():
    with pytest.raises(PreconditionError):
        NuclideParams(lambda_I=0.0)
    with pytest.raises(PreconditionError):
        NuclideParams(gamma_I=0.6, gamma_Xe=0.5)
    with pytest.raises(PreconditionError):
        XenonState(-1.0, 0.0)


def test_profile_validation():
    with pytest.raises(PreconditionError):
        PowerProfile((0.0, 0.0), (1.0, 0.5))
    with pytest.raises(PreconditionError):
        PowerProfile((0.0,), (1.2,))
    prof = kin.ramp_profile([1.0, 0.5, 1.0])
    assert prof.times == (0.0, 2.0, 4.0)
    assert prof(10.0) == 1.0


def test_simulate_length_and_stationarity(params):
    tr = kin.simulate(params, PowerProfile.constant(1.0), 100.0, 0.03)
    assert len(tr) == math.floor(100.0 / 0.03) + 1
    eq = kin.equilibrium_state(params, 1.0)
    assert np.max(np.abs(tr.xenon / eq.xenon - 1)) < 1e-6
    assert np.max(np.abs(tr.iodine / eq.iodine - 1)) < 1e-6
    assert np.ptp(tr.defect_pcm) / tr.defect_pcm[0] < 1e-3


def analytic_cold_start(p: NuclideParams, t: float) -> tuple[float, float]:
    """Closed-form I(t), Xe(t) at constant full power from an empty core."""
    F = p.phi0 * p.Sigma_f
    a = p.lambda_Xe + p.sigma_abs_Xe * p.phi0
    i_eq = p.gamma_I * F / p.lambda_I
    x_eq = (p.gamma_I + p.gamma_Xe) * F / a
    c1 = -p.lambda_I * i_eq / (a - p.lambda_I)
    c2 = -x_eq - c1
    return i_eq * (1 - math.exp(-p.lambda_I * t)), x_eq + c1 * math.exp(-p.lambda_I * t) + c2 * math.exp(-a * t)


def test_convergence_from_cold_core():
    """With the I-135 half-life decay constant both species settle within 0.1 % by 200 h."""
    p = NuclideParams(lambda_I=0.1033)
    t0 = time.perf_counter()
    tr = kin.simulate(p, PowerProfile.constant(1.0), 200.0, initial=XenonState(0.0, 0.0))
    elapsed = time.perf_counter() - t0
    eq = kin.equilibrium_state(p, 1.0)
    assert abs(tr.iodine[-1] / eq.iodine - 1) < 1e-3
    assert abs(tr.xenon[-1] / eq.xenon - 1) < 1e-3
    assert elapsed < 1.0


@pytest.mark.parametrize("t_end", [10.0, 50.0, 200.0])
def test_cold_start_matches_closed_form(params, t_end):
    tr = kin.simulate(params, PowerProfile.constant(1.0), t_end, initial=XenonState(0.0, 0.0))
    i_ref, x_ref = analytic_cold_start(params, tr.t[-1])
    assert tr.iodine[-1] == pytest.approx(i_ref, rel=1e-8)
    assert tr.xenon[-1] == pytest.approx(x_ref, rel=1e-8)


def test_table_decay_constant_is_slow_to_settle(params):
    """Published lambda_I leaves iodine exp(-200 lambda_I) short of equilibrium at 200 h."""
    tr = kin.simulate(params, PowerProfile.constant(1.0), 200.0, initial=XenonState(0.0, 0.0))
    eq = kin.equilibrium_state(params, 1.0)
    assert 1 - tr.iodine[-1] / eq.iodine == pytest.approx(math.exp(-200 * params.lambda_I), rel=1e-6)


def test_rk4_agrees_with_adaptive_solver(params):
    profile = kin.ramp_profile([1.0, 0.3, 1.0])
    eq = kin.equilibrium_state(params, 1.0)
    tr = kin.simulate(params, profile, 48.0, 0.02, eq)
    ref = _piecewise(
        lambda t, y: [
            -params.lambda_I * y[0] + params.gamma_I * params.Sigma_f * params.phi0 * profile(t),
            params.lambda_I * y[0] - params.lambda_Xe * y[1]
            + params.gamma_Xe * params.Sigma_f * params.phi0 * profile(t)
            - params.sigma_abs_Xe * params.phi0 * profile(t) * y[1],
        ],
        profile, 48.0, eq,
    )
    sample = np.arange(0, len(tr), 200)
    want = ref.sol(tr.t[sample])
    np.testing.assert_allclose(tr.iodine[sample], want[0], rtol=1e-6)
    np.testing.assert_allclose(tr.xenon[sample], want[1], rtol=1e-6)


def test_ramp_down_single_peak(params):
    tr = kin.simulate(params, kin.ramp_profile([1.0, 0.5]), 96.0)
    i = int(np.argmax(tr.xenon))
    assert 0 < tr.t[i] <= 12.0
    assert np.all(np.diff(tr.xenon[: i + 1]) >= 0)
    assert np.all(np.diff(tr.xenon[i:]) <= 0)
    eq50 = kin.equilibrium_state(params, 0.5).xenon
    assert abs(tr.xenon[-1] - eq50) < abs(tr.xenon[i] - eq50)


def test_down_up_peak_below_plain_ramp_down(params):
    down = kin.simulate(params, kin.shape_profile("down", 0.5), 96.0).peak()[1]
    down_up = kin.simulate(params, kin.shape_profile("down-up", 0.5), 96.0).peak()[1]
    assert down_up < down


def test_peak_defect_conventions(params):
    full = kin.xenon_defect(kin.equilibrium_state(params, 1.0), params)
    assert kin.peak_defect(params, 1.0) == pytest.approx(full, rel=1e-9)
    grid = [i / 10 for i in range(11)]
    peaks = [kin.peak_defect(params, p) for p in grid]
    assert all(b <= a for a, b in zip(peaks, peaks[1:]))
    assert peaks[0] > max(peaks[1:])


def test_step_size_convergence(params):
    prof = kin.ramp_profile([1.0, 0.0])
    a = kin.simulate(params, prof, 72.0, 0.1).peak()[1]
    b = kin.simulate(params, prof, 72.0, 0.05).peak()[1]
    assert abs(a - b) / b < 5e-4


def test_trace_csv(tmp_path, params):
    tr = kin.simulate(params, PowerProfile.constant(0.5), 1.0, 0.1)
    path = tmp_path / "k.csv"
    tr.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t_hr,power,iodine,xenon,defect_pcm"
    assert len(lines) == len(tr) + 1


@settings(max_examples=30, deadline=None)
@given(
    levels=st.lists(st.floats(0.0, 1.0), min_size=1, max_size=4),
    rate=st.floats(0.05, 2.0),
    dt=st.sampled_from([0.02, 0.05, 0.1]),
    i0=st.floats(0, 1e18),
    x0=st.floats(0, 5e16),
)
def test_concentrations_stay_nonnegative(params, levels, rate, dt, i0, x0):
    prof = kin.ramp_profile(levels, rate)
    tr = kin.simulate(params, prof, 24.0, dt, XenonState(i0, x0))
    assert np.all(tr.iodine >= 0) and np.all(tr.xenon >= 0)


@settings(max_examples=15, deadline=None)
@given(lam=st.floats(0.005, 0.5), frac=st.floats(0.0, 1.0))
def test_equilibrium_is_a_fixed_point(lam, frac):
    p = NuclideParams(lambda_I=lam)
    eq = kin.equilibrium_state(p, frac)
    nxt = kin.step(eq, p, p.phi0 * frac, 0.1)
    assert nxt.iodine == pytest.approx(eq.iodine, rel=1e-9, abs=1e-6)
    assert nxt.xenon == pytest.approx(eq.xenon, rel=1e-9, abs=1e-6)
