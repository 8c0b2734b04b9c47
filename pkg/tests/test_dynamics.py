import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bayesmag import dynamics
from bayesmag.dynamics import (
    DARK,
    PropagationError,
    dark_state,
    hamiltonian_ideal,
    hamiltonian_refined,
    p_d_analytic,
    propagate,
    propagate_refined,
    rabi_period,
    step_grid,
    step_times,
)
from bayesmag.noise import NoiseConfig, make_trace
from bayesmag.physics import SensorConfig, SignalConfig, khz


def test_analytic_population_endpoints():
    om = khz(1.0)
    t_r = rabi_period(om)
    assert p_d_analytic(0.0, om) == pytest.approx(1.0)
    assert p_d_analytic(t_r / 2, om) == pytest.approx(0.0, abs=1e-15)
    assert p_d_analytic(t_r, om) == pytest.approx(1.0)


def test_ideal_hamiltonian_reproduces_cos2():
    om = khz(1.0)
    h = hamiltonian_ideal(om)
    assert h.is_hermitian()
    t = np.linspace(0, 2 * rabi_period(om), 41)
    res = propagate(lambda _: h, dark_state(), t, max_step=rabi_period(om) / 2000)
    np.testing.assert_allclose(res.p_d, p_d_analytic(t, om), atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(
    t=st.floats(0, 1e-3),
    om_tg=st.floats(0, 5e4),
    xi=st.floats(-5e3, 5e3),
    mu=st.floats(-1e3, 1e3),
    eps=st.floats(-0.05, 0.05),
)
def test_refined_hamiltonian_hermitian(t, om_tg, xi, mu, eps):
    h = hamiltonian_refined(t, SensorConfig(b_z=0.5e-3), SignalConfig(om_tg, xi), mu, eps)
    assert h.is_hermitian()


def test_refined_without_signal_stays_near_dark_state():
    # only the fast counter-rotating MW terms move |D> when Omega_tg = 0
    res = propagate_refined(SensorConfig(b_z=0.5e-3), SignalConfig(0.0), [1e-5, 5e-5])
    assert np.all(res.p_d > 1 - 1e-4)


def test_compiled_and_generic_paths_agree():
    sensor = SensorConfig(b_z=0.5e-3)
    signal = SignalConfig(khz(12.0), khz(0.1), 0.3)
    t = np.linspace(0, 2e-6, 5)
    fast = propagate_refined(sensor, signal, t)
    h = dynamics.refined_step(sensor, signal)
    slow = propagate(lambda s: hamiltonian_refined(s, sensor, signal), dark_state(), t, max_step=h)
    np.testing.assert_allclose(fast.p_d, slow.p_d, atol=1e-12)
    np.testing.assert_allclose(fast.final_state, slow.final_state, atol=1e-12)


def test_step_convergence():
    sensor = SensorConfig(b_z=0.5e-3)
    signal = SignalConfig(khz(12.0), khz(0.1))
    t = np.linspace(0, 0.236e-3, 20)
    a = propagate_refined(sensor, signal, t, steps_per_period=50).p_d
    b = propagate_refined(sensor, signal, t, steps_per_period=100).p_d
    assert np.max(np.abs(a - b)) < 1e-7


def test_norm_preserved():
    sensor = SensorConfig(b_z=0.5e-3)
    res = propagate_refined(sensor, SignalConfig(khz(12.0), khz(0.1)), np.linspace(0, 0.236e-3, 20))
    assert np.max(np.abs(res.norms - 1)) <= 1e-8
    assert np.linalg.norm(res.final_state) == pytest.approx(1.0, abs=1e-9)


def test_step_grid_hits_sample_times():
    t = np.array([0.0, 1e-6, 2.5e-6, 7e-6])
    steps, widths = step_grid(t, 3e-7)
    assert steps[0] == 0
    np.testing.assert_allclose(np.cumsum(steps * widths), t, rtol=1e-14, atol=1e-20)
    assert np.all(widths[1:] <= 3e-7 * (1 + 1e-12))
    grid = step_times(steps, widths)
    assert grid.size == steps.sum()
    assert grid[0] == 0.0 and np.all(np.diff(grid) > 0)


def test_bad_times_rejected():
    with pytest.raises(ValueError):
        propagate_refined(SensorConfig(), SignalConfig(1.0), [2e-6, 1e-6])
    with pytest.raises(ValueError):
        propagate_refined(SensorConfig(), SignalConfig(1.0), [])


def test_unreachable_accuracy_raises(monkeypatch):
    monkeypatch.setattr(dynamics, "MAX_STEPS", 1000)
    with pytest.raises(PropagationError):
        propagate_refined(SensorConfig(), SignalConfig(khz(1.0)), [1e-3])


def test_noise_trace_length_checked():
    sensor, signal = SensorConfig(b_z=0.5e-3), SignalConfig(khz(12.0))
    t = np.array([1e-6, 2e-6])

    class Short:
        mu = np.zeros(3)
        eps = np.zeros(3)

    with pytest.raises(ValueError):
        propagate_refined(sensor, signal, t, noise=Short())


def test_silent_noise_equals_noiseless():
    sensor, signal = SensorConfig(b_z=0.5e-3), SignalConfig(khz(12.0), khz(0.1))
    t = np.linspace(0, 5e-5, 6)
    steps, widths = step_grid(t, dynamics.refined_step(sensor, signal))
    trace = make_trace(NoiseConfig().silent(), step_times(steps, widths), np.random.default_rng(0))
    a = propagate_refined(sensor, signal, t).p_d
    b = propagate_refined(sensor, signal, t, noise=trace).p_d
    np.testing.assert_array_equal(a, b)


def test_large_drift_logged(caplog):
    sensor, signal = SensorConfig(b_z=0.5e-3), SignalConfig(khz(12.0))
    with caplog.at_level(logging.WARNING, logger="bayesmag.dynamics"):
        # far too coarse: RK4 loses norm quickly
        propagate_refined(sensor, signal, [2e-5], steps_per_period=3)
    assert "norm drift" in caplog.text


def test_dark_state_index():
    assert dark_state()[DARK] == 1
