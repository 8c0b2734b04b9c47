import numpy as np
import pytest
from hypothesis import given, strategies as st

from bayesmag.noise import (
    NoiseConfig,
    OUParams,
    calibrate_sigma_mu,
    coherence_monte_carlo,
    make_trace,
    ou_path,
    ou_step,
    zeta_variance,
)


def test_ou_params_validated():
    with pytest.raises(ValueError):
        OUParams(0.0, 1.0)
    with pytest.raises(ValueError):
        OUParams(1.0, -1.0)


def test_ou_step_conditional_moments():
    p = OUParams(1.0, 2.0)
    rng = np.random.default_rng(1)
    dt, x0, n = 0.3, 1.5, 200_000
    xs = np.array([ou_step(x0, dt, p, rng) for _ in range(n // 10)])
    a = np.exp(-dt)
    se = p.sigma * np.sqrt(1 - a * a) / np.sqrt(xs.size)
    assert abs(xs.mean() - x0 * a) < 4 * se
    with pytest.raises(ValueError):
        ou_step(0.0, 0.0, p, rng)


def test_zero_sigma_path_is_zero():
    assert np.all(ou_path(np.linspace(0, 1, 10), OUParams(1.0, 0.0), np.random.default_rng(0)) == 0)


def test_zeta_variance_limits():
    p = OUParams(2.0, 3.0)
    t = 1e-3
    # ballistic regime: mu is frozen, zeta = mu t
    assert zeta_variance(t, p, stationary=True) == pytest.approx(p.sigma**2 * t**2, rel=1e-3)
    # from mu(0) = 0 the variance starts cubically, 2 sigma^2 t^3 / (3 tau)
    assert zeta_variance(t, p) == pytest.approx(2 * p.sigma**2 * t**3 / (3 * p.tau), rel=1e-3)
    # diffusive regime: 2 sigma^2 tau t for either start
    t = 1e4
    for stationary in (False, True):
        v = zeta_variance(t, p, stationary)
        assert v == pytest.approx(2 * p.sigma**2 * p.tau * t, rel=1e-3)
    with pytest.raises(ValueError):
        zeta_variance(-1.0, p)


@given(st.floats(1e-3, 1e-1), st.floats(2.0, 1e3))
def test_calibration_solves_unit_decay(t2, ratio):
    tau = t2 / ratio
    s = calibrate_sigma_mu(t2, tau)
    assert zeta_variance(t2, OUParams(tau, s)) == pytest.approx(2.0, rel=1e-9)


def test_calibration_default_values():
    cfg = NoiseConfig()
    assert cfg.mu_params.tau == pytest.approx(5.3e-5)
    with pytest.raises(ValueError):
        calibrate_sigma_mu(1.0, 2.0)


def test_silent_config():
    s = NoiseConfig().silent()
    assert s.mu_params.sigma == 0 and s.eps_params.sigma == 0


def test_trace_on_grid():
    grid = np.linspace(0, 1e-3, 101)
    tr = make_trace(NoiseConfig(), grid, np.random.default_rng(0))
    assert tr.mu.shape == grid.shape == tr.eps.shape


def test_coherence_short_time_near_one():
    p = OUParams(1.0, 1.0)
    m, se = coherence_monte_carlo(1e-3, p, 1000, np.random.default_rng(0))
    assert m == pytest.approx(1.0, abs=1e-5)


@pytest.mark.parametrize("stationary", [False, True])
def test_coherence_matches_gaussian_formula(stationary):
    p = OUParams(0.1, 3.0)
    t = 0.5
    m, se = coherence_monte_carlo(t, p, 20_000, np.random.default_rng(3), stationary=stationary)
    assert abs(m - np.exp(-zeta_variance(t, p, stationary) / 2)) < 4 * se + 2e-3
