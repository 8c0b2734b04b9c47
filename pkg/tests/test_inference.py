import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import comb

from bayesmag.inference import (
    ChainSamples,
    Flat,
    Gaussian,
    GridPosterior,
    InferenceError,
    Likelihood,
    MCMCConfig,
    MCMCError,
    ParameterPoint,
    Prior,
    case_i_prior,
    find_modes,
    grid_posterior,
    log_binomial_pmf,
    log_likelihood,
    marginal_histogram,
    metropolis_chain,
    metropolis_run,
    posterior_moments,
    r_hat,
    summarize,
)
from bayesmag.io import load_fixture
from bayesmag.measurement import Dataset
from bayesmag.physics import TWO_PI, khz


# -- binomial pmf ---------------------------------------------------------


def test_pmf_oracle_values():
    assert np.exp(log_binomial_pmf(2, 4, 0.5)) == pytest.approx(0.375, rel=1e-14)
    assert log_binomial_pmf(4, 4, 1.0) == 0.0
    assert log_binomial_pmf(0, 4, 0.0) == 0.0
    assert log_binomial_pmf(1, 4, 0.0) == -np.inf
    assert log_binomial_pmf(3, 4, 1.0) == -np.inf


@given(st.integers(1, 50), st.floats(0, 1))
def test_pmf_normalised(n, p):
    x = np.arange(n + 1)
    assert np.exp(log_binomial_pmf(x, n, p)).sum() == pytest.approx(1.0, abs=1e-12)


@given(st.integers(1, 40), st.data(), st.floats(0.01, 0.99))
def test_pmf_matches_direct_formula(n, data, p):
    x = data.draw(st.integers(0, n))
    assert np.exp(log_binomial_pmf(x, n, p)) == pytest.approx(comb(n, x) * p**x * (1 - p) ** (n - x), rel=1e-10)


def test_pmf_domain_errors():
    for args in ((5, 4, 0.5), (-1, 4, 0.5), (1.5, 4, 0.5), (1, 4, 1.2), (1, 4, np.nan)):
        with pytest.raises(ValueError):
            log_binomial_pmf(*args)


# -- priors and points ----------------------------------------------------


def test_prior_validation():
    with pytest.raises(ValueError):
        Flat(1.0, 1.0)
    with pytest.raises(ValueError):
        Flat(0.0, np.inf)
    with pytest.raises(ValueError):
        Gaussian(0.0, 0.0)
    with pytest.raises(ValueError):
        ParameterPoint(-1.0)
    with pytest.raises(ValueError):
        Prior(())


def test_product_prior_density():
    pr = Prior((Flat(0.0, 2.0), Gaussian(0.0, 1.0)))
    assert pr.logpdf([1.0, 0.0]) == pytest.approx(-np.log(2) - 0.5 * np.log(2 * np.pi))
    assert pr.logpdf([3.0, 0.0]) == -np.inf


# -- likelihood ------------------------------------------------------------


def test_saturated_data_has_zero_loglike():
    d = Dataset([0.0, 1e-3], [4, 4], 4)
    # Omega = 0 keeps P = 1; the clamp costs 4 log(1 - 1e-9) per point
    assert log_likelihood(d, ParameterPoint(0.0)) == pytest.approx(0.0, abs=1e-7)


def test_truth_beats_far_value_case_i():
    d = load_fixture("case_i_nm20")
    assert log_likelihood(d, ParameterPoint(khz(1.0))) > log_likelihood(d, ParameterPoint(khz(3.0)))


def test_ideal_requires_resonance():
    d = load_fixture("case_i_nm4")
    with pytest.raises(ValueError):
        log_likelihood(d, ParameterPoint(khz(1.0), khz(0.1)))
    with pytest.raises(ValueError):
        Likelihood(d, "other")


def test_refined_likelihood_memoised():
    d = load_fixture("case_ii_nm20")
    like = Likelihood(d, "refined")
    a = like(ParameterPoint(khz(12.0), khz(0.1)))
    b = like(ParameterPoint(khz(12.0) + 1e-4, khz(0.1)))
    assert a == b and like.evaluations == 1


def test_case_i_grid_argmax_nm20():
    d = load_fixture("case_i_nm20")
    grid = np.linspace(0, khz(4.2), 2000)
    post = grid_posterior(d, case_i_prior(), grid)
    assert abs(post.argmax()[0] - khz(1.0048)) <= 1.5 * (grid[1] - grid[0]) + khz(0.001)


# -- grid posterior ---------------------------------------------------------


def test_flat_prior_posterior_proportional_to_likelihood():
    d = load_fixture("case_i_nm4")
    grid = np.linspace(khz(0.5), khz(1.5), 201)
    post = grid_posterior(d, Prior((Flat(khz(0.5), khz(1.5)),)), grid)
    like = np.exp([log_likelihood(d, ParameterPoint(w)) for w in grid])
    ratio = post.density / like
    assert np.ptp(ratio) / ratio.mean() < 1e-10


def test_grid_density_normalised_2d():
    d = Dataset([0.0, 1e-4], [2, 1], 4)
    om = np.linspace(0, khz(10), 30)
    xi = np.linspace(-khz(1), khz(1), 11)
    pr = Prior((Flat(0.0, khz(10)), Gaussian(0.0, khz(0.5))))
    post = grid_posterior(d, pr, (om, xi), likelihood=lambda th: -((th.omega_tg_rabi - khz(3)) / khz(1)) ** 2)
    assert np.trapezoid(np.trapezoid(post.density, xi, axis=1), om) == pytest.approx(1.0, abs=1e-6)
    for k, ax in enumerate((om, xi)):
        a, m = post.marginal(k)
        assert np.trapezoid(m, a) == pytest.approx(1.0, abs=1e-6)


def test_empty_dataset_gives_prior():
    d = Dataset([], [], 4)
    grid = np.linspace(0, khz(4.2), 100)
    post = grid_posterior(d, case_i_prior(), grid)
    np.testing.assert_allclose(post.density, 1 / khz(4.2), rtol=1e-12)


def test_grid_outside_support_rejected():
    with pytest.raises(ValueError):
        grid_posterior(load_fixture("case_i_nm4"), case_i_prior(), np.linspace(0, khz(5), 10))


def test_zero_mass_row_raises():
    with pytest.raises(InferenceError):
        GridPosterior((np.arange(3.0),), np.full(3, -np.inf))


def test_moments_two_point_and_delta():
    post = GridPosterior((np.array([1.0, 2.0]),), np.zeros(2))
    assert posterior_moments(post)[0] == pytest.approx(1.5)
    ax = np.linspace(0, 1, 101)
    lp = np.full(101, -np.inf)
    lp[40] = 0.0
    m, s = posterior_moments(GridPosterior((ax,), lp))
    assert m == pytest.approx(0.4) and s <= ax[1] - ax[0]


# -- Metropolis -------------------------------------------------------------


def test_mcmc_config_validation():
    with pytest.raises(ValueError):
        MCMCConfig(n_mc=100, burn_in=100)
    with pytest.raises(ValueError):
        MCMCConfig(proposal_sigma=(1.0, 0.0))


def gaussian_toy(mu, sd):
    return lambda th: -0.5 * ((th.omega_tg_rabi - mu) / sd) ** 2


def test_metropolis_gaussian_toy_target():
    mu, sd = 5000.0, 300.0
    cfg = MCMCConfig(n_mc=20_000, n_chains=4, proposal_sigma=(600.0,), seed=11)
    s = metropolis_run(None, Prior((Flat(0.0, 20_000.0),)), cfg, likelihood=gaussian_toy(mu, sd))
    m, sdev = posterior_moments(s)
    # effective sample size of a random walk at this width is roughly n/10
    n_eff = s.pooled().size / 10
    assert abs(m - mu) < 3 * sd / np.sqrt(n_eff)
    assert abs(sdev - sd) < 3 * sd / np.sqrt(2 * n_eff)
    assert np.all(s.r_hat < 1.05)
    dens, edges = marginal_histogram(s, bins=40)
    c = 0.5 * (edges[1:] + edges[:-1])
    w = dens * np.diff(edges)
    assert w @ c == pytest.approx(mu, abs=3 * sd / np.sqrt(n_eff) + np.diff(edges)[0])


def test_metropolis_seed_determinism():
    cfg = MCMCConfig(n_mc=500, n_chains=2, proposal_sigma=(600.0,), seed=5)
    pr = Prior((Flat(0.0, 20_000.0),))
    a = metropolis_run(None, pr, cfg, likelihood=gaussian_toy(5000, 300))
    b = metropolis_run(None, pr, cfg, likelihood=gaussian_toy(5000, 300))
    for x, y in zip(a.chains, b.chains):
        np.testing.assert_array_equal(x, y)


def test_zero_data_mcmc_returns_prior():
    cfg = MCMCConfig(n_mc=20_000, n_chains=2, proposal_sigma=(khz(0.5), khz(0.1)), seed=2)
    pr = Prior((Flat(0.0, khz(4)), Gaussian(0.0, khz(0.25))))
    s = metropolis_run(Dataset([], [], 4), pr, cfg, model="refined")
    m0, s0 = posterior_moments(s, 0)
    m1, s1 = posterior_moments(s, 1)
    assert m0 == pytest.approx(khz(2), abs=khz(0.3))
    assert s0 == pytest.approx(khz(4) / np.sqrt(12), rel=0.1)
    assert m1 == pytest.approx(0.0, abs=khz(0.06))
    assert s1 == pytest.approx(khz(0.25), rel=0.1)


def test_stuck_chain_raises():
    cfg = MCMCConfig(n_mc=300, n_chains=1, proposal_sigma=(1e6,), seed=0)
    with pytest.raises(MCMCError):
        metropolis_run(None, Prior((Flat(0.0, 1e4),)), cfg, likelihood=gaussian_toy(5000, 1.0))


def test_accepted_only_mode():
    cfg = MCMCConfig(n_mc=400, n_chains=2, proposal_sigma=(600.0,), seed=1)
    s = metropolis_run(None, Prior((Flat(0.0, 2e4),)), cfg, likelihood=gaussian_toy(5000, 300))
    acc = s.pooled(mode="accepted")
    assert acc.size == sum(a.sum() for a in s.accepted) < s.pooled().size
    with pytest.raises(ValueError):
        s.pooled(mode="thinned")
    assert np.all((s.acceptance > 0) & (s.acceptance <= 1))
    assert set(summarize(s).theta_est) == {"omega_tg_rabi"}


def test_discrete_three_state_short():
    target = np.array([0.2, 0.5, 0.3])
    rng = np.random.default_rng(0)
    res = metropolis_chain(lambda i: np.log(target[i]), 0, lambda i, r: int(r.integers(3)), 60_000, rng)
    freq = np.bincount(res.path, minlength=3) / res.path.size
    np.testing.assert_allclose(freq, target, atol=0.02)


# -- diagnostics ------------------------------------------------------------


def test_r_hat_identical_chains():
    y = np.random.default_rng(0).normal(size=500)
    chains = [np.concatenate([y, y])] * 4
    assert r_hat(chains) <= 1 + 1e-6
    assert r_hat([y] * 3, split=False) <= 1 + 1e-6


def test_r_hat_same_gaussian():
    rng = np.random.default_rng(1)
    assert r_hat([rng.normal(size=10_000) for _ in range(5)]) < 1.05


def test_r_hat_separated_chains():
    rng = np.random.default_rng(2)
    assert r_hat([rng.normal(m, 1, 1000) for m in (0, 10, 20)]) > 1.2


def test_r_hat_degenerate():
    assert r_hat([np.ones(10), np.ones(10)]) == np.inf
    with pytest.raises(ValueError):
        r_hat([np.ones(10)])
    with pytest.raises(ValueError):
        r_hat([np.arange(10.0), np.arange(12.0)])


def test_histogram_single_sample():
    s = ChainSamples([np.array([[3.0]])], [np.zeros(1)], [np.array([True])], ("omega_tg_rabi",))
    dens, _ = marginal_histogram(s, bins=10)
    assert np.count_nonzero(dens) == 1


def test_find_modes():
    x = np.linspace(-5, 5, 401)
    two = np.exp(-((x - 2) ** 2) / 0.3) + 0.8 * np.exp(-((x + 2) ** 2) / 0.3)
    assert len(find_modes(two)) == 2
    shoulder = np.exp(-(x**2)) + 0.9 * np.exp(-((x - 0.8) ** 2))
    assert len(find_modes(shoulder)) == 1
    assert find_modes(np.zeros(5)) == []


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(0.3, 2.0))
def test_find_modes_single_gaussian(c, w):
    x = np.linspace(-5, 5, 301)
    assert len(find_modes(np.exp(-((x - c) ** 2) / w))) == 1
