"""Bayesian estimation of the target Rabi frequency and detuning.

Counts are binomial given the forward model.  Two posteriors are offered:
an exhaustive grid (one or two parameters) and random-walk Metropolis
with several independent chains and the split-R-hat diagnostic.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.signal import find_peaks
from scipy.special import gammaln, xlogy
from scipy.stats import norm

from . import dynamics
from .dynamics import STEPS_PER_PERIOD
from .measurement import Dataset
from .physics import SensorConfig, SignalConfig, TWO_PI

log = logging.getLogger(__name__)

EPS_P = 1e-9
PARAM_NAMES = ("omega_tg_rabi", "xi")
MEMO_QUANTUM = TWO_PI * 1e-3


class InferenceError(RuntimeError):
    pass


class MCMCError(InferenceError):
    """A chain failed to move; the proposal widths need retuning."""


def log_binomial_pmf(x, n, p):
    """log[n! / (x! (n-x)!) p^x (1-p)^(n-x)], elementwise.

    ``xlogy`` makes 0 log 0 = 0, so p = 0 with x = 0 (or p = 1 with x = n)
    gives log 1 while any other count at those edges gives -inf.
    """
    x = np.asarray(x, dtype=float)
    n = np.asarray(n, dtype=float)
    p = np.asarray(p, dtype=float)
    if np.any(x < 0) or np.any(x > n) or np.any(x != np.round(x)):
        raise ValueError("need integer counts 0 <= x <= n")
    if np.any(p < 0) or np.any(p > 1) or np.any(np.isnan(p)):
        raise ValueError("p must lie in [0, 1]")
    comb = gammaln(n + 1) - gammaln(x + 1) - gammaln(n - x + 1)
    return comb + xlogy(x, p) + xlogy(n - x, 1.0 - p)


@dataclass(frozen=True)
class ParameterPoint:
    omega_tg_rabi: float
    xi: float = 0.0

    def __post_init__(self):
        if not self.omega_tg_rabi >= 0:
            raise ValueError(f"omega_tg_rabi must be >= 0, got {self.omega_tg_rabi}")

    @classmethod
    def from_array(cls, v) -> "ParameterPoint":
        return cls(float(v[0]), float(v[1]) if len(v) > 1 else 0.0)


# -- priors ---------------------------------------------------------------


@dataclass(frozen=True)
class Flat:
    lo: float
    hi: float

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi) and self.lo < self.hi):
            raise ValueError(f"flat prior needs finite lo < hi, got [{self.lo}, {self.hi}]")

    def logpdf(self, v):
        v = np.asarray(v, dtype=float)
        inside = (v >= self.lo) & (v <= self.hi)
        return np.where(inside, -np.log(self.hi - self.lo), -np.inf)

    def sample(self, rng):
        return rng.uniform(self.lo, self.hi)

    @property
    def moments(self):
        return 0.5 * (self.lo + self.hi), (self.hi - self.lo) / np.sqrt(12.0)


@dataclass(frozen=True)
class Gaussian:
    mean: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("gaussian prior needs sigma > 0")

    def logpdf(self, v):
        return norm.logpdf(v, self.mean, self.sigma)

    def sample(self, rng):
        return rng.normal(self.mean, self.sigma)

    @property
    def moments(self):
        return self.mean, self.sigma


@dataclass(frozen=True)
class Prior:
    """Independent priors on (omega_tg_rabi[, xi]).

    With a single factor, xi is held at zero.
    """

    factors: tuple

    def __post_init__(self):
        if not 1 <= len(self.factors) <= 2:
            raise ValueError("prior covers one or two parameters")

    @property
    def ndim(self) -> int:
        return len(self.factors)

    def logpdf(self, theta) -> float:
        theta = np.atleast_1d(theta)
        return float(sum(f.logpdf(v) for f, v in zip(self.factors, theta)))

    def sample(self, rng) -> np.ndarray:
        return np.array([f.sample(rng) for f in self.factors])


def case_i_prior(hi: float = TWO_PI * 4.2e3) -> Prior:
    return Prior((Flat(0.0, hi),))


def case_ii_prior(omega_hi: float = TWO_PI * 50e3, sigma_xi: float = TWO_PI * 250.0) -> Prior:
    """Flat Omega prior and a zero-mean Gaussian on xi.

    ``sigma_xi`` defaults to 2 pi x 0.25 kHz; 2 pi x 0.1 kHz is the
    alternative value.
    """
    return Prior((Flat(0.0, omega_hi), Gaussian(0.0, sigma_xi)))


# -- likelihood -----------------------------------------------------------


class Likelihood:
    """Binomial log-likelihood of a dataset under the ideal or refined model.

    Refined-model populations come from one noiseless propagation through
    all t_k and are memoised on Theta rounded to 2 pi x 1 mHz.
    """

    def __init__(
        self,
        data: Dataset,
        model: str = "ideal",
        sensor: SensorConfig | None = None,
        steps_per_period: int = STEPS_PER_PERIOD,
        memo: bool = True,
    ):
        if model not in ("ideal", "refined"):
            raise ValueError(f"unknown model {model!r}")
        self.data = data
        self.model = model
        self.sensor = sensor or SensorConfig()
        self.steps_per_period = steps_per_period
        self._memo: dict | None = {} if memo else None
        self.evaluations = 0

    def populations(self, theta: ParameterPoint) -> np.ndarray:
        if self.model == "ideal":
            if theta.xi != 0:
                raise ValueError("the ideal model requires xi = 0")
            p = dynamics.p_d_analytic(self.data.times, theta.omega_tg_rabi)
        else:
            key = None
            if self._memo is not None:
                key = (round(theta.omega_tg_rabi / MEMO_QUANTUM), round(theta.xi / MEMO_QUANTUM))
                if key in self._memo:
                    return self._memo[key]
            signal = SignalConfig(theta.omega_tg_rabi, theta.xi)
            p = dynamics.propagate_refined(
                self.sensor, signal, self.data.times, steps_per_period=self.steps_per_period
            ).p_d
            self.evaluations += 1
            if key is not None:
                self._memo[key] = p
        return p

    def __call__(self, theta: ParameterPoint) -> float:
        if len(self.data) == 0:
            return 0.0
        p = np.clip(self.populations(theta), EPS_P, 1.0 - EPS_P)
        return float(log_binomial_pmf(self.data.x, self.data.n_m, p).sum())


def log_likelihood(data: Dataset, theta: ParameterPoint, model="ideal", sensor=None) -> float:
    return Likelihood(data, model, sensor, memo=False)(theta)


# -- grid posterior -------------------------------------------------------


def _trapz_weights(axis: np.ndarray) -> np.ndarray:
    if axis.size == 1:
        return np.ones(1)
    d = np.diff(axis)
    w = np.zeros_like(axis)
    w[:-1] += d / 2
    w[1:] += d / 2
    return w


@dataclass
class GridPosterior:
    """Posterior tabulated on a rectangular grid.

    ``axes`` holds one ascending array per parameter; ``log_post`` and
    ``density`` have shape ``tuple(len(a) for a in axes)``.  ``density``
    integrates to one under the trapezoid rule.
    """

    axes: tuple
    log_post: np.ndarray
    density: np.ndarray = field(init=False)

    def __post_init__(self):
        lp = np.asarray(self.log_post, dtype=float)
        if not np.any(np.isfinite(lp)):
            raise InferenceError("posterior has zero mass on the whole grid")
        w = np.exp(lp - lp.max())
        z = w
        for ax in reversed(self.axes):
            z = z @ _trapz_weights(ax)
        self.log_post = lp
        self.density = w / z

    def marginal(self, param: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """(axis values, normalised marginal density) of one parameter."""
        d = self.density
        for k in reversed(range(len(self.axes))):
            if k != param:
                d = np.tensordot(d, _trapz_weights(self.axes[k]), axes=([k], [0]))
        return self.axes[param], d

    def argmax(self) -> tuple:
        idx = np.unravel_index(np.argmax(self.log_post), self.log_post.shape)
        return tuple(ax[i] for ax, i in zip(self.axes, idx))


def grid_posterior(
    data: Dataset,
    prior: Prior,
    grid,
    model: str = "ideal",
    sensor: SensorConfig | None = None,
    likelihood: Callable | None = None,
) -> GridPosterior:
    """Posterior on ``grid``: a 1-D array of Omega values or an (Omega, xi) pair."""
    if isinstance(grid, (tuple, list)) and len(grid) == 2 and np.ndim(grid[0]) == 1:
        axes = (np.asarray(grid[0], float), np.asarray(grid[1], float))
    else:
        axes = (np.asarray(grid, float),)
    if len(axes) != prior.ndim:
        raise ValueError("grid and prior dimensionality differ")
    for ax, f in zip(axes, prior.factors):
        if np.any(np.diff(ax) <= 0):
            raise ValueError("grid axes must be strictly ascending")
        if not np.all(np.isfinite(f.logpdf(ax))):
            raise ValueError("grid extends outside the prior support")
    like = likelihood or Likelihood(data, model, sensor)
    lp = np.empty(tuple(a.size for a in axes))
    for idx in np.ndindex(lp.shape):
        theta = np.array([ax[i] for ax, i in zip(axes, idx)])
        lp[idx] = prior.logpdf(theta) + like(ParameterPoint.from_array(theta))
    return GridPosterior(axes, lp)


# -- Metropolis -----------------------------------------------------------


@dataclass(frozen=True)
class MCMCConfig:
    """Random-walk settings.

    ``n_mc`` random-walk steps per chain follow ``n_pre`` steps proposing
    from the prior; the first ``burn_in`` random-walk states are dropped.
    """

    n_mc: int = 10_000
    n_chains: int = 5
    burn_in: int = 200
    n_pre: int = 100
    proposal_sigma: tuple = (TWO_PI * 100.0, TWO_PI * 10.0)
    seed: int = 0
    min_acceptance: float = 0.01

    def __post_init__(self):
        if not self.n_mc > self.burn_in >= 0:
            raise ValueError("need n_mc > burn_in >= 0")
        if any(s <= 0 for s in self.proposal_sigma):
            raise ValueError("proposal sigmas must be positive")
        if self.n_chains < 1 or self.n_pre < 0:
            raise ValueError("need n_chains >= 1 and n_pre >= 0")


@dataclass
class ChainResult:
    path: np.ndarray  # (n_steps, d), state after each step
    log_target: np.ndarray
    accepted: np.ndarray

    @property
    def acceptance(self) -> float:
        return float(self.accepted.mean()) if self.accepted.size else 0.0


def metropolis_chain(
    log_target: Callable,
    x0,
    propose: Callable,
    n_steps: int,
    rng: np.random.Generator,
    lp0: float | None = None,
    log_q_ratio: Callable | None = None,
) -> ChainResult:
    """Generic Metropolis(-Hastings) chain.

    ``propose(x, rng)`` returns a candidate; ``log_q_ratio(x, y)`` is
    log q(x|y) - log q(y|x) and may be omitted for symmetric proposals.
    Rejected steps repeat the current state in ``path``.
    """
    x = x0
    lp = log_target(x) if lp0 is None else lp0
    path, lps, acc = [], np.empty(n_steps), np.zeros(n_steps, dtype=bool)
    for i in range(n_steps):
        y = propose(x, rng)
        ly = log_target(y)
        a = ly - lp
        if log_q_ratio is not None:
            a += log_q_ratio(x, y)
        if np.isfinite(ly) and np.log(rng.random()) < a:
            x, lp = y, ly
            acc[i] = True
        path.append(x)
        lps[i] = lp
    return ChainResult(np.array(path), lps, acc)


@dataclass
class ChainSamples:
    """Post-burn-in Metropolis output for several chains.

    ``chains[c]`` has one row per random-walk step (rejections repeat the
    state); ``accepted[c]`` flags the steps that moved.
    """

    chains: list
    log_post: list
    accepted: list
    names: tuple = PARAM_NAMES

    @property
    def ndim(self) -> int:
        return self.chains[0].shape[1]

    @property
    def acceptance(self) -> np.ndarray:
        return np.array([a.mean() for a in self.accepted])

    @property
    def r_hat(self) -> np.ndarray:
        if len(self.chains) < 2:
            return np.full(self.ndim, np.nan)
        return np.array([r_hat([c[:, j] for c in self.chains]) for j in range(self.ndim)])

    def pooled(self, param: int = 0, mode: str = "duplicate") -> np.ndarray:
        """Samples of one parameter from all chains.

        ``duplicate`` keeps the textbook Metropolis sequence; ``accepted``
        keeps only states reached by an accepted move.
        """
        if mode == "duplicate":
            return np.concatenate([c[:, param] for c in self.chains])
        if mode == "accepted":
            return np.concatenate([c[a, param] for c, a in zip(self.chains, self.accepted)])
        raise ValueError(f"unknown sample mode {mode!r}")

    def converged(self, threshold: float = 1.1) -> bool:
        return bool(np.all(self.r_hat < threshold))


def metropolis_run(
    data: Dataset | None,
    prior: Prior,
    cfg: MCMCConfig = MCMCConfig(),
    model: str = "refined",
    sensor: SensorConfig | None = None,
    likelihood: Callable | None = None,
) -> ChainSamples:
    """Independent Metropolis chains targeting prior x likelihood.

    Each chain starts from a prior draw and takes ``cfg.n_pre`` steps
    proposing from the prior (accepted on the likelihood ratio, the exact
    Hastings rule for that proposal), then ``cfg.n_mc`` Gaussian
    random-walk steps.  ``likelihood`` maps a :class:`ParameterPoint` to a
    log-likelihood and overrides ``data``/``model``.
    """
    like = likelihood or Likelihood(data, model, sensor)
    d = prior.ndim
    step = np.asarray(cfg.proposal_sigma[:d], dtype=float)
    if step.size != d:
        raise ValueError("need one proposal sigma per parameter")

    def loglike(x):
        if x[0] < 0:
            return -np.inf
        return like(ParameterPoint.from_array(x))

    def logpost(x):
        lpr = prior.logpdf(x)
        return lpr + loglike(x) if np.isfinite(lpr) else -np.inf

    def walk(x, rng):
        return x + step * rng.standard_normal(d)

    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(cfg.n_chains)]
    chains, lps, accs = [], [], []
    for c, rng in enumerate(rngs):
        x0 = prior.sample(rng)
        pre = metropolis_chain(loglike, x0, lambda x, r: prior.sample(r), cfg.n_pre, rng)
        x = pre.path[-1] if cfg.n_pre else x0
        res = metropolis_chain(logpost, x, walk, cfg.n_mc, rng)
        if res.acceptance < cfg.min_acceptance:
            raise MCMCError(
                f"chain {c} accepted {res.acceptance:.2%} of proposals; "
                "reduce the proposal widths"
            )
        chains.append(res.path[cfg.burn_in :])
        lps.append(res.log_target[cfg.burn_in :])
        accs.append(res.accepted[cfg.burn_in :])
        log.info("chain %d: acceptance %.3f", c, res.acceptance)
    return ChainSamples(chains, lps, accs, PARAM_NAMES[:d])


def r_hat(chains: Sequence[np.ndarray], split: bool = True) -> float:
    """Gelman-Rubin potential scale reduction (split halves by default).

    Returns inf when every chain is constant.
    """
    chains = [np.asarray(c, dtype=float) for c in chains]
    n = min(len(c) for c in chains)
    if len(chains) < 2 or n < 4:
        raise ValueError("need at least two chains of four or more samples")
    if any(len(c) != n for c in chains):
        raise ValueError("chains must have equal length")
    if split:
        h = n // 2
        chains = [part for c in chains for part in (c[:h], c[h : 2 * h])]
        n = h
    x = np.stack(chains)
    w = x.var(axis=1, ddof=1).mean()
    if w == 0:
        return np.inf
    b = n * x.mean(axis=1).var(ddof=1)
    var_plus = (n - 1) / n * w + b / n
    return float(np.sqrt(var_plus / w))


# -- summaries ------------------------------------------------------------


@dataclass
class EstimateSummary:
    theta_est: dict
    delta_theta: dict

    def __post_init__(self):
        if any(v < 0 for v in self.delta_theta.values()):
            raise ValueError("delta_theta must be >= 0")


def posterior_moments(post, param: int = 0, mode: str = "duplicate") -> tuple[float, float]:
    """Mean and standard deviation of one marginal.

    Quadrature for a :class:`GridPosterior`, sample moments for
    :class:`ChainSamples`.
    """
    if isinstance(post, GridPosterior):
        ax, dens = post.marginal(param)
        w = _trapz_weights(ax) * dens
        mean = float(w @ ax / w.sum())
        var = float(w @ (ax - mean) ** 2 / w.sum())
        return mean, float(np.sqrt(max(var, 0.0)))
    s = post.pooled(param, mode)
    if s.size == 0:
        raise ValueError("no samples")
    return float(s.mean()), float(s.std())


def summarize(post, mode: str = "duplicate") -> EstimateSummary:
    names = PARAM_NAMES[: len(post.axes)] if isinstance(post, GridPosterior) else post.names
    mom = [posterior_moments(post, j, mode) for j in range(len(names))]
    return EstimateSummary(
        {n: m for n, (m, _) in zip(names, mom)}, {n: s for n, (_, s) in zip(names, mom)}
    )


def marginal_histogram(samples: ChainSamples, param: int = 0, bins=50, mode: str = "duplicate"):
    """Normalised histogram (density, edges) of pooled samples."""
    return np.histogram(samples.pooled(param, mode), bins=bins, density=True)


def find_modes(density, min_dip: float = 0.5, min_height: float = 0.05) -> list[int]:
    """Indices of separated maxima of a 1-D density.

    A maximum is a mode when it reaches ``min_height`` of the global
    maximum and the density falls at least ``min_dip`` (as a fraction of
    the peak) before rising to any higher peak, i.e. its topographic
    prominence is at least ``min_dip`` times its height.
    """
    y = np.asarray(density, dtype=float)
    if y.size == 0 or not np.any(y > 0):
        return []
    # pad so maxima on the grid edge are found too
    padded = np.concatenate(([0.0], y, [0.0]))
    peaks, props = find_peaks(padded, height=min_height * y.max(), prominence=0.0)
    keep = props["prominences"] >= min_dip * props["peak_heights"]
    return [int(i) - 1 for i in peaks[keep]]
