"""Ornstein-Uhlenbeck noise for field (mu) and MW amplitude (eps) fluctuations."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit


@dataclass(frozen=True)
class OUParams:
    """Correlation time ``tau`` (s) and stationary standard deviation ``sigma``."""

    tau: float
    sigma: float

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be non-negative, got {self.sigma}")


@dataclass(frozen=True)
class NoiseConfig:
    """Noise model defaults: T2 = 5.3 ms, tau_mu = T2/100, 0.25 % MW noise with 1 ms memory.

    ``sigma_mu`` overrides the T2 calibration when given.
    """

    t2: float = 5.3e-3
    tau_mu: float | None = None
    eps_params: OUParams = field(default_factory=lambda: OUParams(1e-3, 2.5e-3))
    sigma_mu: float | None = None
    seed: int = 0

    @property
    def mu_params(self) -> OUParams:
        tau = self.t2 / 100 if self.tau_mu is None else self.tau_mu
        sigma = calibrate_sigma_mu(self.t2, tau) if self.sigma_mu is None else self.sigma_mu
        return OUParams(tau, sigma)

    def silent(self) -> "NoiseConfig":
        """Same config with both noise amplitudes set to zero."""
        return NoiseConfig(
            self.t2, self.tau_mu, OUParams(self.eps_params.tau, 0.0), 0.0, self.seed
        )


@dataclass
class NoiseTrace:
    """Noise values at the start of every integrator step."""

    times: np.ndarray
    mu: np.ndarray
    eps: np.ndarray


def ou_step(x: float, dt: float, p: OUParams, rng: np.random.Generator) -> float:
    """Exact OU update over ``dt``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    a = np.exp(-dt / p.tau)
    return x * a + p.sigma * np.sqrt(1.0 - a * a) * rng.standard_normal()


@njit(cache=True)
def _ou_recursion(x0, decay, kick, z):
    out = np.empty(z.shape[0])
    x = x0
    for i in range(z.shape[0]):
        out[i] = x
        x = x * decay[i] + kick[i] * z[i]
    return out


def ou_path(times, p: OUParams, rng: np.random.Generator, x0: float | None = None) -> np.ndarray:
    """OU values on an arbitrary ascending grid, started from the stationary law."""
    times = np.asarray(times, dtype=float)
    n = times.size
    if n == 0:
        return np.empty(0)
    if p.sigma == 0:
        return np.zeros(n) if x0 is None else x0 * np.exp(-(times - times[0]) / p.tau)
    if x0 is None:
        x0 = p.sigma * rng.standard_normal()
    dt = np.diff(times, append=times[-1])
    decay = np.exp(-dt / p.tau)
    kick = p.sigma * np.sqrt(1.0 - decay**2)
    return _ou_recursion(float(x0), decay, kick, rng.standard_normal(n))


def zeta_variance(t, p: OUParams, stationary: bool = False):
    """Variance of the integrated process zeta(t) = int_0^t mu(s) ds.

    By default mu starts at mu(0) = 0, the convention behind
    :func:`calibrate_sigma_mu`; ``stationary=True`` draws mu(0) from the
    stationary law instead.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    r = t / p.tau
    if stationary:
        return 2 * p.sigma**2 * p.tau**2 * (r - 1 + np.exp(-r))
    return p.sigma**2 * p.tau**2 * (2 * r - 3 + 4 * np.exp(-r) - np.exp(-2 * r))


def calibrate_sigma_mu(t2: float, tau_mu: float) -> float:
    """sigma_mu (rad/s) such that exp(-<zeta^2(T2)>/2) = 1/e.

    Solving <zeta^2(T2)> = 2 gives the inverse square root of
    tau (T2 - tau (3/2 - 2 e^{-T2/tau} + e^{-2 T2/tau} / 2)).
    """
    if not t2 > tau_mu > 0:
        raise ValueError("need t2 > tau_mu > 0")
    r = t2 / tau_mu
    bracket = tau_mu * (t2 - tau_mu * (1.5 - 2 * np.exp(-r) + 0.5 * np.exp(-2 * r)))
    if bracket <= 0:
        raise ValueError("non-positive calibration bracket")
    return 1.0 / np.sqrt(bracket)


def coherence_monte_carlo(
    t: float,
    p: OUParams,
    n_real: int,
    rng: np.random.Generator,
    points_per_tau: int = 50,
    stationary: bool = False,
) -> tuple[float, float]:
    """Mean and standard error of cos(zeta(t)) over ``n_real`` OU realisations.

    zeta is accumulated with the trapezoid rule on a grid of
    ``points_per_tau`` points per correlation time.  mu(0) is zero unless
    ``stationary`` is set.
    """
    n_steps = max(int(np.ceil(t / p.tau * points_per_tau)), 1)
    dt = t / n_steps
    a = np.exp(-dt / p.tau)
    b = p.sigma * np.sqrt(1 - a * a)
    mu = p.sigma * rng.standard_normal(n_real) if stationary else np.zeros(n_real)
    zeta = np.zeros(n_real)
    for _ in range(n_steps):
        nxt = mu * a + b * rng.standard_normal(n_real)
        zeta += 0.5 * dt * (mu + nxt)
        mu = nxt
    c = np.cos(zeta)
    return c.mean(), c.std(ddof=1) / np.sqrt(n_real)


def make_trace(cfg: NoiseConfig, grid, rng: np.random.Generator) -> NoiseTrace:
    """Independent mu and eps realisations on the integrator step grid."""
    grid = np.asarray(grid, dtype=float)
    mu = ou_path(grid, cfg.mu_params, rng)
    eps = ou_path(grid, cfg.eps_params, rng)
    return NoiseTrace(grid, mu, eps)
