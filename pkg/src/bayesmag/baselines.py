"""Conventional estimators for comparison: FFT peak picking and least squares."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares
from scipy.stats import t as student_t

from . import dynamics
from .dynamics import STEPS_PER_PERIOD
from .inference import ParameterPoint
from .measurement import Dataset
from .physics import SensorConfig, SignalConfig

SQRT8 = np.sqrt(8.0)


class FFTError(ValueError):
    pass


@dataclass
class Spectrum:
    """One-sided DFT magnitudes of the rescaled series 2 P^s - 1.

    ``magnitudes`` are divided by the largest non-DC bin; ``power`` keeps
    the raw |c_n|^2 of the full two-sided transform.
    """

    frequencies: np.ndarray  # rad/s
    magnitudes: np.ndarray
    resolution: float  # rad/s
    power: np.ndarray


def fft_estimate(data: Dataset) -> tuple[float, float, Spectrum]:
    """Omega_est = sqrt(2) omega_max from the strongest non-DC bin.

    The uncertainty is a quarter of the Omega-equivalent bin width,
    sqrt(2) delta_omega / 4.
    """
    if len(data) < 4:
        raise FFTError("need at least four samples")
    if not data.is_evenly_spaced():
        raise FFTError("FFT needs evenly spaced samples")
    y = 2.0 * data.p_s - 1.0
    n = y.size
    dt = data.times[1] - data.times[0]
    c = np.fft.fft(y)
    power = np.abs(c) ** 2
    half = np.abs(c[: n // 2 + 1])
    freqs = 2 * np.pi * np.fft.rfftfreq(n, dt)
    dw = freqs[1]
    if half[1:].max() <= 1e-12 * n:
        raise FFTError("no spectral peak away from zero frequency")
    k = 1 + int(np.argmax(half[1:]))
    spec = Spectrum(freqs, half / half[1:].max(), dw, power)
    return np.sqrt(2.0) * freqs[k], np.sqrt(2.0) * dw / 4.0, spec


@dataclass
class FitResult:
    """Least-squares estimate with 68 % intervals.

    ``residual_sum`` is the unweighted sum of squared residuals.
    """

    params: np.ndarray
    ci68: np.ndarray
    residual_sum: float
    converged: bool
    init: np.ndarray
    message: str = ""

    def __post_init__(self):
        if self.residual_sum < 0:
            raise ValueError("residual sum must be >= 0")


def cos2_model(t, omega):
    return np.cos(omega * np.asarray(t) / SQRT8) ** 2


def cos2_derivative(t, omega):
    """d/dOmega cos^2(Omega t / sqrt 8)."""
    t = np.asarray(t, dtype=float)
    return -np.sin(2 * omega * t / SQRT8) * t / SQRT8


def _weights(data: Dataset, weighted: bool):
    return 1.0 / data.sigma if weighted else np.ones(len(data))


def _finish(res, data, weighted, init, model_fn) -> FitResult:
    n, p = len(data), res.x.size
    dof = max(n - p, 1)
    s2 = 2 * res.cost / dof
    try:
        cov = s2 * np.linalg.inv(res.jac.T @ res.jac)
        ci = student_t.ppf(0.84, dof) * np.sqrt(np.clip(np.diag(cov), 0, None))
    except np.linalg.LinAlgError:
        ci = np.full(p, np.inf)
    s = float(np.sum((data.p_s - model_fn(res.x)) ** 2))
    return FitResult(res.x.copy(), ci, s, bool(res.success), np.asarray(init, float), res.message)


def lsq_fit_cos2(data: Dataset, init: float, weighted: bool = True, max_nfev: int = 200) -> FitResult:
    """Fit cos^2(Omega t / sqrt 8) to P^s with a trust-region Gauss-Newton solver."""
    if not init > 0:
        raise ValueError("initial Omega must be positive")
    w = _weights(data, weighted)
    t = data.times

    def resid(v):
        return w * (data.p_s - cos2_model(t, v[0]))

    def jac(v):
        return (-w * cos2_derivative(t, v[0]))[:, None]

    res = least_squares(resid, [init], jac=jac, method="lm", max_nfev=max_nfev, xtol=1e-12, ftol=1e-12)
    return _finish(res, data, weighted, [init], lambda v: cos2_model(t, v[0]))


def refined_populations(
    data_times, theta, sensor: SensorConfig, steps_per_period: int = STEPS_PER_PERIOD
):
    signal = SignalConfig(abs(float(theta[0])), float(theta[1]))
    return dynamics.propagate_refined(sensor, signal, data_times, steps_per_period=steps_per_period).p_d


def lsq_fit_refined(
    data: Dataset,
    init: ParameterPoint,
    sensor: SensorConfig | None = None,
    weighted: bool = True,
    max_nfev: int = 100,
) -> FitResult:
    """Fit (Omega, xi) of the refined model with finite-difference Jacobians.

    The outcome depends strongly on ``init``; it is echoed in the result.
    """
    sensor = sensor or SensorConfig()
    w = _weights(data, weighted)
    x0 = np.array([init.omega_tg_rabi, init.xi])

    def model(v):
        return refined_populations(data.times, v, sensor)

    def resid(v):
        return w * (data.p_s - model(v))

    res = least_squares(resid, x0, method="lm", diff_step=1e-6, max_nfev=max_nfev, x_scale=[1e3, 1e2])
    res.x[0] = abs(res.x[0])
    return _finish(res, data, weighted, x0, model)


def residual_sum(data: Dataset, theta: ParameterPoint, model: str = "ideal", sensor=None) -> float:
    """S = sum_k (P^s_k - P~_k)^2, unweighted."""
    if model == "ideal":
        p = cos2_model(data.times, theta.omega_tg_rabi)
    elif model == "refined":
        p = refined_populations(data.times, (theta.omega_tg_rabi, theta.xi), sensor or SensorConfig())
    else:
        raise ValueError(f"unknown model {model!r}")
    return float(np.sum((data.p_s - p) ** 2))
