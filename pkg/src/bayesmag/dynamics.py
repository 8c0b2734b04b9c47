"""Rotating-frame Hamiltonians of the dressed-state sensor and their propagation.

States are 4-vectors in the dressed basis ``(|u>, |d>, |D>, |0'>)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _kernel
from .physics import SensorConfig, SignalConfig

log = logging.getLogger(__name__)

U, DN, DARK, ZP = 0, 1, 2, 3
BASIS_LABELS = ("u", "d", "D", "0'")
SQRT2 = np.sqrt(2.0)

#: RK4 points per period of the fastest phase; keeps per-interval norm drift below 1e-9
STEPS_PER_PERIOD = 64

#: upper bound on RK4 steps for one propagation
MAX_STEPS = 2_000_000_000


class PropagationError(RuntimeError):
    """Integration cannot reach the requested accuracy."""


def dark_state() -> np.ndarray:
    psi = np.zeros(4, dtype=complex)
    psi[DARK] = 1.0
    return psi


def _ket_bra(i: int, j: int) -> np.ndarray:
    m = np.zeros((4, 4), dtype=complex)
    m[i, j] = 1.0
    return m


@dataclass(frozen=True)
class HamiltonianSample:
    matrix: np.ndarray
    time: float = 0.0

    def is_hermitian(self, rtol: float = 1e-12) -> bool:
        scale = max(np.linalg.norm(self.matrix), 1e-300)
        return np.linalg.norm(self.matrix - self.matrix.conj().T) <= rtol * scale


@dataclass
class PropagationResult:
    times: np.ndarray
    p_d: np.ndarray
    final_state: np.ndarray
    norms: np.ndarray | None = None


def p_d_analytic(t, omega_tg_rabi: float):
    """Population of |D> for resonant Rabi flopping, cos^2(pi t / t_R).

    With t_R = 2 pi sqrt(2) / Omega_tg this is cos^2(Omega_tg t / sqrt(8)).
    Works elementwise on arrays.
    """
    t = np.asarray(t, dtype=float)
    return np.cos(omega_tg_rabi * t / np.sqrt(8.0)) ** 2


def rabi_period(omega_tg_rabi: float) -> float:
    return 2.0 * np.pi * SQRT2 / omega_tg_rabi


def hamiltonian_ideal(omega_tg_rabi: float) -> HamiltonianSample:
    """-Omega_tg / (2 sqrt 2) (|D><0'| + |0'><D|)."""
    if omega_tg_rabi < 0:
        raise ValueError("omega_tg_rabi must be >= 0")
    c = -omega_tg_rabi / (2.0 * SQRT2)
    return HamiltonianSample(c * (_ket_bra(DARK, ZP) + _ket_bra(ZP, DARK)))


@dataclass(frozen=True)
class RefinedFrequencies:
    """Phase rates of the refined model, precomputed once per sensor."""

    w_mw: float  # gamma_e B_z
    w2: float  # 2 (omega_1 - omega_0')
    w_q: float  # gamma_e^2 B_z^2 / (2A)

    @classmethod
    def of(cls, sensor: SensorConfig) -> "RefinedFrequencies":
        z = sensor.zeeman
        q = sensor.quadratic_shift
        return cls(z, z - q, q)


def hamiltonian_refined(
    t: float,
    sensor: SensorConfig,
    signal: SignalConfig,
    mu_t: float = 0.0,
    eps_t: float = 0.0,
) -> HamiltonianSample:
    """Refined rotating-frame Hamiltonian at time ``t``.

    ``mu_t`` is the magnetic-field fluctuation (rad/s); ``eps_t`` the
    relative MW amplitude fluctuation, applied as Omega -> Omega (1 + eps).
    The gamma_n contribution is dropped from every coefficient.
    """
    fr = RefinedFrequencies.of(sensor)
    om = sensor.omega_mw * (1.0 + eps_t)
    otg = signal.omega_tg_rabi
    xi = signal.xi
    phi = signal.phi_tg
    P = _ket_bra

    h = -mu_t / SQRT2 * (P(DARK, U) + P(DARK, DN) + P(U, DARK) + P(DN, DARK))
    h = h + om / SQRT2 * (P(U, U) - P(DN, DN))
    mw = (
        om / (2 * SQRT2) * (P(U, U) - P(DN, DN))
        + om / 4 * (P(U, DARK) + P(DARK, DN))
        - om / 4 * (P(DARK, U) + P(DN, DARK))
    ) * np.exp(1j * fr.w_mw * t)
    h = h - (mw + mw.conj().T)

    ket1 = otg / 4 * (P(U, ZP) + P(DN, ZP)) - otg / (2 * SQRT2) * P(DARK, ZP)
    bra1 = otg / 4 * (P(ZP, U) + P(ZP, DN)) + otg / (2 * SQRT2) * P(ZP, DARK)
    terms = (
        ket1 * np.exp(-1j * (xi * t + phi)),
        ket1 * np.exp(1j * ((fr.w2 + xi) * t + phi)),
        bra1 * np.exp(1j * ((fr.w_mw + xi) * t + phi)),
        bra1 * np.exp(1j * ((fr.w_q - xi) * t - phi)),
    )
    for term in terms:
        h = h + term + term.conj().T
    return HamiltonianSample(h, t)


def _rk4_steps(span: float, max_step: float) -> int:
    if span <= 0:
        return 0
    n = int(np.ceil(span / max_step - 1e-9))
    if n > MAX_STEPS:
        raise PropagationError(
            f"{n} RK4 steps needed over {span:.3g} s with step {max_step:.3g} s; "
            "requested accuracy unreachable"
        )
    return max(n, 1)


def _check_times(sample_times) -> np.ndarray:
    times = np.asarray(sample_times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("sample_times must be a non-empty 1-D sequence")
    if times[0] < 0 or np.any(np.diff(times) < 0):
        raise ValueError("sample_times must be ascending and start at t >= 0")
    return times


def propagate(
    h_source: Callable[[float], HamiltonianSample | np.ndarray],
    psi0: np.ndarray,
    sample_times: Sequence[float],
    max_step: float | None = None,
) -> PropagationResult:
    """Fixed-step RK4 solution of i dpsi/dt = H(t) psi for any H(t).

    Pure numpy and therefore slow; :func:`propagate_refined` is the fast
    path for the refined model.  Without ``max_step`` the step resolves the
    norm of H(0) with 50 points per period.
    """
    times = _check_times(sample_times)

    def H(t):
        s = h_source(t)
        return s.matrix if isinstance(s, HamiltonianSample) else np.asarray(s)

    if max_step is None:
        scale = max(np.linalg.norm(H(0.0), 2), 1e-300)
        max_step = 2 * np.pi / (50 * scale)
    psi = np.array(psi0, dtype=complex)
    t = 0.0
    pops = np.empty(times.size)
    norms = np.empty(times.size)
    for k, tk in enumerate(times):
        n = _rk4_steps(tk - t, max_step)
        if n:
            h = (tk - t) / n
            for i in range(n):
                ti = t + i * h
                ha, hm, hb = H(ti), H(ti + h / 2), H(ti + h)
                k1 = -1j * ha @ psi
                k2 = -1j * hm @ (psi + h / 2 * k1)
                k3 = -1j * hm @ (psi + h / 2 * k2)
                k4 = -1j * hb @ (psi + h * k3)
                psi = psi + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = tk
        nrm = np.linalg.norm(psi)
        norms[k] = nrm
        if abs(nrm - 1) > 1e-9:
            log.debug("norm drift %.3g at t=%.6g s, renormalising", nrm - 1, tk)
            psi = psi / nrm
        pops[k] = abs(psi[DARK]) ** 2
    return PropagationResult(times, pops, psi, norms)


def refined_step(
    sensor: SensorConfig, signal: SignalConfig, steps_per_period: int = STEPS_PER_PERIOD
) -> float:
    """Largest RK4 step: ``steps_per_period`` points per fastest phase."""
    fr = RefinedFrequencies.of(sensor)
    fastest = max(
        fr.w_mw + abs(signal.xi),
        abs(fr.w2) + abs(signal.xi),
        2 * sensor.omega_mw,
        signal.omega_tg_rabi,
    )
    return 2 * np.pi / (steps_per_period * fastest)


def step_grid(sample_times, max_step: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-interval RK4 step counts and widths landing exactly on each sample time."""
    times = _check_times(sample_times)
    spans = np.diff(np.concatenate(([0.0], times)))
    steps = np.array([_rk4_steps(s, max_step) for s in spans], dtype=np.int64)
    widths = np.where(steps > 0, spans / np.maximum(steps, 1), 0.0)
    return steps, widths


def step_times(steps: np.ndarray, widths: np.ndarray) -> np.ndarray:
    """Start time of every RK4 step for a grid from :func:`step_grid`."""
    out = np.empty(int(steps.sum()))
    t = 0.0
    i = 0
    for n, h in zip(steps, widths):
        out[i : i + n] = t + h * np.arange(n)
        t += n * h
        i += n
    return out


def propagate_refined(
    sensor: SensorConfig,
    signal: SignalConfig,
    sample_times: Sequence[float],
    psi0: np.ndarray | None = None,
    noise=None,
    steps_per_period: int = STEPS_PER_PERIOD,
) -> PropagationResult:
    """P_D(t_k) under the refined Hamiltonian (compiled RK4).

    ``noise`` is an object with per-step ``mu`` and ``eps`` arrays matching
    :func:`step_grid` for the same ``steps_per_period`` (see
    :func:`bayesmag.noise.make_trace`).
    """
    times = _check_times(sample_times)
    steps, widths = step_grid(times, refined_step(sensor, signal, steps_per_period))
    if noise is None:
        mu = eps = np.empty(0)
    else:
        mu = np.ascontiguousarray(noise.mu, dtype=float)
        eps = np.ascontiguousarray(noise.eps, dtype=float)
        if mu.size != steps.sum() or eps.size != steps.sum():
            raise ValueError(f"noise trace has {mu.size} samples, grid has {steps.sum()} steps")
    psi = dark_state() if psi0 is None else np.asarray(psi0, dtype=complex)
    fr = RefinedFrequencies.of(sensor)
    pops, final, norms = _kernel.propagate_refined(
        psi, steps, widths, float(sensor.omega_mw), float(signal.omega_tg_rabi),
        float(signal.xi), float(signal.phi_tg), fr.w_mw, fr.w2, fr.w_q, mu, eps,
    )
    drift = np.abs(norms - 1.0).max()
    if drift > 1e-9:
        # RK4 truncation leaves ~1e-9 per interval at the default step
        level = logging.WARNING if drift > 1e-6 else logging.DEBUG
        log.log(level, "norm drift up to %.3g renormalised", drift)
    return PropagationResult(times, pops, final, norms)
