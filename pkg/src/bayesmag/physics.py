"""Hyperfine structure of the 171Yb+ ground-state manifold.

All frequencies are angular frequencies in rad/s and all fields are in
tesla.  The helpers :func:`khz`, :func:`hz`, :func:`mhz` and :func:`gauss`
convert the units the literature usually quotes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi


def hz(f: float) -> float:
    """Angular frequency for a frequency given in Hz."""
    return TWO_PI * f


def khz(f: float) -> float:
    return TWO_PI * 1e3 * f


def mhz(f: float) -> float:
    return TWO_PI * 1e6 * f


def to_khz(w: float) -> float:
    """Inverse of :func:`khz`."""
    return w / (TWO_PI * 1e3)


def gauss(b: float) -> float:
    """Field in tesla for a value given in gauss."""
    return 1e-4 * b


def millitesla(b: float) -> float:
    return 1e-3 * b


@dataclass(frozen=True)
class PhysicalConstants:
    """Hyperfine constant and gyromagnetic ratios.

    ``gamma_e`` and ``gamma_n`` are the per-gauss values 2.8024 MHz/G and
    4.7248 kHz/G converted to rad/(s T).
    """

    A: float = TWO_PI * 12.643e9
    gamma_e: float = TWO_PI * 2.8024e10
    gamma_n: float = TWO_PI * 4.7248e7

    def __post_init__(self):
        if self.A <= 0 or self.gamma_e <= 0 or self.gamma_n < 0:
            raise ValueError("constants must be positive")

    @property
    def second_order_zeeman(self) -> float:
        """Coefficient (gamma_e + gamma_n)^2 / (2A) in rad/s per T^2."""
        return (self.gamma_e + self.gamma_n) ** 2 / (2.0 * self.A)


@dataclass(frozen=True)
class SensorConfig:
    """Static field and microwave dressing.

    Both MW drives share the Rabi frequency ``omega_mw`` and are resonant
    with the |0> <-> |+-1> transitions by construction; their phases are
    fixed to pi and 0.
    """

    b_z: float = 1e-3
    omega_mw: float = khz(37.27)
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)

    phase_1 = np.pi
    phase_2 = 0.0

    def __post_init__(self):
        if self.b_z < 0:
            raise ValueError(f"b_z must be non-negative, got {self.b_z}")
        if self.omega_mw <= 0:
            raise ValueError(f"omega_mw must be positive, got {self.omega_mw}")

    @property
    def zeeman(self) -> float:
        """gamma_e * B_z, the fastest phase in the rotating-frame model."""
        return self.constants.gamma_e * self.b_z

    @property
    def quadratic_shift(self) -> float:
        """gamma_e^2 B_z^2 / (2A): splitting of the two |0'> transitions."""
        c = self.constants
        return c.gamma_e**2 * self.b_z**2 / (2.0 * c.A)


@dataclass(frozen=True)
class SignalConfig:
    """Target rf signal: Rabi frequency, detuning and phase."""

    omega_tg_rabi: float
    xi: float = 0.0
    phi_tg: float = 0.0

    def __post_init__(self):
        if self.omega_tg_rabi < 0:
            raise ValueError("omega_tg_rabi must be >= 0")

    def carrier(self, sensor: SensorConfig) -> float:
        """Carrier frequency omega_1 - omega_0' + xi."""
        return transition_frequencies(sensor)[0] + self.xi


@dataclass(frozen=True)
class EnergyLevels:
    omega_1: float
    omega_m1: float
    omega_0p: float
    omega_0: float


@dataclass(frozen=True)
class MixingCoefficients:
    alpha: float
    beta: float
    gamma: float
    delta: float
    a: float
    b: float

    def couplings(self, constants: PhysicalConstants, nuclear: bool = True):
        """Dipole coefficients c_{10'}, c_{10}, c_{0'-1}, c_{0-1}.

        With ``nuclear=False`` the gamma_n contributions are dropped.
        """
        ge = constants.gamma_e
        gn = constants.gamma_n if nuclear else 0.0
        al, be, ga, de = self.alpha, self.beta, self.gamma, self.delta
        norm = ga * be - al * de
        return (
            (ge * ga + gn * de) / norm,
            -(ge * al + gn * be) / norm,
            -(ge * de + gn * ga) / norm,
            (ge * be + gn * al) / norm,
        )


def energy_levels(cfg: SensorConfig, exact: bool = False) -> EnergyLevels:
    """Eigenfrequencies of |1>, |-1>, |0'> and |0>.

    By default |0'> and |0> use the quadratic expansion of the square
    root; ``exact=True`` keeps the closed form.
    """
    c = cfg.constants
    A, b = c.A, cfg.b_z
    lin = (c.gamma_e - c.gamma_n) * b / 2.0
    omega_1 = A / 4.0 + lin
    omega_m1 = A / 4.0 - lin
    if exact:
        root = np.sqrt(1.0 + ((c.gamma_e + c.gamma_n) * b / A) ** 2)
        omega_0p = -A / 4.0 + A / 2.0 * root
        omega_0 = -A / 4.0 - A / 2.0 * root
    else:
        shift = (c.gamma_e + c.gamma_n) ** 2 * b**2 / (4.0 * A)
        omega_0p = A / 4.0 + shift
        omega_0 = -3.0 * A / 4.0 - shift
    return EnergyLevels(omega_1, omega_m1, omega_0p, omega_0)


def transition_frequencies(cfg: SensorConfig) -> tuple[float, float, float, float]:
    """omega_1-omega_0', omega_1-omega_0, omega_0'-omega_-1, omega_-1-omega_0.

    Second-order expansion with the nuclear term neglected, i.e. the forms
    that enter the rotating-frame Hamiltonian.  They coincide with
    differences of :func:`energy_levels` when ``gamma_n == 0``.
    """
    c = cfg.constants
    half = c.gamma_e * cfg.b_z / 2.0
    quad = c.gamma_e**2 * cfg.b_z**2 / (4.0 * c.A)
    return (
        half - quad,
        c.A + half + quad,
        half + quad,
        c.A - half + quad,
    )


def mixing_coefficients(cfg: SensorConfig) -> MixingCoefficients:
    """Exact admixtures of |10> and |01> in |0'> and |0>."""
    c = cfg.constants
    lv = energy_levels(cfg, exact=True)
    a = -c.A / 4.0 + (c.gamma_e + c.gamma_n) * cfg.b_z / 2.0
    b = c.A / 2.0
    r0p = (lv.omega_0p - a) / b
    r0 = (lv.omega_0 - a) / b
    alpha = 1.0 / np.sqrt(1.0 + r0p**2)
    gamma = 1.0 / np.sqrt(1.0 + r0**2)
    return MixingCoefficients(alpha, r0p * alpha, gamma, r0 * gamma, a, b)


def nyquist_max_rabi(delta_t: float) -> float:
    """Largest Rabi frequency resolvable from samples spaced ``delta_t``.

    The population oscillates at Omega/sqrt(2), so the usual Nyquist limit
    pi/delta_t maps to 2 pi / (sqrt(2) delta_t).
    """
    if delta_t <= 0:
        raise ValueError("delta_t must be positive")
    return TWO_PI / (np.sqrt(2.0) * delta_t)
