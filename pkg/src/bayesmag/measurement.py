"""Simulated acquisition: schedules, Bernoulli outcomes and datasets."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import dynamics
from .dynamics import STEPS_PER_PERIOD
from .noise import NoiseConfig, make_trace
from .physics import SensorConfig, SignalConfig, TWO_PI

Model = Literal["ideal", "refined"]


@dataclass(frozen=True)
class MeasurementPlan:
    """Interrogation times (s) and repetitions per time."""

    times: tuple
    n_m: int
    schedule_kind: str = "evenly-spaced"

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", tuple(float(v) for v in t))
        if t.ndim != 1 or t.size == 0:
            raise ValueError("plan needs at least one time")
        if t[0] < 0 or np.any(np.diff(t) <= 0):
            raise ValueError("plan times must be strictly increasing from t >= 0")
        if self.n_m < 1:
            raise ValueError("n_m must be >= 1")

    @classmethod
    def evenly_spaced(cls, t_final: float, n_p: int, n_m: int) -> "MeasurementPlan":
        """t_k = t_final (k-1)/(n_p-1), k = 1..n_p."""
        return cls(tuple(np.linspace(0.0, t_final, n_p)), n_m)

    @classmethod
    def random_in_window(cls, t_final: float, n_p: int, n_m: int, rng) -> "MeasurementPlan":
        """Uniform random times in [0, t_final], sorted."""
        return cls(tuple(np.sort(rng.uniform(0.0, t_final, n_p))), n_m, "random-in-window")


def case_i_plan(n_m: int, n_p: int = 18) -> MeasurementPlan:
    return MeasurementPlan.evenly_spaced(2.83e-3, n_p, n_m)


def case_ii_plan(n_m: int, n_p: int = 20) -> MeasurementPlan:
    return MeasurementPlan.evenly_spaced(0.236e-3, n_p, n_m)


@dataclass
class Dataset:
    """Success counts ``x`` out of ``n_m`` shots at each time in ``times`` (s)."""

    times: np.ndarray
    x: np.ndarray
    n_m: int
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.x = np.asarray(self.x, dtype=np.int64)
        self.n_m = int(self.n_m)
        if self.times.shape != self.x.shape or self.times.ndim != 1:
            raise ValueError("times and x must be 1-D arrays of equal length")
        if np.any(self.x < 0) or np.any(self.x > self.n_m):
            raise ValueError("counts must satisfy 0 <= x_k <= n_m")
        if self.times.size and (self.times[0] < 0 or np.any(np.diff(self.times) <= 0)):
            raise ValueError("times must be strictly increasing from t >= 0")

    def __len__(self):
        return self.times.size

    @property
    def records(self):
        return [(float(t), int(x), self.n_m) for t, x in zip(self.times, self.x)]

    @property
    def p_s(self) -> np.ndarray:
        return self.x / self.n_m

    @property
    def sigma(self) -> np.ndarray:
        return shot_uncertainty(self.x, self.n_m)

    def is_evenly_spaced(self, rtol: float = 1e-9) -> bool:
        d = np.diff(self.times)
        return d.size > 0 and np.allclose(d, d[0], rtol=rtol, atol=0)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.n_m == other.n_m
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.x, other.x)
            and self.provenance == other.provenance
        )


def shot_uncertainty(x, n_m):
    """max(1/N_m, std of the 0/1 outcome list / sqrt(N_m)).

    The outcome-list standard deviation is the population one,
    sqrt(p (1-p)) with p = x/N_m.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > n_m):
        raise ValueError("need 0 <= x <= n_m")
    p = x / n_m
    return np.maximum(1.0 / n_m, np.sqrt(p * (1 - p)) / np.sqrt(n_m))


def _config_snapshot(sensor, signal, noise, plan, model, seed, noise_mode):
    snap = {
        "model": model,
        "seed": seed,
        "b_z_t": sensor.b_z,
        "omega_mw_hz": sensor.omega_mw / TWO_PI,
        "omega_tg_hz": signal.omega_tg_rabi / TWO_PI,
        "xi_hz": signal.xi / TWO_PI,
        "phi_tg": signal.phi_tg,
        "schedule_kind": plan.schedule_kind,
    }
    if noise is not None:
        mu = noise.mu_params
        snap["noise"] = {
            "t2_s": noise.t2,
            "tau_mu_s": mu.tau,
            "sigma_mu_rad_s": mu.sigma,
            "tau_eps_s": noise.eps_params.tau,
            "sigma_eps": noise.eps_params.sigma,
            "mode": noise_mode,
        }
    return snap


def expected_populations(
    plan_times, sensor, signal, model: Model, noise=None, steps_per_period=STEPS_PER_PERIOD
):
    """P_D at each time for one (possibly noisy) realisation."""
    if model == "ideal":
        return dynamics.p_d_analytic(plan_times, signal.omega_tg_rabi)
    return dynamics.propagate_refined(
        sensor, signal, plan_times, noise=noise, steps_per_period=steps_per_period
    ).p_d


def generate_dataset(
    plan: MeasurementPlan,
    sensor: SensorConfig,
    signal: SignalConfig,
    noise: NoiseConfig | None = None,
    model: Model = "refined",
    seed: int = 0,
    noise_mode: Literal["per-shot", "per-dataset"] = "per-shot",
    steps_per_period: int = STEPS_PER_PERIOD,
) -> Dataset:
    """Draw X_k ~ Binomial(N_m, P_k) with P_k from the chosen model.

    With noise, ``per-shot`` gives every repetition its own OU realisation
    (one propagation recording all t_k per repetition); ``per-dataset``
    shares one realisation across all shots.
    """
    if model not in ("ideal", "refined"):
        raise ValueError(f"unknown model {model!r}")
    if model == "ideal" and noise is not None:
        raise ValueError("the ideal model is noiseless")
    if model == "ideal" and signal.xi != 0:
        raise ValueError("the ideal model assumes a resonant signal (xi = 0)")
    times = np.asarray(plan.times)
    rng = np.random.default_rng(seed)

    if noise is None:
        p = np.clip(expected_populations(times, sensor, signal, model), 0.0, 1.0)
        x = rng.binomial(plan.n_m, p)
    else:
        steps, widths = dynamics.step_grid(
            times, dynamics.refined_step(sensor, signal, steps_per_period)
        )
        grid = dynamics.step_times(steps, widths)

        def realisation():
            trace = make_trace(noise, grid, rng)
            return np.clip(
                expected_populations(times, sensor, signal, model, trace, steps_per_period), 0, 1
            )

        if noise_mode == "per-shot":
            x = np.zeros(times.size, dtype=np.int64)
            for _ in range(plan.n_m):
                p = realisation()
                x += rng.random(times.size) < p
        elif noise_mode == "per-dataset":
            x = rng.binomial(plan.n_m, realisation())
        else:
            raise ValueError(f"unknown noise mode {noise_mode!r}")

    prov = _config_snapshot(sensor, signal, noise, plan, model, seed, noise_mode)
    return Dataset(times, x, plan.n_m, prov)


def noisy_mean_populations(
    times,
    sensor,
    signal,
    noise: NoiseConfig,
    n_real: int,
    seed: int = 0,
    steps_per_period=STEPS_PER_PERIOD,
) -> np.ndarray:
    """P_D(t_k) averaged over ``n_real`` independent noise realisations."""
    rng = np.random.default_rng(seed)
    steps, widths = dynamics.step_grid(times, dynamics.refined_step(sensor, signal, steps_per_period))
    grid = dynamics.step_times(steps, widths)
    acc = np.zeros(len(times))
    for _ in range(n_real):
        acc += expected_populations(
            times, sensor, signal, "refined", make_trace(noise, grid, rng), steps_per_period
        )
    return acc / n_real
