"""End-to-end reproduction recipes with a pass/fail table.

Each recipe returns a :class:`Report` of :class:`Row` entries comparing an
estimate against a reference value with an absolute tolerance, and
optionally writes plot-ready CSV files.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .baselines import fft_estimate, lsq_fit_cos2, residual_sum
from .inference import (
    Flat,
    Gaussian,
    Likelihood,
    MCMCConfig,
    ParameterPoint,
    Prior,
    case_i_prior,
    case_ii_prior,
    find_modes,
    grid_posterior,
    metropolis_run,
    posterior_moments,
)
from .measurement import MeasurementPlan, generate_dataset
from .physics import SensorConfig, SignalConfig, TWO_PI, hz, khz, nyquist_max_rabi

CASES = ("case-i", "case-ii", "fig-s5", "fig-s7", "fig-s8")


@dataclass
class Row:
    name: str
    estimate: float
    target: float
    tolerance: float
    unit: str = "kHz"
    passed: bool | None = None
    detail: str = ""

    def __post_init__(self):
        if self.passed is None:
            self.passed = bool(abs(self.estimate - self.target) <= self.tolerance)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (
            f"{flag}  {self.name:<42} {self.estimate:>10.4f} vs {self.target:>9.4f} "
            f"+- {self.tolerance:<8.4g} {self.unit:<4} {self.detail}"
        ).rstrip()


@dataclass
class Report:
    case: str
    rows: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def table(self) -> str:
        head = f"== {self.case} ({self.seconds:.1f} s)"
        return "\n".join([head] + [r.line() for r in self.rows])


def _k(w):
    return w / (TWO_PI * 1e3)


def _h(w):
    return w / TWO_PI


def _fixture_sensor(data) -> SensorConfig:
    return SensorConfig(b_z=data.provenance.get("b_z_t", 1e-3))


def case_i_grid(n_points: int = 2000, hi: float = khz(4.2)) -> np.ndarray:
    return np.linspace(0.0, hi, n_points)


def reproduce_case_i(out: Path | None = None) -> Report:
    """Grid posterior on the three outcome strings, plus FFT and LSQ on N_m = 4."""
    t0 = time.perf_counter()
    rep = Report("case-i")
    grid = case_i_grid()
    refs = {1: (1.011, 0.042), 4: (0.988, 0.014), 20: (1.0048, 0.0076)}
    for n_m, (mean_ref, std_ref) in refs.items():
        data = io.load_fixture(f"case_i_nm{n_m}")
        post = grid_posterior(data, case_i_prior(), grid)
        m, s = posterior_moments(post)
        rep.rows.append(Row(f"grid N_m={n_m} Omega_est", _k(m), mean_ref, 0.010))
        rep.rows.append(Row(f"grid N_m={n_m} dOmega_est", _k(s), std_ref, 0.2 * std_ref))
        if out:
            io.write_csv(
                out / f"case_i_posterior_nm{n_m}.csv",
                ("omega_tg_hz", "density_per_hz"),
                zip(_h(grid), post.density * TWO_PI),
            )

    data = io.load_fixture("case_i_nm4")
    w_est, w_unc, spec = fft_estimate(data)
    k = 1 + int(np.argmax(spec.magnitudes[1:]))
    rep.rows.append(
        Row("fft N_m=4 omega_max", _k(spec.frequencies[k]), 0.6678, _k(spec.resolution) / 2,
            detail=f"bin {k}")
    )
    rep.rows.append(Row("fft N_m=4 Omega_est", _k(w_est), 0.94, 0.12, detail=f"unc {_k(w_unc):.3f}"))
    fit = lsq_fit_cos2(data, khz(1.0))
    rep.rows.append(
        Row("lsq N_m=4 Omega_est", _k(fit.params[0]), 0.947, 0.05 * 0.947,
            detail=f"ci68 {_k(fit.ci68[0]):.4f}")
    )
    if out:
        io.write_csv(
            out / "case_i_fft.csv",
            ("omega_hz", "magnitude"),
            zip(_h(spec.frequencies), spec.magnitudes),
        )
    rep.seconds = time.perf_counter() - t0
    return rep


CASE_II_REFS = {
    4: ((12.91, 0.44), (-0.112, 0.090)),
    20: ((11.90, 0.17), (0.169, 0.039)),
    40: ((12.05, 0.12), (0.111, 0.027)),
}


def reproduce_case_ii(
    out: Path | None = None,
    n_mc: int = 2000,
    seed: int = 0,
    sizes=(4, 20, 40),
    check_single_shot: bool = True,
) -> Report:
    """Metropolis on the Case II strings.

    Tolerances are three quoted standard deviations, doubled when
    ``n_mc`` is below the full 10^4 steps.
    """
    t0 = time.perf_counter()
    rep = Report("case-ii")
    scale = 3.0 if n_mc >= 10_000 else 6.0
    cfg = MCMCConfig(n_mc=n_mc, seed=seed)
    for n_m in sizes:
        data = io.load_fixture(f"case_ii_nm{n_m}")
        like = Likelihood(data, "refined", _fixture_sensor(data))
        samples = metropolis_run(data, case_ii_prior(), cfg, likelihood=like)
        (om_ref, om_sd), (xi_ref, xi_sd) = CASE_II_REFS[n_m]
        mo, so = posterior_moments(samples, 0)
        mx, sx = posterior_moments(samples, 1)
        rh = samples.r_hat
        detail = f"std {_k(so):.3f}/{_k(sx):.3f} R^ {rh[0]:.3f}/{rh[1]:.3f}"
        rep.rows.append(Row(f"mcmc N_m={n_m} Omega_est", _k(mo), om_ref, scale * om_sd, detail=detail))
        rep.rows.append(Row(f"mcmc N_m={n_m} xi_est", _k(mx), xi_ref, scale * xi_sd))
        if out:
            io.write_chains_csv(out / f"case_ii_chains_nm{n_m}.csv", samples)
    if check_single_shot:
        data = io.load_fixture("case_ii_nm1")
        like = Likelihood(data, "refined", _fixture_sensor(data))
        samples = metropolis_run(data, case_ii_prior(), cfg, likelihood=like)
        rh = float(np.max(samples.r_hat))
        rep.rows.append(
            Row("mcmc N_m=1 max R^ (> 1.2 expected)", rh, 1.2, 0.0, unit="", passed=rh > 1.2)
        )
        if out:
            io.write_chains_csv(out / "case_ii_chains_nm1.csv", samples)
    rep.seconds = time.perf_counter() - t0
    return rep


def aliasing_dataset(seed: int = 0):
    """N_p = 21 points over 0.5 s (Delta t = 25 ms), N_m = 10, Omega = 2 pi x 7 Hz."""
    plan = MeasurementPlan.evenly_spaced(0.5, 21, 10)
    return generate_dataset(plan, SensorConfig(), SignalConfig(hz(7.0)), model="ideal", seed=seed)


def reproduce_fig_s5(out: Path | None = None, seed: int = 0) -> Report:
    """Spurious peaks above the Nyquist bound and their removal by prior truncation."""
    t0 = time.perf_counter()
    rep = Report("fig-s5")
    data = aliasing_dataset(seed)
    w_max = nyquist_max_rabi(0.025)
    rep.rows.append(Row("Omega_max", _h(w_max), 20 / np.sqrt(0.5), 1e-9, unit="Hz"))

    wide = np.linspace(hz(0.1), hz(100.0), 10_000)
    post = grid_posterior(data, Prior((Flat(wide[0], wide[-1]),)), wide)
    ax, dens = post.marginal()
    modes = [i for i in find_modes(dens) if dens[i] > 0.1 * dens.max()]
    peaks = _h(ax[modes])
    for ref in (50.0, 63.0):
        near = peaks[np.argmin(np.abs(peaks - ref))] if peaks.size else np.nan
        rep.rows.append(Row(f"spurious peak near {ref:.0f} Hz", near, ref, 1.5, unit="Hz"))
    n_above = int(np.sum(peaks > _h(w_max)))
    rep.rows.append(
        Row("peaks above Omega_max (>= 2)", n_above, 2, 0, unit="", passed=n_above >= 2)
    )

    cut = wide[wide <= w_max]
    post_t = grid_posterior(data, Prior((Flat(cut[0], cut[-1]),)), cut)
    m, s = posterior_moments(post_t)
    rep.rows.append(Row("truncated Omega_est", _h(m), 7.147, 0.2, unit="Hz", detail=f"std {_h(s):.3f}"))
    if out:
        io.write_csv(out / "fig_s5_posterior.csv", ("omega_tg_hz", "density_per_hz"),
                     zip(_h(wide), post.density * TWO_PI))
    rep.seconds = time.perf_counter() - t0
    return rep


def reproduce_fig_s7(out: Path | None = None) -> Report:
    """Residual-sum scan versus posterior on two single-shot strings."""
    t0 = time.perf_counter()
    rep = Report("fig-s7")
    grid = np.linspace(khz(0.1), khz(3.0), 2901)
    prior = Prior((Flat(grid[0], grid[-1]),))
    scans = {}
    for tag in ("a", "b"):
        data = io.load_fixture(f"fig_s7{tag}")
        s = np.array([residual_sum(data, ParameterPoint(w)) for w in grid])
        post = grid_posterior(data, prior, grid)
        scans[tag] = (data, s, post)
        if out:
            io.write_csv(
                out / f"fig_s7{tag}_scan.csv",
                ("omega_tg_hz", "inv_residual_sum", "posterior_per_hz"),
                zip(_h(grid), 1.0 / s, post.density * TWO_PI),
            )
    _, s_a, post_a = scans["a"]
    rep.rows.append(Row("(a) argmin S", _k(grid[np.argmin(s_a)]), 0.76, 0.05))
    rep.rows.append(Row("(a) posterior peak", _k(post_a.argmax()[0]), 1.6, 0.1))
    data_b, s_b, post_b = scans["b"]
    fit = lsq_fit_cos2(data_b, grid[np.argmin(s_b)], weighted=False)
    m, sd = posterior_moments(post_b)
    rep.rows.append(Row("(b) lsq Omega_est", _k(fit.params[0]), 1.699, 0.057,
                        detail=f"ci68 {_k(fit.ci68[0]):.3f}"))
    rep.rows.append(Row("(b) Bayes Omega_est", _k(m), 1.695, 0.069, detail=f"std {_k(sd):.3f}"))
    rep.seconds = time.perf_counter() - t0
    return rep


FIG_S8_SEED = 1


def bimodal_dataset(seed: int = 0):
    """B = 1 mT, Omega = 2 pi x 2 kHz, xi = -2 pi x 1.5 kHz, N_m = 4, N_p = 20 over 0.25 ms."""
    plan = MeasurementPlan.evenly_spaced(0.25e-3, 20, 4)
    return generate_dataset(plan, SensorConfig(b_z=1e-3), SignalConfig(khz(2.0), khz(-1.5)), seed=seed)


def fig_s8_posterior(data, omega_axis=None, xi_axis=None, sigma_xi: float = khz(2.0)):
    omega_axis = np.linspace(khz(0.05), khz(6.0), 60) if omega_axis is None else omega_axis
    xi_axis = np.linspace(khz(-5.0), khz(5.0), 81) if xi_axis is None else xi_axis
    prior = Prior((Flat(0.0, khz(50.0)), Gaussian(0.0, sigma_xi)))
    like = Likelihood(data, "refined", SensorConfig(b_z=1e-3))
    return grid_posterior(data, prior, (omega_axis, xi_axis), likelihood=like)


def reproduce_fig_s8(out: Path | None = None, seed: int = FIG_S8_SEED) -> Report:
    """Two-mode xi marginal on a seeded replay of the off-resonant regime."""
    t0 = time.perf_counter()
    rep = Report("fig-s8")
    data = bimodal_dataset(seed)
    post = fig_s8_posterior(data)
    xi_ax, xi_d = post.marginal(1)
    modes = find_modes(xi_d)
    rep.rows.append(
        Row("xi marginal modes (>= 2)", len(modes), 2, 0, unit="", passed=len(modes) >= 2,
            detail="at " + ", ".join(f"{_k(xi_ax[i]):.2f}" for i in modes) + " kHz")
    )
    m, s = posterior_moments(post, 0)
    rep.rows.append(Row("Omega_est", _k(m), 1.97, 3 * 0.39, detail=f"std {_k(s):.3f}"))
    if out:
        om_ax, om_d = post.marginal(0)
        io.write_csv(out / "fig_s8_xi_marginal.csv", ("xi_hz", "density_per_hz"),
                     zip(_h(xi_ax), xi_d * TWO_PI))
        io.write_csv(out / "fig_s8_omega_marginal.csv", ("omega_tg_hz", "density_per_hz"),
                     zip(_h(om_ax), om_d * TWO_PI))
    rep.seconds = time.perf_counter() - t0
    return rep


def run(case: str, out: Path | None = None, seed: int | None = None, n_mc: int = 2000) -> Report:
    """Run one recipe; ``seed=None`` uses the recipe's own default seed."""
    if seed is None:
        seed = FIG_S8_SEED if case == "fig-s8" else 0
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
    if case == "case-i":
        return reproduce_case_i(out)
    if case == "case-ii":
        return reproduce_case_ii(out, n_mc=n_mc, seed=seed)
    if case == "fig-s5":
        return reproduce_fig_s5(out, seed)
    if case == "fig-s7":
        return reproduce_fig_s7(out)
    if case == "fig-s8":
        return reproduce_fig_s8(out, seed)
    raise ValueError(f"unknown case {case!r}; choose from {', '.join(CASES)}")
