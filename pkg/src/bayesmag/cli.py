"""Command-line driver.

    bayesmag --mode simulate --preset case-i --out runs/ci
    bayesmag --mode infer-mcmc --preset case-ii --seed 3 --out runs/mc
    bayesmag --mode reproduce --case case-i --out runs/repro

Exit status is 0 on success, 2 when a reproduction misses a tolerance and
1 on any other error.  Config files are JSON; unknown keys are rejected.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import subprocess
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__, io, reproduce
from .baselines import fft_estimate, lsq_fit_cos2, lsq_fit_refined
from .dynamics import propagate_refined
from .inference import (
    Flat,
    Gaussian,
    Likelihood,
    MCMCConfig,
    ParameterPoint,
    Prior,
    grid_posterior,
    metropolis_run,
    summarize,
)
from .measurement import MeasurementPlan, generate_dataset, noisy_mean_populations
from .noise import NoiseConfig, OUParams
from .physics import SensorConfig, SignalConfig, TWO_PI

log = logging.getLogger("bayesmag")

MODES = ("simulate", "infer-grid", "infer-mcmc", "baseline-fft", "baseline-lsq", "reproduce")

EXIT_OK, EXIT_ERROR, EXIT_TOLERANCE = 0, 1, 2


class ConfigError(ValueError):
    pass


# Every section is a flat dataclass; frequencies are in Hz.


@dataclass
class SensorSection:
    b_z_t: float = 1e-3
    omega_mw_hz: float = 37.27e3


@dataclass
class SignalSection:
    omega_tg_hz: float = 1e3
    xi_hz: float = 0.0
    phi_tg: float = 0.0


@dataclass
class NoiseSection:
    enabled: bool = False
    t2_s: float = 5.3e-3
    tau_mu_s: float | None = None
    tau_eps_s: float = 1e-3
    sigma_eps: float = 2.5e-3
    mode: str = "per-shot"
    trajectory_realisations: int = 20


@dataclass
class PlanSection:
    t_final_s: float = 2.83e-3
    n_p: int = 18
    n_m: int = 4


@dataclass
class PriorSection:
    omega_lo_hz: float = 0.0
    omega_hi_hz: float = 4.2e3
    sigma_xi_hz: float = 250.0


@dataclass
class GridSection:
    n_points: int = 2000


@dataclass
class MCMCSection:
    n_mc: int = 10_000
    n_chains: int = 5
    burn_in: int = 200
    n_pre: int = 100
    proposal_omega_hz: float = 100.0
    proposal_xi_hz: float = 10.0


@dataclass
class LSQSection:
    init_omega_hz: float = 1e3
    init_xi_hz: float = 0.0
    weighted: bool = True


@dataclass
class RunConfig:
    """Complete run description.

    ``data`` names a dataset JSON file or a packaged fixture; when empty
    the inference and baseline modes use the preset's fixture.  An unset
    ``seed`` means 0, except in reproduce mode where each recipe keeps
    its own default.
    """

    mode: str = "simulate"
    preset: str = "case-i"
    seed: int | None = None
    model: str = "refined"
    data: str = ""
    case: str = "case-i"
    trajectory: bool = False
    sensor: SensorSection = field(default_factory=SensorSection)
    signal: SignalSection = field(default_factory=SignalSection)
    noise: NoiseSection = field(default_factory=NoiseSection)
    plan: PlanSection = field(default_factory=PlanSection)
    prior: PriorSection = field(default_factory=PriorSection)
    grid: GridSection = field(default_factory=GridSection)
    mcmc: MCMCSection = field(default_factory=MCMCSection)
    lsq: LSQSection = field(default_factory=LSQSection)

    @property
    def base_seed(self) -> int:
        return 0 if self.seed is None else self.seed

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


PRESETS = {
    "case-i": {
        "sensor": {"b_z_t": 1e-3},
        "signal": {"omega_tg_hz": 1e3, "xi_hz": 0.0},
        "plan": {"t_final_s": 2.83e-3, "n_p": 18, "n_m": 4},
        "prior": {"omega_hi_hz": 4.2e3},
        "lsq": {"init_omega_hz": 1e3},
        "data": "case_i_nm4",
    },
    "case-ii": {
        "sensor": {"b_z_t": 0.5e-3},
        "signal": {"omega_tg_hz": 12e3, "xi_hz": 100.0},
        "plan": {"t_final_s": 0.236e-3, "n_p": 20, "n_m": 20},
        "prior": {"omega_hi_hz": 50e3, "sigma_xi_hz": 250.0},
        "lsq": {"init_omega_hz": 15e3, "init_xi_hz": 100.0},
        "data": "case_ii_nm20",
    },
}


def _build(cls, raw: dict, where: str):
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: expected an object")
    known = {f.name: f for f in fields(cls)}
    unknown = set(raw) - set(known)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    kwargs = {}
    for name, value in raw.items():
        default = known[name].default_factory() if callable(known[name].default_factory) else None
        if default is not None and hasattr(default, "__dataclass_fields__"):
            kwargs[name] = _build(type(default), value, f"{where}.{name}")
        else:
            kwargs[name] = value
    return cls(**kwargs)


def _merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for k, v in over.items():
        out[k] = _merge(out[k], v) if isinstance(v, dict) and isinstance(out.get(k), dict) else v
    return out


def parse_config(raw: dict | None = None, preset: str | None = None) -> RunConfig:
    """Strict parse: preset values first, then ``raw`` on top."""
    raw = dict(raw or {})
    preset = preset or raw.get("preset", "case-i")
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
    cfg = _build(RunConfig, _merge(PRESETS[preset], raw) | {"preset": preset}, "config")
    if cfg.mode not in MODES:
        raise ConfigError(f"unknown mode {cfg.mode!r}; choose from {', '.join(MODES)}")
    if cfg.model not in ("ideal", "refined"):
        raise ConfigError(f"unknown model {cfg.model!r}")
    return cfg


def build_identity() -> str:
    """``git describe`` of the source tree, or the package version."""
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


# -- config -> domain objects ---------------------------------------------


def sensor_of(cfg: RunConfig) -> SensorConfig:
    return SensorConfig(b_z=cfg.sensor.b_z_t, omega_mw=TWO_PI * cfg.sensor.omega_mw_hz)


def signal_of(cfg: RunConfig) -> SignalConfig:
    s = cfg.signal
    return SignalConfig(TWO_PI * s.omega_tg_hz, TWO_PI * s.xi_hz, s.phi_tg)


def noise_of(cfg: RunConfig) -> NoiseConfig | None:
    n = cfg.noise
    if not n.enabled:
        return None
    return NoiseConfig(n.t2_s, n.tau_mu_s, OUParams(n.tau_eps_s, n.sigma_eps), seed=cfg.base_seed)


def prior_of(cfg: RunConfig, two_d: bool) -> Prior:
    p = cfg.prior
    om = Flat(TWO_PI * p.omega_lo_hz, TWO_PI * p.omega_hi_hz)
    return Prior((om, Gaussian(0.0, TWO_PI * p.sigma_xi_hz))) if two_d else Prior((om,))


def mcmc_of(cfg: RunConfig) -> MCMCConfig:
    m = cfg.mcmc
    return MCMCConfig(
        m.n_mc, m.n_chains, m.burn_in, m.n_pre,
        (TWO_PI * m.proposal_omega_hz, TWO_PI * m.proposal_xi_hz), cfg.base_seed,
    )


def load_data(cfg: RunConfig):
    if cfg.data in io.FIXTURES:
        return io.load_fixture(cfg.data)
    if not cfg.data:
        raise ConfigError("no dataset given")
    return io.load_dataset(cfg.data)


# -- commands -------------------------------------------------------------


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def _hz(d: dict) -> dict:
    return {f"{k}_hz": v / TWO_PI for k, v in d.items()}


def cmd_simulate(cfg: RunConfig, out: Path) -> int:
    p = cfg.plan
    plan = MeasurementPlan.evenly_spaced(p.t_final_s, p.n_p, p.n_m)
    sensor, signal, noise = sensor_of(cfg), signal_of(cfg), noise_of(cfg)
    data = generate_dataset(plan, sensor, signal, noise, cfg.model, cfg.base_seed, cfg.noise.mode)
    io.save_dataset(data, out / "dataset.json")
    if cfg.trajectory:
        t = np.linspace(0.0, p.t_final_s, 400)
        clean = propagate_refined(sensor, signal, t).p_d
        cols = [t, clean]
        header = ["t_s", "p_d_noiseless"]
        if noise is not None:
            cols.append(noisy_mean_populations(t, sensor, signal, noise,
                                               cfg.noise.trajectory_realisations, cfg.base_seed))
            header.append("p_d_noisy_mean")
        io.write_csv(out / "trajectory.csv", header, zip(*cols))
    return EXIT_OK


def cmd_infer_grid(cfg: RunConfig, out: Path) -> int:
    data = load_data(cfg)
    prior = prior_of(cfg, two_d=False)
    f = prior.factors[0]
    grid = np.linspace(f.lo, f.hi, cfg.grid.n_points)
    sensor = SensorConfig(b_z=data.provenance.get("b_z_t", cfg.sensor.b_z_t))
    model = "ideal" if cfg.model == "ideal" or cfg.preset == "case-i" else "refined"
    post = grid_posterior(data, prior, grid, model, sensor)
    io.write_csv(out / "posterior.csv", ("omega_tg_hz", "density_per_hz"),
                 zip(grid / TWO_PI, post.density * TWO_PI))
    s = summarize(post)
    _write_json(out / "summary.json", {"estimate": _hz(s.theta_est), "std": _hz(s.delta_theta),
                                       "model": model})
    return EXIT_OK


def cmd_infer_mcmc(cfg: RunConfig, out: Path) -> int:
    data = load_data(cfg)
    sensor = SensorConfig(b_z=data.provenance.get("b_z_t", cfg.sensor.b_z_t))
    samples = metropolis_run(data, prior_of(cfg, two_d=True), mcmc_of(cfg), "refined", sensor)
    io.write_chains_csv(out / "chains.csv", samples)
    s = summarize(samples)
    _write_json(out / "summary.json", {
        "estimate": _hz(s.theta_est),
        "std": _hz(s.delta_theta),
        "r_hat": dict(zip(samples.names, map(float, samples.r_hat))),
        "acceptance": [float(a) for a in samples.acceptance],
    })
    return EXIT_OK


def cmd_baseline_fft(cfg: RunConfig, out: Path) -> int:
    data = load_data(cfg)
    est, unc, spec = fft_estimate(data)
    io.write_csv(out / "spectrum.csv", ("omega_hz", "magnitude"),
                 zip(spec.frequencies / TWO_PI, spec.magnitudes))
    _write_json(out / "summary.json", {"omega_tg_hz": est / TWO_PI, "uncertainty_hz": unc / TWO_PI})
    return EXIT_OK


def cmd_baseline_lsq(cfg: RunConfig, out: Path) -> int:
    data = load_data(cfg)
    l = cfg.lsq
    if cfg.preset == "case-i" or cfg.model == "ideal":
        fit = lsq_fit_cos2(data, TWO_PI * l.init_omega_hz, l.weighted)
        names = ("omega_tg",)
    else:
        sensor = SensorConfig(b_z=data.provenance.get("b_z_t", cfg.sensor.b_z_t))
        init = ParameterPoint(TWO_PI * l.init_omega_hz, TWO_PI * l.init_xi_hz)
        fit = lsq_fit_refined(data, init, sensor, l.weighted)
        names = ("omega_tg", "xi")
    rows = [(n, v / TWO_PI, c / TWO_PI, i / TWO_PI)
            for n, v, c, i in zip(names, fit.params, fit.ci68, fit.init)]
    io.write_csv(out / "fit.csv", ("parameter", "value_hz", "ci68_hz", "init_hz"), rows)
    _write_json(out / "summary.json", {"residual_sum": fit.residual_sum, "converged": fit.converged})
    return EXIT_OK


def cmd_reproduce(cfg: RunConfig, out: Path) -> int:
    rep = reproduce.run(cfg.case, out, cfg.seed, cfg.mcmc.n_mc)
    seed = "default" if cfg.seed is None else cfg.seed
    header = f"build {build_identity()}  config {cfg.digest()}  seed {seed}"
    text = header + "\n" + rep.table() + "\n"
    (out / f"report_{cfg.case}.txt").write_text(text)
    print(text, end="")
    return EXIT_OK if rep.passed else EXIT_TOLERANCE


COMMANDS = {
    "simulate": cmd_simulate,
    "infer-grid": cmd_infer_grid,
    "infer-mcmc": cmd_infer_mcmc,
    "baseline-fft": cmd_baseline_fft,
    "baseline-lsq": cmd_baseline_lsq,
    "reproduce": cmd_reproduce,
}


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bayesmag", description=__doc__.splitlines()[0])
    ap.add_argument("--config", type=Path, help="JSON run config")
    ap.add_argument("--seed", type=int, help="base seed (unsigned 64-bit)")
    ap.add_argument("--out", type=Path, default=Path("bayesmag-out"), help="output directory")
    ap.add_argument("--mode", choices=MODES)
    ap.add_argument("--preset", choices=tuple(PRESETS))
    ap.add_argument("--case", choices=reproduce.CASES, help="recipe for --mode reproduce")
    ap.add_argument("--data", help="dataset JSON or fixture name")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        raw = json.loads(args.config.read_text()) if args.config else {}
        for key in ("mode", "case", "data"):
            if getattr(args, key) is not None:
                raw[key] = getattr(args, key)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("seed must be an unsigned 64-bit integer")
            raw["seed"] = args.seed
        cfg = parse_config(raw, args.preset)
        args.out.mkdir(parents=True, exist_ok=True)
        _write_json(args.out / "config.json", asdict(cfg) | {"build": build_identity()})
        return COMMANDS[cfg.mode](cfg, args.out)
    except Exception as e:  # noqa: BLE001 - every failure maps to exit 1
        log.debug("failure", exc_info=True)
        print(f"bayesmag: error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
