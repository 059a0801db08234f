"""Monte Carlo simulation of the joint measurement campaign.

Random streams are counter based: the shots of configuration ``k`` are cut
into fixed chunks of :data:`CHUNK` shots, and chunk ``j`` draws from a Philox
generator seeded by ``SeedSequence(seed, spawn_key=(k, j))``. A shot's draw
therefore depends only on ``(seed, k, shot index)``, never on how chunks are
scheduled across threads.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dynamics import Rates, evolve_gaussian, transfer_amplitudes
from .errors import ImproperP, InsufficientShots, InvalidInput
from .measurement import ALL_CONFIGS, QuadConfig, QuadratureCovariances, emitter_fluorescence_covariances
from .nulltest import MeasuredCovariances
from .states import Coherent, DriveState, Thermal

CHUNK = 1 << 16
DEFAULT_SEED = 20240611
DEFAULT_SHOTS = 1_000_000
_MIXTURE_STREAM = 1000


def stream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & ((1 << 64) - 1), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ExperimentPlan:
    drive: DriveState
    rates: Rates
    dt: float
    shots_per_config: int = DEFAULT_SHOTS
    configs: tuple = ALL_CONFIGS
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        configs = tuple(self.configs)
        if not configs:
            raise InvalidInput("at least one configuration is required")
        if len(set(configs)) != len(configs):
            raise InvalidInput("duplicate measurement configurations")
        if int(self.shots_per_config) != self.shots_per_config or self.shots_per_config < 2:
            raise InsufficientShots(f"need at least 2 shots per configuration, got {self.shots_per_config}")
        if not self.dt >= 0:
            raise InvalidInput(f"dt must be >= 0, got {self.dt}")
        object.__setattr__(self, "configs", configs)
        object.__setattr__(self, "shots_per_config", int(self.shots_per_config))


@dataclass
class SampleSet:
    """Outcomes keyed by configuration; each array has shape ``(shots, 2)``."""

    plan: ExperimentPlan
    samples: dict = field(default_factory=dict)

    def __getitem__(self, config: QuadConfig) -> np.ndarray:
        return self.samples[config]

    def to_csv(self, fh=None) -> str | None:
        """Write rows ``config, shot, outcome_b, outcome_c``; returns text if no handle."""
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["config", "shot", "outcome_b", "outcome_c"])
        for cfg, arr in self.samples.items():
            for i, (b, c) in enumerate(arr):
                w.writerow([cfg.name, i, repr(float(b)), repr(float(c))])
        return buf.getvalue() if fh is None else None


def _draw(seed, k, chunk, n, mean, chol):
    z = stream(seed, k, chunk).standard_normal((n, 2))
    return mean + z @ chol.T


def _cholesky(cov):
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(cov)
        return v * np.sqrt(np.clip(w, 0, None))


def sample_shots(plan: ExperimentPlan, n_workers: int = 1) -> SampleSet:
    """Draw every configuration's shots from the exact output Gaussian."""
    state = evolve_gaussian(plan.drive, plan.rates, plan.dt)
    n = plan.shots_per_config
    n_chunks = -(-n // CHUNK)
    jobs = []
    for k, cfg in enumerate(plan.configs):
        mean, cov = state.marginal(cfg.indices)
        chol = _cholesky(cov)
        for j in range(n_chunks):
            size = min(CHUNK, n - j * CHUNK)
            jobs.append((k, j, size, mean, chol))

    def run(job):
        k, j, size, mean, chol = job
        return _draw(plan.seed, k, j, size, mean, chol)

    if n_workers > 1:
        with ThreadPoolExecutor(n_workers) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(job) for job in jobs]

    out = SampleSet(plan)
    for k, cfg in enumerate(plan.configs):
        out.samples[cfg] = np.concatenate(parts[k * n_chunks : (k + 1) * n_chunks])
    return out


def covariance_with_stderr(b, c) -> tuple[float, float]:
    """Unbiased sample covariance and its large-sample standard error."""
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    n = len(b)
    if n < 2:
        raise InsufficientShots(f"need at least 2 shots, got {n}")
    prod = (b - b.mean()) * (c - c.mean())
    cov = prod.sum() / (n - 1)
    m22 = np.mean(prod**2)
    return float(cov), float(np.sqrt(max(m22 - cov * cov, 0.0) / n))


def estimate_covariances(s: SampleSet) -> MeasuredCovariances:
    """Per-configuration covariance estimates.

    Configurations missing from the sample set are reported as 0 with a zero
    stderr; a null test needs all four.
    """
    values = dict.fromkeys((cfg.name for cfg in ALL_CONFIGS), 0.0)
    errs = dict.fromkeys(values, 0.0)
    n_min = None
    for cfg, arr in s.samples.items():
        values[cfg.name], errs[cfg.name] = covariance_with_stderr(arr[:, 0], arr[:, 1])
        n_min = len(arr) if n_min is None else min(n_min, len(arr))
    return MeasuredCovariances(
        QuadratureCovariances(**values),
        np.array([errs[cfg.name] for cfg in ALL_CONFIGS]),
        n_min or 0,
    )


def simulate(plan: ExperimentPlan, n_workers: int = 1) -> MeasuredCovariances:
    return estimate_covariances(sample_shots(plan, n_workers))


def _outcome_means(alpha, amps, cfg):
    """Mean outcomes of (ell_b, jay_c) for coherent drive amplitudes ``alpha``."""
    beta_b = amps.A_b * alpha
    beta_c = amps.A_c * alpha
    mb = np.sqrt(2) * (beta_b.real if cfg.ell == "x" else beta_b.imag)
    mc = np.sqrt(2) * (beta_c.real if cfg.jay == "x" else beta_c.imag)
    return mb, mc


def classical_mixture_check(drive: DriveState, rates: Rates, dt: float, n_alpha: int, shots: int, seed: int = DEFAULT_SEED) -> dict:
    """Rebuild the covariances by averaging coherent evolutions over the P-function.

    For each sampled ``alpha`` the emitter and fluorescence are in a product of
    coherent states. ``shots`` outcomes per ``alpha`` give conditional sample
    means whose covariance across ``alpha`` estimates the mixture covariance.
    """
    if isinstance(drive, Coherent):
        zeros = np.zeros(4)
        return {
            "estimate": zeros, "stderr": zeros, "analytic": zeros,
            "deviation": zeros, "max_deviation": 0.0,
        }
    if not isinstance(drive, Thermal):
        raise ImproperP(f"{type(drive).__name__} has no non-negative P-function to sample")
    if n_alpha < 2 or shots < 1:
        raise InsufficientShots("need n_alpha >= 2 and shots >= 1")

    amps = transfer_amplitudes(rates, dt)
    analytic = emitter_fluorescence_covariances(drive, rates, dt).as_array()
    sd_alpha = np.sqrt(drive.n_th / 2)
    est, err = np.zeros(4), np.zeros(4)
    for k, cfg in enumerate(ALL_CONFIGS):
        g = stream(seed, _MIXTURE_STREAM + k)
        alpha = sd_alpha * (g.standard_normal(n_alpha) + 1j * g.standard_normal(n_alpha))
        mb, mc = _outcome_means(alpha, amps, cfg)
        noise = g.standard_normal((n_alpha, shots, 2)) * np.sqrt(0.5)
        bbar = mb + noise[:, :, 0].mean(axis=1)
        cbar = mc + noise[:, :, 1].mean(axis=1)
        est[k], err[k] = covariance_with_stderr(bbar, cbar)
    with np.errstate(divide="ignore", invalid="ignore"):
        dev = np.where(err > 0, np.abs(est - analytic) / err, np.abs(est - analytic))
    return {
        "estimate": est,
        "stderr": err,
        "analytic": analytic,
        "deviation": dev,
        "max_deviation": float(dev.max()),
    }
