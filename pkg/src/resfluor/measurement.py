"""Analytic statistics of joint emitter/fluorescence measurements.

Each shot measures one quadrature of the emitter (``ell``) and one of the
fluorescence (``jay``). The four emitter-fluorescence covariances are laid out
as the 2x2 matrix ``[[pb_xc, pb_pc], [xb_xc, xb_pc]]``, and the same order is
used wherever the four appear as a flat sequence (see :data:`ALL_CONFIGS`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import stats

from .dynamics import JointGaussianState, Rates, evolve_gaussian, prefactor_F, theta_of
from .errors import InvalidInput, UnsupportedDrive, ZeroMeanPhotonNumber
from .states import VACUUM_VARIANCE, Coherent, DriveState, Thermal, drive_moments

N_TOL = 1e-12

_B_INDEX = {"x": 2, "p": 3}
_C_INDEX = {"x": 4, "p": 5}


@dataclass(frozen=True)
class QuadConfig:
    """Quadrature ``ell`` measured on the emitter and ``jay`` on the fluorescence."""

    ell: str
    jay: str

    def __post_init__(self):
        if self.ell not in _B_INDEX or self.jay not in _C_INDEX:
            raise InvalidInput(f"quadratures must be 'x' or 'p', got ({self.ell!r}, {self.jay!r})")

    @property
    def name(self) -> str:
        return f"{self.ell}b_{self.jay}c"

    @property
    def indices(self) -> tuple[int, int]:
        """Positions of the two measured quadratures in the 6-mode ordering."""
        return _B_INDEX[self.ell], _C_INDEX[self.jay]

    @classmethod
    def parse(cls, text: str) -> "QuadConfig":
        """Accept ``"px"``, ``"p,x"`` or ``"pb_xc"``."""
        t = text.replace(",", "").replace("b_", "").replace("c", "").replace(" ", "")
        if len(t) != 2:
            raise InvalidInput(f"cannot parse quadrature configuration {text!r}")
        return cls(t[0], t[1])


ALL_CONFIGS = (QuadConfig("p", "x"), QuadConfig("p", "p"), QuadConfig("x", "x"), QuadConfig("x", "p"))


@dataclass(frozen=True)
class QuadratureCovariances:
    pb_xc: float
    pb_pc: float
    xb_xc: float
    xb_pc: float

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.pb_xc, self.pb_pc], [self.xb_xc, self.xb_pc]])

    def as_array(self) -> np.ndarray:
        return np.array([self.pb_xc, self.pb_pc, self.xb_xc, self.xb_pc])

    def __getitem__(self, config: QuadConfig) -> float:
        return getattr(self, config.name)

    @classmethod
    def from_array(cls, values) -> "QuadratureCovariances":
        v = [float(x) for x in values]
        if len(v) != 4:
            raise InvalidInput("need exactly four covariances")
        return cls(*v)


class BivariateGaussian:
    """Density of the pair (emitter outcome, fluorescence outcome)."""

    def __init__(self, mean, cov):
        self.mean = np.asarray(mean, dtype=float)
        self.cov = np.asarray(cov, dtype=float)
        self._inv = np.linalg.inv(self.cov)
        self._norm = 1.0 / (2 * np.pi * np.sqrt(np.linalg.det(self.cov)))

    def __call__(self, outcome_b, outcome_c):
        d = np.stack(np.broadcast_arrays(outcome_b, outcome_c), axis=-1) - self.mean
        q = np.einsum("...i,ij,...j->...", d, self._inv, d)
        return self._norm * np.exp(-0.5 * q)

    def __repr__(self):
        return f"BivariateGaussian(mean={self.mean.tolist()}, cov={self.cov.tolist()})"


def joint_quadrature_pdf(drive: DriveState, rates: Rates, dt: float, config: QuadConfig) -> BivariateGaussian:
    """Outcome density for one measurement configuration."""
    mean, cov = evolve_gaussian(drive, rates, dt).marginal(config.indices)
    return BivariateGaussian(mean, cov)


def covariances_from_state(state: JointGaussianState) -> QuadratureCovariances:
    """Read the four cross-covariances directly off a propagated Gaussian state."""
    return QuadratureCovariances(*(state.cov[cfg.indices] for cfg in ALL_CONFIGS))


def emitter_fluorescence_covariances(drive: DriveState, rates: Rates, dt: float) -> QuadratureCovariances:
    """Cross-covariances in closed form; all vanish for a coherent drive."""
    _, v = drive_moments(drive)
    half_f = prefactor_F(rates, dt) / 2
    # "+ 0.0" folds negative zeros
    return QuadratureCovariances(
        pb_xc=half_f * (VACUUM_VARIANCE - v[0, 0]) + 0.0,
        pb_pc=-half_f * v[0, 1] + 0.0,
        xb_xc=half_f * v[1, 0] + 0.0,
        xb_pc=half_f * (v[1, 1] - VACUUM_VARIANCE) + 0.0,
    )


def normally_ordered_moments(mean, cov) -> tuple[float, float]:
    """``<a^dag a>`` and ``<a^dag^2 a^2>`` of a single-mode Gaussian state.

    Uses the Gaussian moment theorem on the fluctuation operator.
    """
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    beta = (mean[0] + 1j * mean[1]) / np.sqrt(2)
    n_c = (cov[0, 0] + cov[1, 1] - 1) / 2
    m_c = (cov[0, 0] - cov[1, 1] + 2j * cov[0, 1]) / 2
    b2 = abs(beta) ** 2
    n = b2 + n_c
    n2 = b2**2 + 4 * b2 * n_c + 2 * (np.conj(beta) ** 2 * m_c).real + 2 * n_c**2 + abs(m_c) ** 2
    return float(n), float(n2)


class Coherence(NamedTuple):
    g2: float
    mandel_q: float
    n_a: float


def g2_and_q(drive: DriveState) -> Coherence:
    """Second-order coherence and Mandel Q (taken as ``(g2 - 1) * <n>``) of the drive."""
    n, n2 = normally_ordered_moments(*drive_moments(drive))
    if n <= N_TOL:
        raise ZeroMeanPhotonNumber(f"mean photon number {n:.3g} is too small for g2")
    g2 = n2 / n**2
    return Coherence(g2=g2, mandel_q=(g2 - 1) * n, n_a=n)


def attenuation(rates: Rates, dt: float) -> float:
    """Fraction ``G`` of drive quanta that end up in the fluorescence mode."""
    th = theta_of(rates, dt)
    k = math.sqrt(rates.gamma0 * rates.gamma_s) / rates.gamma * (-2 * math.sin(th / 2) ** 2)
    return k * k


@dataclass(frozen=True)
class CountingStats:
    mean_nc: float
    var_nc: float
    cov_nb_nc: float
    g2_drive: float
    mandel_q_drive: float
    G: float


def counting_stats(drive: DriveState, rates: Rates, dt: float) -> CountingStats:
    coh = g2_and_q(drive)
    G = attenuation(rates, dt)
    th = theta_of(rates, dt)
    g0, gs, g = rates.gamma0, rates.gamma_s, rates.gamma
    excess = (coh.g2 - 1) * coh.n_a**2
    cm1 = -2 * math.sin(th / 2) ** 2
    return CountingStats(
        mean_nc=G * coh.n_a,
        var_nc=G * G * excess + G * coh.n_a,
        cov_nb_nc=g0 * g0 * gs / g**3 * math.sin(th) ** 2 * cm1**2 * excess,
        g2_drive=coh.g2,
        mandel_q_drive=coh.mandel_q,
        G=G,
    )


def fluorescence_count_pmf(drive: DriveState, rates: Rates, dt: float, n):
    """Probability of ``n`` fluorescent quanta for coherent or thermal drives."""
    n = np.asarray(n)
    if np.any(n < 0) or not np.all(np.equal(np.mod(n, 1), 0)):
        raise InvalidInput("count must be a non-negative integer")
    G = attenuation(rates, dt)
    if isinstance(drive, Coherent):
        out = stats.poisson.pmf(n, G * abs(drive.alpha) ** 2)
    elif isinstance(drive, Thermal):
        mu = G * drive.n_th
        # Bose-Einstein: mu^n / (1 + mu)^(n + 1)
        out = stats.geom.pmf(n + 1, 1.0 / (1.0 + mu))
    else:
        raise UnsupportedDrive(f"no closed-form count distribution for {type(drive).__name__}")
    return float(out) if out.ndim == 0 else out
