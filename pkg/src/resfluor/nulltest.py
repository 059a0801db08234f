"""Reconstruct the drive's quadrature covariance from emitter/fluorescence data.

The cross-covariances are proportional to ``F / 2`` times the drive noise
relative to vacuum, so they vanish for a coherent drive. A measured set of
covariances is first tested against zero; if it is significant the drive
covariance is reconstructed and classified.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import Rates, prefactor_F
from .errors import DegenerateCoupling, InvalidInput
from .measurement import QuadratureCovariances
from .states import VACUUM_VARIANCE

F_MIN = 1e-9
DEFAULT_Z_THRESHOLD = 5.0
VERDICT_MARGIN = 3.0

VERDICTS = ("consistent_with_coherent", "nonclassical", "classical_noncoherent", "inconclusive")


@dataclass(frozen=True)
class MeasuredCovariances:
    """Estimated cross-covariances with their standard errors.

    ``stderrs`` follows the flat order of :meth:`QuadratureCovariances.as_array`.
    Analytic (noise-free) inputs carry zero standard errors.
    """

    values: QuadratureCovariances
    stderrs: np.ndarray = field(default_factory=lambda: np.zeros(4))
    shots_per_config: int = 0

    def __post_init__(self):
        se = np.asarray(self.stderrs, dtype=float).reshape(4)
        if np.any(se < 0) or not np.all(np.isfinite(se)):
            raise InvalidInput("standard errors must be finite and non-negative")
        object.__setattr__(self, "stderrs", se)

    @classmethod
    def exact(cls, values: QuadratureCovariances) -> "MeasuredCovariances":
        return cls(values, np.zeros(4), 0)


@dataclass(frozen=True)
class Reconstruction:
    cov: np.ndarray
    stderrs: np.ndarray
    #: the two independent estimates of Cov(x, p), from xb_xc and from pb_pc
    cov_xp_estimates: tuple[float, float]
    cov_xp_discrepancy: float
    cov_xp_inconsistent: bool
    F_used: float


def reconstruct_from_prefactor(m: MeasuredCovariances, F: float) -> Reconstruction:
    """Invert the covariance relation for a known prefactor ``F``."""
    if not abs(F) >= F_MIN:
        raise DegenerateCoupling(f"|F| = {abs(F):.3g} is below {F_MIN:g}; the measurement is blind here")
    v = m.values
    s_pbxc, s_pbpc, s_xbxc, s_xbpc = m.stderrs * (2 / abs(F))

    var_x = VACUUM_VARIANCE - 2 * v.pb_xc / F
    var_p = VACUUM_VARIANCE + 2 * v.xb_pc / F
    c1, c2 = 2 * v.xb_xc / F, -2 * v.pb_pc / F
    if s_xbxc > 0 and s_pbpc > 0:
        w1, w2 = 1 / s_xbxc**2, 1 / s_pbpc**2
        c = (w1 * c1 + w2 * c2) / (w1 + w2)
        s_c = 1 / np.sqrt(w1 + w2)
    else:
        c, s_c = (c1 + c2) / 2, np.hypot(s_xbxc, s_pbpc) / 2
    combined = np.hypot(s_xbxc, s_pbpc)
    discrepancy = abs(c1 - c2)
    inconsistent = discrepancy > VERDICT_MARGIN * combined if combined > 0 else discrepancy > 1e-9

    return Reconstruction(
        cov=np.array([[var_x, c], [c, var_p]]),
        stderrs=np.array([[s_pbxc, s_c], [s_c, s_xbpc]]),
        cov_xp_estimates=(float(c1), float(c2)),
        cov_xp_discrepancy=float(discrepancy),
        cov_xp_inconsistent=bool(inconsistent),
        F_used=float(F),
    )


def reconstruct_drive_covariance(m: MeasuredCovariances, rates: Rates, dt: float) -> Reconstruction:
    return reconstruct_from_prefactor(m, prefactor_F(rates, dt))


@dataclass(frozen=True)
class NullTestReport:
    reconstructed_cov: np.ndarray
    cov_stderrs: np.ndarray
    purity: float
    z_scores: np.ndarray
    verdict: str
    F_used: float
    min_eigenvalue: float
    min_eigenvalue_stderr: float
    cov_xp_discrepancy: float
    cov_xp_inconsistent: bool
    z_threshold: float

    def to_record(self) -> dict:
        """Flat key/value form; matrices are row-major lists."""
        return {
            "verdict": self.verdict,
            "z_threshold": self.z_threshold,
            "F_used": self.F_used,
            "purity": self.purity,
            "z_scores": [float(z) for z in self.z_scores],
            "reconstructed_cov": self.reconstructed_cov.tolist(),
            "cov_stderrs": self.cov_stderrs.tolist(),
            "min_eigenvalue": self.min_eigenvalue,
            "min_eigenvalue_stderr": self.min_eigenvalue_stderr,
            "cov_xp_discrepancy": self.cov_xp_discrepancy,
            "cov_xp_inconsistent": self.cov_xp_inconsistent,
        }


def z_scores(m: MeasuredCovariances) -> np.ndarray:
    """Each covariance over its standard error; exact zeros score 0."""
    vals = m.values.as_array()
    with np.errstate(divide="ignore", invalid="ignore"):
        z = vals / m.stderrs
    z[(m.stderrs == 0) & (vals == 0)] = 0.0
    return z


def _min_eigen(cov, se):
    w, vecs = np.linalg.eigh(cov)
    v = vecs[:, 0]
    # first-order propagation of the entry errors into the smallest eigenvalue
    var = (v[0] ** 4) * se[0, 0] ** 2 + (v[1] ** 4) * se[1, 1] ** 2 + (2 * v[0] * v[1]) ** 2 * se[0, 1] ** 2
    return float(w[0]), float(np.sqrt(var))


def _lenient_purity(cov):
    det = np.linalg.det(2 * cov)
    return float(1 / np.sqrt(det)) if det > 0 else float("nan")


def null_test_from_prefactor(m: MeasuredCovariances, F: float, z_threshold: float = DEFAULT_Z_THRESHOLD) -> NullTestReport:
    if not z_threshold > 0:
        raise InvalidInput("z_threshold must be positive")
    rec = reconstruct_from_prefactor(m, F)
    z = z_scores(m)
    lam, s_lam = _min_eigen(rec.cov, rec.stderrs)
    if np.all(np.abs(z) < z_threshold):
        verdict = "consistent_with_coherent"
    elif lam < VACUUM_VARIANCE - VERDICT_MARGIN * s_lam:
        verdict = "nonclassical"
    elif lam > VACUUM_VARIANCE + VERDICT_MARGIN * s_lam:
        verdict = "classical_noncoherent"
    else:
        verdict = "inconclusive"
    return NullTestReport(
        reconstructed_cov=rec.cov,
        cov_stderrs=rec.stderrs,
        purity=_lenient_purity(rec.cov),
        z_scores=z,
        verdict=verdict,
        F_used=rec.F_used,
        min_eigenvalue=lam,
        min_eigenvalue_stderr=s_lam,
        cov_xp_discrepancy=rec.cov_xp_discrepancy,
        cov_xp_inconsistent=rec.cov_xp_inconsistent,
        z_threshold=float(z_threshold),
    )


def null_test(m: MeasuredCovariances, rates: Rates, dt: float, z_threshold: float = DEFAULT_Z_THRESHOLD) -> NullTestReport:
    """Classify the drive from measured emitter/fluorescence covariances."""
    return null_test_from_prefactor(m, prefactor_F(rates, dt), z_threshold)
