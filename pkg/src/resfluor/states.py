r"""Single-mode drive states and their second moments.

Quadrature convention throughout the package: :math:`\hbar = 1`,
:math:`x = (a + a^\dagger)/\sqrt{2}`, :math:`p = (a - a^\dagger)/(i\sqrt{2})`,
so the vacuum covariance matrix is ``0.5 * eye(2)`` and a coherent state
:math:`|\alpha\rangle` has mean ``sqrt(2) * (Re alpha, Im alpha)``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import InvalidInput, NonPhysical

#: Variance of either quadrature in the vacuum.
VACUUM_VARIANCE = 0.5
#: Slack allowed below det(cov) = 1/4 before a state is called unphysical.
PHYSICALITY_TOL = 1e-9
#: Slack below 1/2 before a quadrature is called squeezed.
SQUEEZING_TOL = 1e-9

OMEGA2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


@dataclass(frozen=True)
class Coherent:
    alpha: complex = 0.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))


@dataclass(frozen=True)
class Thermal:
    n_th: float

    def __post_init__(self):
        if not self.n_th >= 0:
            raise NonPhysical(f"thermal occupation must be >= 0, got {self.n_th}")


@dataclass(frozen=True)
class SqueezedThermal:
    """Displaced squeezed thermal state.

    ``phi`` is the squeezing angle in radians; ``phi = 0`` squeezes ``x``.
    The displacement only moves the mean.
    """

    n_th: float = 0.0
    r: float = 0.0
    phi: float = 0.0
    delta: complex = 0.0

    def __post_init__(self):
        if not self.n_th >= 0:
            raise NonPhysical(f"thermal occupation must be >= 0, got {self.n_th}")
        if not (np.isfinite(self.r) and np.isfinite(self.phi)):
            raise InvalidInput("squeezing parameters must be finite")
        object.__setattr__(self, "delta", complex(self.delta))


@dataclass(frozen=True)
class GaussianMoments:
    """Raw quadrature mean ``(x, p)`` and 2x2 covariance."""

    mean: np.ndarray = field(default_factory=lambda: np.zeros(2))
    cov: np.ndarray = field(default_factory=lambda: VACUUM_VARIANCE * np.eye(2))

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(2)
        cov = np.asarray(self.cov, dtype=float).reshape(2, 2)
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise InvalidInput("covariance matrix must be symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    def __eq__(self, other):
        if not isinstance(other, GaussianMoments):
            return NotImplemented
        return np.array_equal(self.mean, other.mean) and np.array_equal(self.cov, other.cov)

    __hash__ = None


DriveState = Union[Coherent, Thermal, SqueezedThermal, GaussianMoments]


@dataclass(frozen=True)
class PMoments:
    """Central second moments of Re(alpha), Im(alpha) under the P-function.

    Negative values are allowed; they signal an improper P-function.
    """

    var_re: float
    var_im: float
    cov_re_im: float


def check_physical(cov, tol=PHYSICALITY_TOL):
    """Raise :class:`NonPhysical` unless ``cov + i/2 Omega >= 0`` up to ``tol``."""
    cov = np.asarray(cov, dtype=float)
    if cov[0, 0] < -tol or cov[1, 1] < -tol or np.linalg.det(cov) < 0.25 - tol:
        raise NonPhysical(f"covariance violates the uncertainty relation: det = {np.linalg.det(cov):.6g}")


def gaussian_covariance(n_th: float, r: float, phi: float) -> np.ndarray:
    """Covariance matrix of a squeezed thermal state.

    Args:
        n_th: mean thermal occupation, >= 0.
        r: squeezing magnitude.
        phi: squeezing angle in radians.

    Returns:
        np.ndarray: symmetric 2x2 matrix with determinant ``((2 n_th + 1) / 2)**2``.
    """
    if not n_th >= 0:
        raise NonPhysical(f"thermal occupation must be >= 0, got {n_th}")
    ch, sh = np.cosh(2 * r), np.sinh(2 * r)
    c, s = np.cos(phi), np.sin(phi)
    off = -s * sh
    return (2 * n_th + 1) / 2 * np.array([[ch - c * sh, off], [off, ch + c * sh]])


def _quad_mean(z: complex) -> np.ndarray:
    return np.sqrt(2) * np.array([z.real, z.imag])


def drive_moments(drive: DriveState) -> tuple[np.ndarray, np.ndarray]:
    """Reduce any drive description to its quadrature mean and covariance."""
    if isinstance(drive, Coherent):
        mean, cov = _quad_mean(drive.alpha), VACUUM_VARIANCE * np.eye(2)
    elif isinstance(drive, Thermal):
        mean, cov = np.zeros(2), (drive.n_th + 0.5) * np.eye(2)
    elif isinstance(drive, SqueezedThermal):
        mean = _quad_mean(drive.delta)
        cov = gaussian_covariance(drive.n_th, drive.r, drive.phi)
    elif isinstance(drive, GaussianMoments):
        mean, cov = drive.mean.copy(), drive.cov.copy()
    else:
        raise InvalidInput(f"not a drive state: {drive!r}")
    check_physical(cov)
    return mean, cov


def p_moments_from_cov(cov) -> PMoments:
    """Invert the quadrature covariance into P-function moments of alpha."""
    cov = np.asarray(cov, dtype=float)
    return PMoments(
        var_re=(cov[0, 0] - VACUUM_VARIANCE) / 2,
        var_im=(cov[1, 1] - VACUUM_VARIANCE) / 2,
        cov_re_im=cov[0, 1] / 2,
    )


def cov_from_p_moments(pm: PMoments) -> np.ndarray:
    """Quadrature covariance from P-function moments (inverse of :func:`p_moments_from_cov`)."""
    return np.array(
        [
            [2 * pm.var_re + VACUUM_VARIANCE, 2 * pm.cov_re_im],
            [2 * pm.cov_re_im, 2 * pm.var_im + VACUUM_VARIANCE],
        ]
    )


def purity(cov) -> float:
    """Purity ``1 / sqrt(det(2 cov))`` of a single-mode Gaussian state."""
    cov = np.asarray(cov, dtype=float)
    check_physical(cov)
    return float(1.0 / np.sqrt(np.linalg.det(2 * cov)))


def classicality_indicators(cov) -> dict:
    """Smallest quadrature variance, squeezing flag and purity."""
    cov = np.asarray(cov, dtype=float)
    p = purity(cov)
    lam = float(np.linalg.eigvalsh(cov)[0])
    return {
        "min_quadrature_variance": lam,
        "squeezed": bool(lam < VACUUM_VARIANCE - SQUEEZING_TOL),
        "purity": p,
    }


# textual form ---------------------------------------------------------------

_BARE_KEY = re.compile(r"([{,]\s*)([A-Za-z_][A-Za-z0-9_]*)\s*:")


def _to_complex(value) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise InvalidInput(f"complex value must be [re, im], got {value!r}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        return complex(value.replace(" ", "").replace("i", "j"))
    return complex(value)


def drive_from_dict(spec: dict) -> DriveState:
    """Build a drive state from its mapping form, e.g. ``{"type": "thermal", "n_th": 1}``."""
    spec = dict(spec)
    kind = str(spec.pop("type", "")).lower()
    try:
        if kind == "coherent":
            return Coherent(_to_complex(spec.get("alpha", 0)))
        if kind == "thermal":
            return Thermal(float(spec["n_th"]))
        if kind == "squeezed_thermal":
            return SqueezedThermal(
                n_th=float(spec.get("n_th", 0.0)),
                r=float(spec.get("r", 0.0)),
                phi=float(spec.get("phi", 0.0)),
                delta=_to_complex(spec.get("delta", 0)),
            )
        if kind == "gaussian":
            return GaussianMoments(mean=spec.get("mean", [0.0, 0.0]), cov=spec["cov"])
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidInput):
            raise
        raise InvalidInput(f"malformed {kind} drive: {exc}") from exc
    raise InvalidInput(f"unknown drive type {kind!r}")


def drive_to_dict(drive: DriveState) -> dict:
    if isinstance(drive, Coherent):
        return {"type": "coherent", "alpha": [drive.alpha.real, drive.alpha.imag]}
    if isinstance(drive, Thermal):
        return {"type": "thermal", "n_th": drive.n_th}
    if isinstance(drive, SqueezedThermal):
        return {
            "type": "squeezed_thermal",
            "n_th": drive.n_th,
            "r": drive.r,
            "phi": drive.phi,
            "delta": [drive.delta.real, drive.delta.imag],
        }
    if isinstance(drive, GaussianMoments):
        return {"type": "gaussian", "mean": drive.mean.tolist(), "cov": drive.cov.tolist()}
    raise InvalidInput(f"not a drive state: {drive!r}")


def parse_drive(text: str) -> DriveState:
    """Parse the compact textual form, e.g. ``{type:"thermal", n_th:1}``.

    Keys may be bare identifiers; the rest must be JSON.
    """
    try:
        spec = json.loads(_BARE_KEY.sub(r'\1"\2":', text))
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"cannot parse drive {text!r}: {exc}") from exc
    if not isinstance(spec, dict):
        raise InvalidInput(f"drive must be a mapping, got {text!r}")
    return drive_from_dict(spec)


def format_drive(drive: DriveState) -> str:
    body = ", ".join(f"{k}:{json.dumps(v)}" for k, v in drive_to_dict(drive).items())
    return "{" + body + "}"
