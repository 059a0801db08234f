"""Closed-form three-mode evolution of drive (a), emitter (b) and fluorescence (c).

The interaction couples a to b with rate ``gamma0`` and b to c with rate
``gamma_s``. Over a single window ``dt`` everything depends on the angle
``theta = sqrt(dt * gamma)`` with ``gamma = gamma0 + gamma_s``. The dynamics
is a passive linear map of the mode amplitudes, ``alpha_out = M @ alpha_in``,
which lifts to an orthogonal symplectic map on quadratures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, NotUnitary
from .states import VACUUM_VARIANCE, DriveState, drive_moments

#: Quadrature order used by every 6-vector and 6x6 matrix.
QUADRATURES = ("x_a", "p_a", "x_b", "p_b", "x_c", "p_c")


def symplectic_form(n_modes: int = 3) -> np.ndarray:
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclass(frozen=True)
class Rates:
    """Coupling rates drive-emitter (``gamma0``) and emitter-fluorescence (``gamma_s``)."""

    gamma0: float
    gamma_s: float

    def __post_init__(self):
        for name in ("gamma0", "gamma_s"):
            value = float(getattr(self, name))
            if not (value > 0 and math.isfinite(value)):
                raise InvalidInput(f"{name} must be positive and finite, got {value}")
            object.__setattr__(self, name, value)

    @property
    def gamma(self) -> float:
        return self.gamma0 + self.gamma_s


def _check_dt(dt):
    if not dt >= 0:
        raise InvalidInput(f"dt must be >= 0, got {dt}")


def theta_of(rates: Rates, dt: float) -> float:
    _check_dt(dt)
    return math.sqrt(dt * rates.gamma)


def dt_of(rates: Rates, theta: float) -> float:
    """Window length giving the dimensionless angle ``theta``."""
    if not theta >= 0:
        raise InvalidInput(f"theta must be >= 0, got {theta}")
    return theta * theta / rates.gamma


def _cos_minus_one(theta):
    # avoids cancellation at small theta
    return -2.0 * math.sin(theta / 2) ** 2


@dataclass(frozen=True)
class TransferAmplitudes:
    """Factors by which an input drive amplitude appears in modes a, b, c."""

    A_a: complex
    A_b: complex
    A_c: complex
    theta: float

    def as_array(self) -> np.ndarray:
        return np.array([self.A_a, self.A_b, self.A_c], dtype=complex)


def transfer_amplitudes(rates: Rates, dt: float) -> TransferAmplitudes:
    th = theta_of(rates, dt)
    g0, gs, g = rates.gamma0, rates.gamma_s, rates.gamma
    cm1 = _cos_minus_one(th)
    return TransferAmplitudes(
        A_a=complex(1.0 + g0 / g * cm1),
        A_b=complex(0.0, -math.sqrt(g0 / g) * math.sin(th)),
        A_c=complex(math.sqrt(g0 * gs) / g * cm1),
        theta=th,
    )


def hadamard_partial_sums(rates: Rates, dt: float, k_max: int) -> tuple[complex, complex, complex]:
    """Truncated commutator-series coefficients of a-dagger after evolution.

    The drive and fluorescence series run over ``k = 1..k_max`` (even powers
    of theta); the emitter series over ``k = 0..k_max`` (odd powers).
    """
    if int(k_max) != k_max or k_max < 1:
        raise InvalidInput(f"k_max must be an integer >= 1, got {k_max}")
    th = theta_of(rates, dt)
    g0, gs, g = rates.gamma0, rates.gamma_s, rates.gamma
    even = sum((-1) ** k * th ** (2 * k) / math.factorial(2 * k) for k in range(1, k_max + 1))
    odd = sum((-1) ** k * th ** (2 * k + 1) / math.factorial(2 * k + 1) for k in range(0, k_max + 1))
    return (
        complex(g0 / g * even + 1.0),
        complex(0.0, -math.sqrt(g0 / g) * odd),
        complex(math.sqrt(g0 * gs) / g * even),
    )


def hadamard_remainder_bound(rates: Rates, dt: float, k_max: int) -> tuple[float, float, float]:
    """Lagrange bound on ``|partial sum - closed form|`` for each coefficient."""
    th = theta_of(rates, dt)
    g0, gs, g = rates.gamma0, rates.gamma_s, rates.gamma
    even_next = th ** (2 * k_max + 2) / math.factorial(2 * k_max + 2)
    odd_next = th ** (2 * k_max + 3) / math.factorial(2 * k_max + 3)
    return g0 / g * even_next, math.sqrt(g0 / g) * odd_next, math.sqrt(g0 * gs) / g * even_next


def normal_mode_basis(rates: Rates) -> np.ndarray:
    """Unitary ``T`` with ``(f_plus, b, f_minus) = T @ (a, b, c)``."""
    g0, gs, g = rates.gamma0, rates.gamma_s, rates.gamma
    s0, ss = math.sqrt(g0 / g), math.sqrt(gs / g)
    return np.array([[s0, 0.0, ss], [0.0, 1.0, 0.0], [ss, 0.0, -s0]], dtype=complex)


@dataclass(frozen=True)
class ModeTransform:
    """Amplitude map ``alpha_out = M @ alpha_in`` in mode order (a, b, c)."""

    M: np.ndarray

    def is_unitary(self, tol=1e-10) -> bool:
        return bool(np.max(np.abs(self.M @ self.M.conj().T - np.eye(3))) < tol)


def mode_transform(rates: Rates, dt: float) -> ModeTransform:
    """Compose the f_plus/b rotation with the normal-mode change of basis."""
    th = theta_of(rates, dt)
    T = normal_mode_basis(rates)
    c, s = math.cos(th), math.sin(th)
    R = np.array([[c, -1j * s, 0.0], [-1j * s, c, 0.0], [0.0, 0.0, 1.0]], dtype=complex)
    return ModeTransform(T.conj().T @ R @ T)


def mode_transform_explicit(rates: Rates, dt: float) -> ModeTransform:
    """Entry-by-entry closed form of :func:`mode_transform`."""
    th = theta_of(rates, dt)
    g0, gs, g = rates.gamma0, rates.gamma_s, rates.gamma
    c, s, cm1 = math.cos(th), math.sin(th), _cos_minus_one(th)
    ab = -1j * math.sqrt(g0 / g) * s
    ac = math.sqrt(g0 * gs) / g * cm1
    bc = -1j * math.sqrt(gs / g) * s
    M = np.array(
        [
            [1 + g0 / g * cm1, ab, ac],
            [ab, c, bc],
            [ac, bc, 1 + gs / g * cm1],
        ],
        dtype=complex,
    )
    return ModeTransform(M)


@dataclass(frozen=True)
class SymplecticTransform:
    """Real 6x6 quadrature map in the order of :data:`QUADRATURES`."""

    S: np.ndarray


def symplectic_transform(mt: ModeTransform) -> SymplecticTransform:
    """Lift a passive mode unitary to quadratures.

    An amplitude factor ``u + iv`` becomes the block ``[[u, -v], [v, u]]``,
    which is what ``(x, p) = sqrt(2) (Re, Im)`` requires.
    """
    if not mt.is_unitary():
        raise NotUnitary("mode transform is not unitary")
    M = np.asarray(mt.M)
    n = M.shape[0]
    S = np.zeros((2 * n, 2 * n))
    S[0::2, 0::2] = M.real
    S[0::2, 1::2] = -M.imag
    S[1::2, 0::2] = M.imag
    S[1::2, 1::2] = M.real
    return SymplecticTransform(S)


@dataclass(frozen=True)
class JointGaussianState:
    """Mean 6-vector and covariance 6x6 of modes (a, b, c)."""

    mean: np.ndarray
    cov: np.ndarray

    def min_uncertainty_eigenvalue(self) -> float:
        n = self.cov.shape[0] // 2
        return float(np.linalg.eigvalsh(self.cov + 0.5j * symplectic_form(n))[0])

    def is_physical(self, tol=1e-9) -> bool:
        return self.min_uncertainty_eigenvalue() >= -tol

    def marginal(self, idx) -> tuple[np.ndarray, np.ndarray]:
        idx = list(idx)
        return self.mean[idx], self.cov[np.ix_(idx, idx)]


def initial_state(drive: DriveState) -> JointGaussianState:
    mean_a, cov_a = drive_moments(drive)
    mean = np.zeros(6)
    mean[:2] = mean_a
    cov = VACUUM_VARIANCE * np.eye(6)
    cov[:2, :2] = cov_a
    return JointGaussianState(mean, cov)


def evolve_gaussian(drive: DriveState, rates: Rates, dt: float) -> JointGaussianState:
    """Propagate drive, vacuum emitter and vacuum fluorescence through one window."""
    S = symplectic_transform(mode_transform(rates, dt)).S
    st = initial_state(drive)
    return JointGaussianState(S @ st.mean, S @ st.cov @ S.T)


def prefactor_F(rates: Rates, dt: float) -> float:
    """Coupling prefactor linking emitter-fluorescence covariances to the drive noise."""
    th = theta_of(rates, dt)
    g0, gs, g = rates.gamma0, rates.gamma_s, rates.gamma
    return 2 * g0 * math.sqrt(gs) / (math.sqrt(g) * g) * math.sin(th) * _cos_minus_one(th)


def short_time_prefactor(rates: Rates, dt: float) -> float:
    """Fifth-order (in sqrt(dt)) Taylor expansion of :func:`prefactor_F`.

    The covariance matrix relation uses ``F / 2``, whose expansion is half of this.
    """
    _check_dt(dt)
    return -rates.gamma0 * math.sqrt(rates.gamma_s) * (dt**1.5 - dt**2.5 * rates.gamma / 4)
