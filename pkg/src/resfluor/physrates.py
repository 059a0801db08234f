"""Coupling rates for concrete emitters (SI units, angular frequencies).

Constants are CODATA 2018 exact or recommended values.
"""

import math

from .errors import InvalidInput

#: Newton's constant, m^3 kg^-1 s^-2
G_NEWTON = 6.67430e-11
#: speed of light, m/s (exact)
C_LIGHT = 299_792_458.0
#: reduced Planck constant, J s (exact)
HBAR = 1.054571817e-34
#: vacuum permittivity, F/m
EPSILON0 = 8.8541878128e-12

DIPOLE_CAVEAT = "scaling estimate without the 1/(3 pi) Wigner-Weisskopf prefactor; order of magnitude only"

__all__ = [
    "G_NEWTON", "C_LIGHT", "HBAR", "EPSILON0", "DIPOLE_CAVEAT",
    "hz_to_angular", "dipole_rate", "matterwave_rate", "quadrupole_rate",
]


def _positive(**kw):
    for name, value in kw.items():
        if not (value > 0 and math.isfinite(value)):
            raise InvalidInput(f"{name} must be positive, got {value}")


def hz_to_angular(f_hz: float) -> float:
    return 2 * math.pi * f_hz


def dipole_rate(omega: float, d: float) -> float:
    """Emission rate scale ``omega^3 |d|^2 / (eps0 hbar c^3)`` of an optical dipole.

    See :data:`DIPOLE_CAVEAT`.
    """
    _positive(omega=omega)
    return omega**3 * abs(d) ** 2 / (EPSILON0 * HBAR * C_LIGHT**3)


def matterwave_rate(Omega: float, omega0: float, Delta: float) -> float:
    """Markovian emission rate of matter waves into a 1D waveguide.

    Args:
        Omega: optical coupling rate mediating the transfer.
        omega0: trap frequency.
        Delta: detuning from the waveguide continuum edge.
    """
    _positive(Omega=Omega, omega0=omega0, Delta=Delta)
    return math.sqrt(math.pi * Omega**4 / (2 * omega0 * Delta)) * math.exp(-2 * Delta / omega0)


def quadrupole_rate(M: float, L: float, omega: float) -> float:
    """Graviton absorption rate ``8 G M L^2 omega^4 / (pi^4 c^5)`` of a mass quadrupole."""
    _positive(M=M, L=L, omega=omega)
    return 8 * G_NEWTON * M * L**2 * omega**4 / (math.pi**4 * C_LIGHT**5)
