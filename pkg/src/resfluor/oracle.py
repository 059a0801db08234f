"""Brute-force truncated Fock-space reference for the closed-form results.

Basis index of ``|n_a, n_b, n_c>`` is ``(n_a * dim + n_b) * dim + n_c``
(a-major); :func:`fock_index` is the only place that encodes it.

Moments are computed from normally ordered products built with lowering
operators only, and lowering never leaves the truncated space, so the
extracted moments carry no truncation artefact beyond that of the state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, linalg, sparse
from scipy.sparse.linalg import expm_multiply

from .dynamics import dt_of, evolve_gaussian, transfer_amplitudes
from .errors import DimensionGuard, InvalidInput, TruncationTail
from .measurement import counting_stats
from .states import Coherent

MAX_DIM = 32
# dense expm beyond this size is seconds per call on one core; Krylov is not
DENSE_LIMIT = 512


@dataclass(frozen=True)
class FockConfig:
    dim: int = 12
    tail_tol: float = 1e-10

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise InvalidInput(f"dim must be an integer >= 2, got {self.dim}")
        if self.dim > MAX_DIM:
            raise DimensionGuard(f"dim={self.dim} exceeds the limit of {MAX_DIM}")

    @property
    def size(self) -> int:
        return self.dim**3


@dataclass
class FockState:
    amplitudes: np.ndarray
    dim: int = field(default=0)

    def __post_init__(self):
        if not self.dim:
            self.dim = round(len(self.amplitudes) ** (1 / 3))
        if self.dim**3 != len(self.amplitudes):
            raise InvalidInput("amplitude vector length is not a cube")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to ``[n_a, n_b, n_c]``."""
        return self.amplitudes.reshape(self.dim, self.dim, self.dim)

    def mode_populations(self) -> np.ndarray:
        """Row ``k`` holds the number distribution of mode k."""
        p = np.abs(self.tensor()) ** 2
        return np.stack([p.sum(axis=(1, 2)), p.sum(axis=(0, 2)), p.sum(axis=(0, 1))])


def fock_index(n_a: int, n_b: int, n_c: int, dim: int) -> int:
    return (n_a * dim + n_b) * dim + n_c


def _rates_pair(rates):
    # zero rates are allowed here, unlike in dynamics.Rates
    if hasattr(rates, "gamma0"):
        g0, gs = rates.gamma0, rates.gamma_s
    else:
        g0, gs = rates
    g0, gs = float(g0), float(gs)
    if g0 < 0 or gs < 0:
        raise InvalidInput("rates must be non-negative")
    return g0, gs


def lowering(dim: int) -> sparse.csr_matrix:
    return sparse.diags(np.sqrt(np.arange(1, dim)), 1, format="csr")


def mode_operators(dim: int) -> list[sparse.csr_matrix]:
    """Lowering operators of modes a, b, c on the product space."""
    a = lowering(dim)
    eye = sparse.identity(dim, format="csr")
    return [
        sparse.kron(sparse.kron(a, eye), eye, format="csr"),
        sparse.kron(sparse.kron(eye, a), eye, format="csr"),
        sparse.kron(sparse.kron(eye, eye), a, format="csr"),
    ]


def build_generator(rates, dt: float, cfg: FockConfig) -> sparse.csr_matrix:
    """Hermitian exponent ``sqrt(dt) (sqrt(g0) a^dag b + sqrt(gs) b^dag c + h.c.)``."""
    if not dt >= 0:
        raise InvalidInput(f"dt must be >= 0, got {dt}")
    g0, gs = _rates_pair(rates)
    a, b, c = mode_operators(cfg.dim)
    h = math.sqrt(g0) * (a.T @ b) + math.sqrt(gs) * (b.T @ c)
    return (math.sqrt(dt) * (h + h.T.conj())).tocsr()


def coherent_fock(alpha: complex, dim: int) -> np.ndarray:
    n = np.arange(dim)
    log_fact = np.array([math.lgamma(k + 1) for k in n])
    with np.errstate(divide="ignore"):
        mag = np.exp(-abs(alpha) ** 2 / 2 + n * np.log(abs(alpha)) - log_fact / 2) if alpha else (n == 0).astype(float)
    return mag * np.exp(1j * np.angle(alpha) * n)


def _check_tail(state: FockState, tol: float, when: str):
    top = state.mode_populations()[:, -1].max()
    if top > tol:
        raise TruncationTail(f"{when}: top-level population {top:.3g} exceeds {tol:.3g}; raise dim")


def initial_fock(alpha: complex, cfg: FockConfig) -> FockState:
    """``|alpha> (x) |0> (x) |0>``, truncated and renormalised."""
    psi_a = coherent_fock(complex(alpha), cfg.dim)
    vac = np.zeros(cfg.dim)
    vac[0] = 1.0
    psi = np.kron(np.kron(psi_a, vac), vac)
    state = FockState(psi / np.linalg.norm(psi), cfg.dim)
    _check_tail(state, cfg.tail_tol, "initial state")
    return state


def evolve_fock(alpha: complex, rates, dt: float, cfg: FockConfig) -> FockState:
    """Apply ``exp(-i * generator)`` to the truncated coherent input."""
    state = initial_fock(alpha, cfg)
    gen = build_generator(rates, dt, cfg)
    if cfg.size <= DENSE_LIMIT:
        psi = linalg.expm(-1j * gen.toarray()) @ state.amplitudes
    else:
        psi = expm_multiply(-1j * gen.tocsc(), state.amplitudes)
    out = FockState(psi, cfg.dim)
    _check_tail(out, cfg.tail_tol, "evolved state")
    return out


def oracle_moments(state: FockState) -> dict:
    """Quadrature and number moments of all three modes."""
    psi = state.amplitudes
    ops = mode_operators(state.dim)
    low = [op @ psi for op in ops]  # a_i |psi>
    mean_a = np.array([np.vdot(psi, v) for v in low])
    # <a_i^dag a_j> and <a_i a_j>
    nn = np.array([[np.vdot(low[i], low[j]) for j in range(3)] for i in range(3)])
    aa = np.array([[np.vdot(psi, ops[i] @ low[j]) for j in range(3)] for i in range(3)])

    mean = np.empty(6)
    mean[0::2] = np.sqrt(2) * mean_a.real
    mean[1::2] = np.sqrt(2) * mean_a.imag

    # symmetrised second moments from normally ordered ones
    ex = np.eye(3)
    xx = 0.5 * (aa + aa.conj() + nn + nn.T + ex).real
    pp = 0.5 * (-aa - aa.conj() + nn + nn.T + ex).real
    xp = 0.5 * (aa - aa.conj() + nn - nn.T).imag  # symmetrised on the diagonal
    second = np.empty((6, 6))
    second[0::2, 0::2] = xx
    second[1::2, 1::2] = pp
    second[0::2, 1::2] = xp
    second[1::2, 0::2] = xp.T
    cov = second - np.outer(mean, mean)

    n_mean = nn.diagonal().real.copy()
    n_second = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            v = ops[i] @ low[j]
            n_second[i, j] = np.vdot(v, v).real + (n_mean[i] if i == j else 0.0)
    n_cov = n_second - np.outer(n_mean, n_mean)
    return {
        "mean": mean,
        "cov": cov,
        "amplitudes": mean_a,
        "n_mean": n_mean,
        "n_cov": n_cov,
        "norm": state.norm(),
    }


def oracle_compare(drive: Coherent, rates, dt: float, cfg: FockConfig) -> dict:
    """Worst absolute deviation between Fock-space and closed-form moments."""
    if not isinstance(drive, Coherent):
        raise InvalidInput("the Fock oracle takes a coherent drive")
    mom = oracle_moments(evolve_fock(drive.alpha, rates, dt, cfg))
    amps = transfer_amplitudes(rates, dt).as_array() * drive.alpha
    gauss = evolve_gaussian(drive, rates, dt)
    n_exact = np.abs(amps) ** 2
    report = {
        "amplitudes": float(np.max(np.abs(mom["amplitudes"] - amps))),
        "quadrature_mean": float(np.max(np.abs(mom["mean"] - gauss.mean))),
        "quadrature_cov": float(np.max(np.abs(mom["cov"] - gauss.cov))),
        "number_mean": float(np.max(np.abs(mom["n_mean"] - n_exact))),
        "number_cov": float(np.max(np.abs(mom["n_cov"] - np.diag(n_exact)))),
        "norm": abs(mom["norm"] - 1.0),
    }
    if drive.alpha != 0:
        cs = counting_stats(drive, rates, dt)
        report["counting"] = float(
            max(
                abs(mom["n_mean"][2] - cs.mean_nc),
                abs(mom["n_cov"][2, 2] - cs.var_nc),
                abs(mom["n_cov"][1, 2] - cs.cov_nb_nc),
            )
        )
    report["max_abs_deviation"] = max(report.values())
    return report


def oracle_compare_theta(drive: Coherent, rates, theta: float, cfg: FockConfig) -> dict:
    return oracle_compare(drive, rates, dt_of(rates, theta), cfg)


def count_pmf_quadrature(p_density, G: float, n: int, r_max: float = np.inf) -> float:
    """Fluorescent count probability by direct integration over a P-function.

    ``p_density(re, im)`` must be a proper (non-negative, normalised) density.
    """
    fact = math.factorial(n)

    def integrand(r, phi):
        w = G * r * r
        return p_density(r * math.cos(phi), r * math.sin(phi)) * w**n / fact * math.exp(-w) * r

    val, _ = integrate.dblquad(integrand, 0.0, 2 * np.pi, 0.0, r_max, epsabs=1e-13, epsrel=1e-12)
    return float(val)


def g2_fock(psi_a: np.ndarray) -> tuple[float, float]:
    """``(<n>, g2)`` of a single-mode pure state given in the Fock basis."""
    dim = len(psi_a)
    a = lowering(dim).toarray()
    v1 = a @ psi_a
    v2 = a @ v1
    n = np.vdot(v1, v1).real
    return float(n), float(np.vdot(v2, v2).real / n**2)
