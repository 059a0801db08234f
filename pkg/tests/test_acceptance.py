"""Acceptance suite: one test and one PASS/FAIL line per criterion.

Run under pytest, or directly with ``python3 tests/test_acceptance.py``.
"""

import math
import time

import numpy as np
import pytest

from resfluor.dynamics import (
    Rates,
    dt_of,
    hadamard_partial_sums,
    hadamard_remainder_bound,
    mode_transform,
    prefactor_F,
    short_time_prefactor,
    symplectic_form,
    symplectic_transform,
    transfer_amplitudes,
)
from resfluor.measurement import counting_stats, emitter_fluorescence_covariances, fluorescence_count_pmf, attenuation
from resfluor.nulltest import MeasuredCovariances, null_test, reconstruct_drive_covariance, z_scores
from resfluor.oracle import FockConfig, count_pmf_quadrature, evolve_fock, oracle_compare, oracle_moments
from resfluor.physrates import hz_to_angular, matterwave_rate, quadrupole_rate
from resfluor.sampler import DEFAULT_SEED, ExperimentPlan, simulate
from resfluor.states import Coherent, SqueezedThermal, Thermal

EQ = Rates(0.5, 0.5)
DT = dt_of(EQ, math.pi / 2)

_capsys = None


@pytest.fixture(autouse=True)
def _uncaptured(capsys):
    global _capsys
    _capsys = capsys
    yield
    _capsys = None


def _emit(line):
    if _capsys is None:
        print(line)
    else:
        with _capsys.disabled():
            print("\n" + line, end=" ")


def verdict(n, name, checks):
    """Print one line for criterion ``n`` then fail on the first false check."""
    ok = all(v for _, v in checks)
    detail = "; ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in checks)
    _emit(f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {name} ({detail})")
    for k, v in checks:
        assert v, f"criterion {n}: {k}"


def test_criterion_1_unitarity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    omega = symplectic_form(3)
    norm_err = unit_err = sympl_err = 0.0
    for _ in range(1000):
        rates = Rates(10 ** rng.uniform(-3, 1), 10 ** rng.uniform(-3, 1))
        dt = dt_of(rates, rng.uniform(0, 4 * np.pi))
        a = transfer_amplitudes(rates, dt).as_array()
        norm_err = max(norm_err, abs(np.sum(np.abs(a) ** 2) - 1))
        mt = mode_transform(rates, dt)
        unit_err = max(unit_err, np.max(np.abs(mt.M @ mt.M.conj().T - np.eye(3))))
        S = symplectic_transform(mt).S
        sympl_err = max(sympl_err, np.max(np.abs(S @ omega @ S.T - omega)))
    elapsed = time.perf_counter() - t0
    verdict(1, "unitarity/conservation", [
        (f"norm {norm_err:.1e}", norm_err < 1e-12),
        (f"MM^dag {unit_err:.1e}", unit_err < 1e-12),
        (f"S Omega S^T {sympl_err:.1e}", sympl_err < 1e-12),
        (f"{elapsed:.2f}s < 5s", elapsed < 5),
    ])


def test_criterion_2_coherent_null_analytic():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(100):
        rates = Rates(10 ** rng.uniform(-2, 1), 10 ** rng.uniform(-2, 1))
        dt = dt_of(rates, rng.uniform(0, 4 * np.pi))
        alpha = complex(*rng.normal(scale=3, size=2))
        worst = max(worst, np.max(np.abs(emitter_fluorescence_covariances(Coherent(alpha), rates, dt).as_array())))
    verdict(2, "coherent null (analytic)", [(f"max |cov| {worst:.1e}", worst <= 1e-14)])


def test_criterion_3_coherent_null_monte_carlo():
    t0 = time.perf_counter()
    z = z_scores(simulate(ExperimentPlan(Coherent(2 + 1j), EQ, DT, 10**6)))
    zs = np.array([z_scores(simulate(ExperimentPlan(Coherent(2 + 1j), EQ, DT, 10**4, seed=DEFAULT_SEED + i))) for i in range(200)])
    rate = float(np.mean(np.abs(zs) > 2))
    elapsed = time.perf_counter() - t0
    verdict(3, "coherent null (Monte Carlo)", [
        (f"max|z| {np.max(np.abs(z)):.2f} < 5", bool(np.all(np.abs(z) < 5))),
        (f"|z|>2 rate {100 * rate:.2f}% in 4.6+-2%", abs(rate - 0.046) <= 0.02),
        (f"{elapsed:.1f}s < 60s", elapsed < 60),
    ])


def test_criterion_4_squeezed_reconstruction():
    drive = SqueezedThermal(0, 0.5, 0)
    rec = reconstruct_drive_covariance(MeasuredCovariances.exact(emitter_fluorescence_covariances(drive, EQ, DT)), EQ, DT)
    exact_var = math.exp(-1) / 2  # 0.183940 to six places
    rep = null_test(simulate(ExperimentPlan(drive, EQ, DT, 10**6)), EQ, DT)
    mc_dev = abs(rep.reconstructed_cov[0, 0] - exact_var)
    verdict(4, "squeezed reconstruction", [
        (f"analytic Var(x) {rec.cov[0, 0]:.10f}", abs(rec.cov[0, 0] - exact_var) < 1e-10),
        (f"MC {mc_dev / rep.cov_stderrs[0, 0]:.2f} stderr", mc_dev < 3 * rep.cov_stderrs[0, 0]),
        (f"verdict {rep.verdict}", rep.verdict == "nonclassical"),
    ])


def test_criterion_5_thermal():
    cov = emitter_fluorescence_covariances(Thermal(1), EQ, DT)
    rep = null_test(MeasuredCovariances.exact(cov), EQ, DT)
    mc = null_test(simulate(ExperimentPlan(Thermal(1), EQ, DT, 10**6)), EQ, DT)
    r = 1 / (2 * math.sqrt(2))
    verdict(5, "thermal drive", [
        ("pb_xc", abs(cov.pb_xc - r) < 1e-10),
        ("xb_pc", abs(cov.xb_pc + r) < 1e-10),
        ("cov 3/2 I", np.max(np.abs(rep.reconstructed_cov - 1.5 * np.eye(2))) < 1e-10),
        (f"purity {rep.purity:.6f}", abs(rep.purity - 1 / 3) < 1e-10),
        (f"verdict {rep.verdict}/{mc.verdict}", rep.verdict == mc.verdict == "classical_noncoherent"),
    ])


def test_criterion_6_oracle_equivalence():
    t0 = time.perf_counter()
    rates = Rates(0.7, 0.3)
    rep = oracle_compare(Coherent(0.8), rates, 0.5 / rates.gamma, FockConfig(12))
    elapsed = time.perf_counter() - t0
    verdict(6, "oracle equivalence", [
        (f"max deviation {rep['max_abs_deviation']:.1e}", rep["max_abs_deviation"] < 1e-8),
        (f"{elapsed:.2f}s < 30s", elapsed < 30),
    ])


def test_criterion_7_counting():
    coh = counting_stats(Coherent(2), EQ, DT)
    th = counting_stats(Thermal(1), EQ, DT)
    mom = oracle_moments(evolve_fock(2.0, EQ, DT, FockConfig(30)))
    fock_dev = max(abs(mom["n_mean"][2] - coh.mean_nc), abs(mom["n_cov"][2, 2] - coh.var_nc), abs(mom["n_cov"][1, 2] - coh.cov_nb_nc))
    G = attenuation(EQ, DT)
    p0 = count_pmf_quadrature(lambda x, y: math.exp(-(x * x + y * y)) / math.pi, G, 0)
    tol = 1e-12
    verdict(7, "counting statistics", [
        ("G 0.25", abs(coh.G - 0.25) < tol),
        ("coherent 1/1/0", max(abs(coh.mean_nc - 1), abs(coh.var_nc - 1), abs(coh.cov_nb_nc)) < tol),
        ("thermal 0.25/0.3125/0.125", max(abs(th.mean_nc - 0.25), abs(th.var_nc - 0.3125), abs(th.cov_nb_nc - 0.125)) < tol),
        (f"Fock oracle {fock_dev:.1e}", fock_dev < 1e-8),
        (f"P0 quadrature {abs(p0 - 0.8):.1e}", abs(p0 - 0.8) < 1e-6 and abs(fluorescence_count_pmf(Thermal(1), EQ, DT, 0) - 0.8) < 1e-12),
    ])


def test_criterion_8_short_time_slope():
    rates = Rates(0.7, 0.3)
    dts = np.logspace(-4, -2, 9) / rates.gamma
    err = [abs(prefactor_F(rates, d) - short_time_prefactor(rates, d)) for d in dts]
    slope = float(np.polyfit(np.log(dts), np.log(err), 1)[0])
    verdict(8, "short-time expansion", [(f"slope {slope:.3f}", abs(slope - 3.5) <= 0.1)])


def test_criterion_9_hadamard():
    rng = np.random.default_rng(9)
    worst = 0.0
    bounded = True
    for _ in range(200):
        rates = Rates(10 ** rng.uniform(-2, 1), 10 ** rng.uniform(-2, 1))
        theta = rng.uniform(0, 2 * np.pi)
        dt = dt_of(rates, theta)
        closed = transfer_amplitudes(rates, dt).as_array()
        # summing terms up to cosh(theta) in size leaves this much rounding
        fp_floor = 4 * np.finfo(float).eps * math.cosh(theta)
        worst = max(worst, np.max(np.abs(np.array(hadamard_partial_sums(rates, dt, 25)) - closed)))
        for k in range(1, 25):
            err = np.abs(np.array(hadamard_partial_sums(rates, dt, k)) - closed)
            bounded &= bool(np.all(err <= np.array(hadamard_remainder_bound(rates, dt, k)) + fp_floor))
    verdict(9, "Hadamard series", [(f"k=25 error {worst:.1e}", worst < 1e-12), ("remainder bounds", bounded)])


def test_criterion_10_physical_rates():
    mw = matterwave_rate(1, 1, 1)
    q = quadrupole_rate(1150, 2, hz_to_angular(1e3))
    verdict(10, "physical rates", [
        (f"matterwave {mw:.6f}", abs(mw - 0.169616) <= 1e-5),
        (f"quadrupole {q:.3e}", 1e-36 <= q <= 1e-30),
    ])


if __name__ == "__main__":
    import sys

    failed = 0
    for name, fn in sorted(globals().items(), key=lambda kv: int(kv[0].split("_")[2]) if kv[0].startswith("test_criterion_") else 0):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
