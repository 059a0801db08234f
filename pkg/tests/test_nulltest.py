import math

import numpy as np
import pytest

from resfluor.dynamics import Rates, dt_of
from resfluor.errors import DegenerateCoupling, InvalidInput
from resfluor.measurement import QuadratureCovariances, emitter_fluorescence_covariances
from resfluor.nulltest import (
    MeasuredCovariances,
    null_test,
    null_test_from_prefactor,
    reconstruct_drive_covariance,
    reconstruct_from_prefactor,
    z_scores,
)
from resfluor.sampler import ExperimentPlan, simulate
from resfluor.states import Coherent, GaussianMoments, SqueezedThermal, Thermal, gaussian_covariance

EQ = Rates(0.5, 0.5)
DT = dt_of(EQ, math.pi / 2)
ZERO = QuadratureCovariances(0, 0, 0, 0)


def exact(drive, rates=EQ, dt=DT):
    return MeasuredCovariances.exact(emitter_fluorescence_covariances(drive, rates, dt))


def test_thermal_roundtrip():
    rec = reconstruct_drive_covariance(exact(Thermal(1)), EQ, DT)
    np.testing.assert_allclose(rec.cov, 1.5 * np.eye(2), atol=1e-12)
    assert not rec.cov_xp_inconsistent


def test_zero_data_is_vacuum():
    rep = null_test(MeasuredCovariances.exact(ZERO), EQ, DT)
    np.testing.assert_allclose(rep.reconstructed_cov, 0.5 * np.eye(2), atol=1e-15)
    assert rep.purity == pytest.approx(1)
    assert rep.verdict == "consistent_with_coherent"
    np.testing.assert_array_equal(rep.z_scores, 0)


def test_degenerate_coupling():
    for theta in (0.0, math.pi, 2 * math.pi):
        with pytest.raises(DegenerateCoupling):
            reconstruct_drive_covariance(MeasuredCovariances.exact(ZERO), EQ, dt_of(EQ, theta))
    with pytest.raises(DegenerateCoupling):
        null_test(MeasuredCovariances.exact(ZERO), EQ, dt_of(EQ, math.pi))


def test_input_validation():
    with pytest.raises(InvalidInput):
        MeasuredCovariances(ZERO, [0.1, -0.1, 0.1, 0.1], 10)
    with pytest.raises(InvalidInput):
        MeasuredCovariances(ZERO, [0.1, np.nan, 0.1, 0.1], 10)
    with pytest.raises(InvalidInput):
        null_test(MeasuredCovariances.exact(ZERO), EQ, DT, z_threshold=0)


def test_exact_roundtrip_random():
    rng = np.random.default_rng(0)
    done = 0
    while done < 300:
        rates = Rates(*(10 ** rng.uniform(-2, 1, 2)))
        dt = dt_of(rates, rng.uniform(0, 4 * np.pi))
        v = gaussian_covariance(rng.uniform(0, 3), rng.uniform(0, 1.5), rng.uniform(-np.pi, np.pi))
        rec = reconstruct_drive_covariance(exact(GaussianMoments([0, 0], v), rates, dt), rates, dt) if _f_ok(rates, dt) else None
        if rec is None:
            continue
        np.testing.assert_allclose(rec.cov, v, atol=1e-10, rtol=0)
        done += 1


def _f_ok(rates, dt):
    from resfluor.dynamics import prefactor_F

    return abs(prefactor_F(rates, dt)) > 1e-6


def test_cov_xp_estimates_and_flag():
    v = gaussian_covariance(0.2, 0.4, 0.7)
    rec = reconstruct_drive_covariance(exact(GaussianMoments([0, 0], v)), EQ, DT)
    assert rec.cov_xp_estimates == pytest.approx((v[0, 1], v[0, 1]), abs=1e-12)
    assert not rec.cov_xp_inconsistent
    bad = QuadratureCovariances(0, 0.2, 0.0, 0)
    rec = reconstruct_drive_covariance(MeasuredCovariances(bad, [0.01] * 4, 1000), EQ, DT)
    assert rec.cov_xp_inconsistent
    # inverse-variance weighting favours the tighter estimate
    m = MeasuredCovariances(QuadratureCovariances(0, -0.1, 0.2, 0), [0.01, 0.1, 0.001, 0.01], 1000)
    rec = reconstruct_drive_covariance(m, EQ, DT)
    c1, c2 = rec.cov_xp_estimates
    assert abs(rec.cov[0, 1] - c1) < abs(rec.cov[0, 1] - c2)


def test_stderr_scales_inverse_with_F():
    m = MeasuredCovariances(QuadratureCovariances(0.01, 0.02, -0.01, 0.03), [0.01, 0.02, 0.03, 0.04], 100)
    a = reconstruct_from_prefactor(m, -0.3)
    b = reconstruct_from_prefactor(m, -0.6)
    np.testing.assert_array_equal(b.stderrs * 2, a.stderrs)
    r1 = null_test_from_prefactor(m, 0.4)
    r2 = null_test_from_prefactor(m, 0.8)
    np.testing.assert_array_equal(r2.cov_stderrs * 2, r1.cov_stderrs)


def test_z_scores():
    m = MeasuredCovariances(QuadratureCovariances(0.1, 0, -0.3, 0.2), [0.05, 0, 0.1, 0.1], 100)
    np.testing.assert_allclose(z_scores(m), [2, 0, -3, 2])


def test_threshold_monotonic():
    rng = np.random.default_rng(1)
    for _ in range(200):
        m = MeasuredCovariances(QuadratureCovariances(*rng.normal(0, 0.05, 4)), rng.uniform(0.005, 0.05, 4), 100)
        verdicts = [null_test(m, EQ, DT, z).verdict for z in (1, 2, 3, 5, 8, 13)]
        first = verdicts.index("consistent_with_coherent") if "consistent_with_coherent" in verdicts else len(verdicts)
        assert all(v == "consistent_with_coherent" for v in verdicts[first:])


def test_verdict_iff_all_z_below():
    rng = np.random.default_rng(2)
    for _ in range(200):
        m = MeasuredCovariances(QuadratureCovariances(*rng.normal(0, 0.05, 4)), rng.uniform(0.005, 0.05, 4), 100)
        rep = null_test(m, EQ, DT)
        assert (rep.verdict == "consistent_with_coherent") == bool(np.all(np.abs(rep.z_scores) < 5))


def test_analytic_verdicts():
    rep = null_test(exact(Thermal(1)), EQ, DT)
    assert rep.verdict == "classical_noncoherent"
    assert rep.purity == pytest.approx(1 / 3)
    rep = null_test(exact(SqueezedThermal(0, 0.5, 0)), EQ, DT)
    assert rep.verdict == "nonclassical"
    assert rep.reconstructed_cov[0, 0] == pytest.approx(math.exp(-1) / 2, abs=1e-10)


def rep_var_x(m):
    return reconstruct_drive_covariance(m, EQ, DT).cov[0, 0]


def test_lenient_purity_on_unphysical_estimate():
    # noise can push a reconstruction below the uncertainty bound; the report still renders
    m = MeasuredCovariances(QuadratureCovariances(-0.3, 0, 0, 0), [0.001] * 4, 100)
    assert rep_var_x(m) < 0
    rep = null_test(m, EQ, DT)
    assert math.isnan(rep.purity)
    assert rep.to_record()["verdict"] == rep.verdict == "nonclassical"


@pytest.mark.parametrize(
    "drive, verdict",
    [
        (Coherent(2 + 1j), "consistent_with_coherent"),
        (Thermal(1), "classical_noncoherent"),
        (SqueezedThermal(0, 0.5, 0), "nonclassical"),
    ],
)
def test_monte_carlo_verdicts(drive, verdict):
    rep = null_test(simulate(ExperimentPlan(drive, EQ, DT, 10**6)), EQ, DT)
    assert rep.verdict == verdict
    if isinstance(drive, SqueezedThermal):
        assert abs(rep.reconstructed_cov[0, 0] - 0.18394) < 3 * rep.cov_stderrs[0, 0]


def test_record_shape():
    rec = null_test(exact(Thermal(1)), EQ, DT).to_record()
    np.testing.assert_allclose(rec["reconstructed_cov"], [[1.5, 0], [0, 1.5]])
    assert len(rec["z_scores"]) == 4
    assert set(rec) >= {"verdict", "purity", "F_used", "cov_stderrs", "cov_xp_discrepancy"}
