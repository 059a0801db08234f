"""Driven quantum harmonic emitter with resonance fluorescence.

Closed-form three-mode dynamics, joint emitter/fluorescence measurement
statistics, drive-covariance reconstruction and classicality null tests,
with a truncated Fock-space oracle and a Monte Carlo shot simulator.
"""

from .dynamics import (
    JointGaussianState,
    ModeTransform,
    Rates,
    SymplecticTransform,
    TransferAmplitudes,
    dt_of,
    evolve_gaussian,
    hadamard_partial_sums,
    mode_transform,
    normal_mode_basis,
    prefactor_F,
    short_time_prefactor,
    symplectic_transform,
    theta_of,
    transfer_amplitudes,
)
from .measurement import (
    ALL_CONFIGS,
    CountingStats,
    QuadConfig,
    QuadratureCovariances,
    counting_stats,
    emitter_fluorescence_covariances,
    fluorescence_count_pmf,
    g2_and_q,
    joint_quadrature_pdf,
)
from .nulltest import MeasuredCovariances, NullTestReport, null_test, reconstruct_drive_covariance
from .sampler import ExperimentPlan, SampleSet, classical_mixture_check, estimate_covariances, sample_shots
from .states import (
    Coherent,
    GaussianMoments,
    PMoments,
    SqueezedThermal,
    Thermal,
    classicality_indicators,
    drive_moments,
    gaussian_covariance,
    p_moments_from_cov,
    purity,
)

__version__ = "0.1.0"
