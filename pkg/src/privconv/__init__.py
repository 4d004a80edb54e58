"""Differentially private circular convolution.

Releases y = h * x for a public filter h and a private input x under
(epsilon, delta)-differential privacy, adding per-coefficient Laplace
noise in the basis that diagonalizes the convolution (DFT on Z/NZ, WHT
on the boolean cube).  Ships the closed-form optimal noise plan, a
magnitude-partitioned variant, three perturbation baselines, computable
spectral lower bounds, generalized marginal queries, and a Monte Carlo
harness that verifies every closed-form MSE.
"""

from .bounds import (
    CompressibilityReport,
    HarmonicBoundReport,
    SpectralProfile,
    compressibility_bounds,
    harmonic_bound_check,
    optimality_ratio,
    spec_lb,
    theoretical_mse,
)
from .harness import (
    CSV_COLUMNS,
    ExperimentConfig,
    MseEstimate,
    RunningSumResult,
    compressible_cube_filter,
    compressible_filter,
    constant_filter,
    estimate_mse,
    impulse_filter,
    make_filter,
    mechanism_comparison,
    random_sign_filter,
    rows_to_json,
    running_sum_experiment,
    running_sum_filter,
    write_rows_csv,
)
from .marginals import (
    CubeHistogram,
    WDnf,
    marginal_query,
    private_marginals,
    spectral_tail,
    wdnf_to_sequence,
)
from .mechanisms import (
    MECHANISM_NAMES,
    KktReport,
    MechanismResult,
    NoisePlan,
    PrivacyParams,
    baseline_input_perturb,
    baseline_output_perturb_freq,
    baseline_output_perturb_time,
    fourier_mechanism,
    kkt_optimality_check,
    mechanism_theoretical_mse,
    optimal_noise_plan,
    sample_outputs,
    spectral_partition,
)
from .noise import LaplaceScale, Seed, laplace_sample, laplace_vector, uniform_vector
from .transforms import (
    BooleanCube,
    Cyclic,
    RealSequence,
    Spectrum,
    convolve_direct,
    convolve_fast,
    dft,
    idft,
    iwht,
    wht,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BooleanCube",
    "Cyclic",
    "RealSequence",
    "Spectrum",
    "dft",
    "idft",
    "wht",
    "iwht",
    "convolve_fast",
    "convolve_direct",
    "Seed",
    "LaplaceScale",
    "laplace_sample",
    "laplace_vector",
    "uniform_vector",
    "PrivacyParams",
    "NoisePlan",
    "MechanismResult",
    "KktReport",
    "MECHANISM_NAMES",
    "optimal_noise_plan",
    "fourier_mechanism",
    "spectral_partition",
    "baseline_input_perturb",
    "baseline_output_perturb_time",
    "baseline_output_perturb_freq",
    "kkt_optimality_check",
    "sample_outputs",
    "mechanism_theoretical_mse",
    "SpectralProfile",
    "HarmonicBoundReport",
    "CompressibilityReport",
    "spec_lb",
    "harmonic_bound_check",
    "optimality_ratio",
    "compressibility_bounds",
    "theoretical_mse",
    "WDnf",
    "CubeHistogram",
    "wdnf_to_sequence",
    "marginal_query",
    "private_marginals",
    "spectral_tail",
    "ExperimentConfig",
    "MseEstimate",
    "RunningSumResult",
    "CSV_COLUMNS",
    "impulse_filter",
    "constant_filter",
    "running_sum_filter",
    "compressible_filter",
    "compressible_cube_filter",
    "random_sign_filter",
    "make_filter",
    "estimate_mse",
    "running_sum_experiment",
    "mechanism_comparison",
    "write_rows_csv",
    "rows_to_json",
]
