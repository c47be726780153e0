"""Coupled random dynamical systems: kernels, synchronization, information.

The package builds two-point transition matrices for a weighted family of
deterministic maps driven by shared randomness, optionally with intrinsic
noise on one copy, and derives synchronization statistics from them:
desynchronization laws, expected resynchronization times, renewal-theory
rate predictions, and exact mutual information between the two paths.
Seeded Monte Carlo simulation and brute-force enumerations cross-check the
closed forms.
"""

from .errors import (
    ConfigError,
    ConvergenceError,
    InfiniteExpectedTimeError,
    InsufficientDataError,
    RdsyncError,
    ValidationError,
)
from .mutual_info import (
    MiOneStep,
    mi_brute_force,
    mi_one_step,
    mi_path,
    mi_path_averaged,
    mi_slope,
)
from .rds_model import (
    DeterministicMap,
    MapClassification,
    RdsSpec,
    RmsSpec,
    classify_maps,
    decompose_markov,
    enumerate_maps,
    mean_matrix,
    perturbed_matrix,
)
from .simulate import (
    PRNG_ID,
    CoupledTrajectory,
    CycleTimes,
    FrequencyCheckReport,
    SharedMapPaths,
    TauGeometricReport,
    empirical_sync_rate,
    extract_cycle_times,
    first_meeting_time,
    run_coupled,
    run_single_rds,
    substream,
    tau_geometric_check,
    transition_frequency_check,
)
from .stochastic_core import (
    GeneratorMatrix,
    ProbVector,
    StochMatrix,
    first_order_N,
    mat_exp,
    random_generator_matrix,
    stationary_distribution,
)
from .two_point import (
    KIND_RDS_RDS,
    KIND_RDS_RMS,
    CollapsedMatrix,
    ProductChainMatrix,
    ProductIndex,
    SyncRatePrediction,
    build_V,
    build_W,
    collapse,
    expected_resync_time,
    predicted_sync_rate,
    survival_brute_force,
    survival_probability,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "RdsyncError",
    "ValidationError",
    "ConvergenceError",
    "InfiniteExpectedTimeError",
    "InsufficientDataError",
    "ConfigError",
    # stochastic_core
    "StochMatrix",
    "GeneratorMatrix",
    "ProbVector",
    "mat_exp",
    "first_order_N",
    "stationary_distribution",
    "random_generator_matrix",
    # rds_model
    "DeterministicMap",
    "RdsSpec",
    "RmsSpec",
    "MapClassification",
    "mean_matrix",
    "decompose_markov",
    "perturbed_matrix",
    "enumerate_maps",
    "classify_maps",
    # two_point
    "ProductIndex",
    "ProductChainMatrix",
    "KIND_RDS_RDS",
    "KIND_RDS_RMS",
    "CollapsedMatrix",
    "SyncRatePrediction",
    "build_V",
    "build_W",
    "collapse",
    "expected_resync_time",
    "survival_probability",
    "predicted_sync_rate",
    "survival_brute_force",
    # simulate
    "PRNG_ID",
    "CoupledTrajectory",
    "CycleTimes",
    "TauGeometricReport",
    "FrequencyCheckReport",
    "SharedMapPaths",
    "substream",
    "run_coupled",
    "run_single_rds",
    "extract_cycle_times",
    "empirical_sync_rate",
    "tau_geometric_check",
    "transition_frequency_check",
    "first_meeting_time",
    # mutual_info
    "MiOneStep",
    "mi_one_step",
    "mi_path",
    "mi_path_averaged",
    "mi_slope",
    "mi_brute_force",
]
