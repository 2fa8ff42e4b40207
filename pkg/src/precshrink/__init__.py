"""Optimal linear shrinkage estimation of large-dimensional precision matrices."""

from .asymptotics import (
    LimitFunctionals,
    compute_limit_functionals,
    dual_inverse_frobenius_limit,
    dual_inverse_trace_limit,
    inverse_frobenius_limit,
    limit_weights_gt1,
    limit_weights_lt1,
    rank_one_dual_trace_limit,
    weighted_dual_trace_limit,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateTargetError,
    NearSingularRegimeError,
    NumericError,
    RegimeError,
    SingularMatrixError,
    UndefinedPrialError,
)
from .estimators import (
    CovarianceEstimate,
    PrecisionEstimate,
    ShrinkageWeights,
    TargetMatrix,
    bona_fide_olse,
    estimate_isotropic_precision,
    olse_covariance,
    oracle_equivariant,
    oracle_olse_gt1,
    oracle_olse_lt1,
    precision_frobenius_estimate,
    trace_precision_estimate,
)
from .linalg import (
    DataMatrix,
    SampleStats,
    matrix_norms,
    pseudo_inverse,
    sample_covariance,
)
from .metrics import PrialReport, frobenius_loss, prial
from .simulation import (
    DistributionSpec,
    ExperimentConfig,
    ReplicationResult,
    TargetSpec,
    builtin_experiments,
    generate_data,
    replication_rng,
    run_experiment,
    run_grid_point,
)
from .spectral import CovarianceModel, SpectrumSpec, build_covariance, spectral_moments

__version__ = "0.1.0"

__all__ = [
    "CovarianceEstimate",
    "CovarianceModel",
    "ConfigError",
    "ConvergenceError",
    "DataMatrix",
    "DegenerateTargetError",
    "DistributionSpec",
    "ExperimentConfig",
    "LimitFunctionals",
    "NearSingularRegimeError",
    "NumericError",
    "PrecisionEstimate",
    "PrialReport",
    "RegimeError",
    "ReplicationResult",
    "SampleStats",
    "ShrinkageWeights",
    "SingularMatrixError",
    "SpectrumSpec",
    "TargetMatrix",
    "TargetSpec",
    "UndefinedPrialError",
    "bona_fide_olse",
    "build_covariance",
    "builtin_experiments",
    "compute_limit_functionals",
    "dual_inverse_frobenius_limit",
    "dual_inverse_trace_limit",
    "estimate_isotropic_precision",
    "frobenius_loss",
    "generate_data",
    "inverse_frobenius_limit",
    "limit_weights_gt1",
    "limit_weights_lt1",
    "matrix_norms",
    "olse_covariance",
    "oracle_equivariant",
    "oracle_olse_gt1",
    "oracle_olse_lt1",
    "precision_frobenius_estimate",
    "prial",
    "pseudo_inverse",
    "rank_one_dual_trace_limit",
    "replication_rng",
    "run_experiment",
    "run_grid_point",
    "sample_covariance",
    "spectral_moments",
    "trace_precision_estimate",
    "weighted_dual_trace_limit",
]
