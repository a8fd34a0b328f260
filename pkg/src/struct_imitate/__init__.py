"""Probabilistic trajectory imitation as kernel structured prediction.

Workflow: aggregate demonstrations into a probabilistic trajectory, fit a
kernel surrogate on its inputs, then decode predictions under a chosen
divergence mode. Via-points, superposition, phase modulation, joint
position/velocity learning, and Riemannian (sphere/cylinder/product)
outputs build on the same surrogate weights.
"""

from ._accel import BACKEND as ACCEL_BACKEND
from .data import (
    GaussianPoint,
    ProbabilisticTrajectory,
    SuperpositionSet,
    ViaPointSet,
    ingest_demonstrations,
    load_superposition,
    load_trajectory,
    load_via_set,
    merge_via_points,
    save_superposition,
    save_trajectory,
    save_via_set,
)
from .euclidean import (
    ImitationMode,
    Prediction,
    predict,
    predict_cov_kl,
    predict_cov_rkl,
    predict_mean_kl,
    predict_mean_rkl,
    superpose_predict,
)
from .kernels import (
    KernelConfig,
    SurrogateModel,
    alpha_weights,
    fit,
    gram_matrix,
    kernel_eval,
    register_kernel,
)
from .manifolds import (
    Circle,
    CircularCylinder,
    Euclidean,
    Manifold,
    ProductManifold,
    Sphere,
    manifold_from_dict,
)
from .metrics import EvalReport, cov_error, evaluate, mean_error
from .riemannian import (
    RgdConfig,
    frechet_predict_mean,
    predict_manifold,
    transported_covariance,
)
from .temporal import (
    TemporalModel,
    adapt_temporal,
    build_temporal_gram,
    fit_temporal,
    kp_kv,
    phase_map,
    predict_pos_vel,
)

__version__ = "0.1.0"

__all__ = [
    "ACCEL_BACKEND",
    "Circle",
    "CircularCylinder",
    "Euclidean",
    "EvalReport",
    "GaussianPoint",
    "ImitationMode",
    "KernelConfig",
    "Manifold",
    "Prediction",
    "ProbabilisticTrajectory",
    "ProductManifold",
    "RgdConfig",
    "Sphere",
    "SuperpositionSet",
    "SurrogateModel",
    "TemporalModel",
    "ViaPointSet",
    "adapt_temporal",
    "alpha_weights",
    "build_temporal_gram",
    "cov_error",
    "evaluate",
    "fit",
    "fit_temporal",
    "frechet_predict_mean",
    "gram_matrix",
    "ingest_demonstrations",
    "kernel_eval",
    "kp_kv",
    "load_superposition",
    "load_trajectory",
    "load_via_set",
    "manifold_from_dict",
    "mean_error",
    "merge_via_points",
    "phase_map",
    "predict",
    "predict_cov_kl",
    "predict_cov_rkl",
    "predict_manifold",
    "predict_mean_kl",
    "predict_mean_rkl",
    "predict_pos_vel",
    "register_kernel",
    "save_superposition",
    "save_trajectory",
    "save_via_set",
    "superpose_predict",
    "transported_covariance",
]
