"""Closed-form Gaussian prediction under the KL and reverse-KL imitation modes.

Both modes minimize a weighted sum of per-sample divergence terms. The KL
mean is the weight-normalized average of training means; the reverse-KL mean
additionally weighs samples by their precision, so low-variance samples pull
harder. Covariances follow the matching stationarity conditions, with an
optional approximate KL variant that drops the mean-offset outer products.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .data import GRID_TOL, ProbabilisticTrajectory, SuperpositionSet
from .errors import (
    DegenerateWeightsError,
    DimensionMismatchError,
    NegativeWeightsWarning,
    SingularSystemError,
)
from .kernels import SurrogateModel, alpha_weights

WEIGHT_SUM_TOL = 1e-12
PRECISION_TOL = 1e-12


@dataclass(frozen=True)
class ImitationMode:
    """Divergence choice and KL covariance variant.

    divergence: "kl" or "rkl".
    kl_cov_variant: "exact" keeps the mean-offset outer products in the KL
    covariance; "approximate" drops them so covariance prediction is
    decoupled from mean error.
    """

    divergence: str = "kl"
    kl_cov_variant: str = "exact"

    def __post_init__(self):
        if self.divergence not in ("kl", "rkl"):
            raise ValueError(f"divergence must be 'kl' or 'rkl', got {self.divergence!r}")
        if self.kl_cov_variant not in ("exact", "approximate"):
            raise ValueError(
                f"kl_cov_variant must be 'exact' or 'approximate', "
                f"got {self.kl_cov_variant!r}"
            )


@dataclass(frozen=True, eq=False)
class Prediction:
    """Predicted Gaussian: mean vector (or manifold point) plus covariance.

    ``clamped`` is set when negative surrogate weights forced an eigenvalue
    clamp; ``converged`` is set by iterative (manifold) mean prediction.
    """

    mu: np.ndarray
    sigma: np.ndarray
    clamped: bool = False
    converged: bool = True


def _weight_sum(alpha: np.ndarray) -> float:
    s = float(np.sum(alpha))
    if abs(s) <= WEIGHT_SUM_TOL:
        raise DegenerateWeightsError(
            f"weights sum to {s:.3g}; prediction is undefined"
        )
    return s


def predict_mean_kl(alpha, means) -> np.ndarray:
    """KL-mode mean: weighted average of training means."""
    alpha = np.asarray(alpha, dtype=float).ravel()
    means = np.atleast_2d(np.asarray(means, dtype=float))
    return alpha @ means / _weight_sum(alpha)


def predict_cov_kl(alpha, means, covs, predicted_mu, variant="exact") -> np.ndarray:
    """KL-mode covariance; the exact variant needs the already-predicted mean."""
    alpha = np.asarray(alpha, dtype=float).ravel()
    covs = np.asarray(covs, dtype=float)
    s = _weight_sum(alpha)
    sigma = np.einsum("n,nij->ij", alpha, covs)
    if variant == "exact":
        offsets = np.asarray(predicted_mu, dtype=float)[None, :] - np.atleast_2d(
            np.asarray(means, dtype=float)
        )
        sigma = sigma + np.einsum("n,ni,nj->ij", alpha, offsets, offsets)
    elif variant != "approximate":
        raise ValueError(f"unknown covariance variant {variant!r}")
    return sigma / s


def _precision_sum(alpha: np.ndarray, covs: np.ndarray):
    """sum_n alpha_n inv(Sigma_n) and sum_n alpha_n inv(Sigma_n) mu-free RHS parts."""
    precs = np.linalg.inv(covs)
    return np.einsum("n,nij->ij", alpha, precs), precs


def predict_mean_rkl(alpha, means, covs) -> np.ndarray:
    """Reverse-KL mean: precision-weighted average of training means."""
    alpha = np.asarray(alpha, dtype=float).ravel()
    means = np.atleast_2d(np.asarray(means, dtype=float))
    covs = np.asarray(covs, dtype=float)
    psum, precs = _precision_sum(alpha, covs)
    if np.linalg.svd(psum, compute_uv=False)[-1] <= PRECISION_TOL:
        raise SingularSystemError("weighted precision sum is singular")
    rhs = np.einsum("n,nij,nj->i", alpha, precs, means)
    return np.linalg.solve(psum, rhs)


def predict_cov_rkl(alpha, covs) -> np.ndarray:
    """Reverse-KL covariance: harmonic (precision) average of training covs."""
    alpha = np.asarray(alpha, dtype=float).ravel()
    covs = np.asarray(covs, dtype=float)
    s = _weight_sum(alpha)
    psum, _ = _precision_sum(alpha, covs)
    if np.linalg.svd(psum, compute_uv=False)[-1] <= PRECISION_TOL:
        raise SingularSystemError("weighted precision sum is singular")
    return np.linalg.inv(psum / s)


def finalize_covariance(sigma: np.ndarray, alpha: np.ndarray):
    """Symmetrize, and clamp negative eigenvalues when any weight is negative.

    Returns (sigma, clamped).
    """
    sigma = 0.5 * (sigma + sigma.T)
    if np.any(np.asarray(alpha) < 0):
        vals, vecs = np.linalg.eigh(sigma)
        if vals[0] < 0:
            warnings.warn(
                "negative surrogate weights produced an indefinite covariance; "
                "clamping negative eigenvalues at 0",
                NegativeWeightsWarning,
                stacklevel=3,
            )
            sigma = (vecs * np.maximum(vals, 0.0)) @ vecs.T
            sigma = 0.5 * (sigma + sigma.T)
            return sigma, True
    return sigma, False


def _mode_prediction(alpha, means, covs, mode: ImitationMode) -> Prediction:
    if mode.divergence == "kl":
        mu = predict_mean_kl(alpha, means)
        sigma = predict_cov_kl(alpha, means, covs, mu, mode.kl_cov_variant)
    else:
        mu = predict_mean_rkl(alpha, means, covs)
        sigma = predict_cov_rkl(alpha, covs)
    sigma, clamped = finalize_covariance(sigma, alpha)
    return Prediction(mu=mu, sigma=sigma, clamped=clamped)


def predict(
    model: SurrogateModel,
    data: ProbabilisticTrajectory,
    mode: ImitationMode,
    x,
) -> Prediction:
    """Predict the output Gaussian at query x for a Euclidean trajectory."""
    if data.manifold is not None:
        raise ValueError("trajectory is manifold-valued; use predict_manifold")
    if len(data) != model.n_points:
        raise DimensionMismatchError(
            f"model fitted on {model.n_points} points but trajectory has {len(data)}"
        )
    alpha = alpha_weights(model, x)
    return _mode_prediction(alpha, data.means, data.covariances, mode)


def superpose_predict(
    model: SurrogateModel,
    sets: SuperpositionSet,
    mode: ImitationMode,
    x,
) -> Prediction:
    """Predict from H prioritized trajectories sharing the model's input grid.

    The stationary point of the doubly weighted objective is the
    single-trajectory formula applied to the flattened (n, h) sample set
    with weights alpha_n * w_h.
    """
    grid = sets.trajectories[0].inputs
    if grid.shape != model.inputs.shape or np.max(np.abs(grid - model.inputs)) > GRID_TOL:
        raise DimensionMismatchError(
            "superposition grid does not match the fitted model inputs"
        )
    alpha = alpha_weights(model, x)
    pair_w = np.outer(alpha, sets.priorities).ravel()  # (N*H,)
    means = np.stack([t.means for t in sets.trajectories], axis=1).reshape(
        -1, sets.trajectories[0].output_dim
    )
    covs = np.stack([t.covariances for t in sets.trajectories], axis=1)
    covs = covs.reshape(-1, covs.shape[2], covs.shape[3])
    return _mode_prediction(pair_w, means, covs, mode)
