"""Imitation-fidelity metrics: cumulative mean RMSE and SPD-geodesic error."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, NotSPDError

EIG_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class EvalReport:
    """Evaluation summary: cumulative errors plus per-point breakdown."""

    c_m: float
    c_cov: float
    per_point_errors: np.ndarray  # (N, 2): mean error, covariance error
    wall_time: float

    def to_dict(self) -> dict:
        return {
            "c_m": self.c_m,
            "c_cov": self.c_cov,
            "per_point_errors": self.per_point_errors.tolist(),
            "wall_time": self.wall_time,
        }


def _paired(predicted, reference, name):
    a = np.asarray(predicted, dtype=float)
    b = np.asarray(reference, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatchError(
            f"{name}: predicted shape {a.shape} vs reference shape {b.shape}"
        )
    return a, b


def per_point_mean_errors(predicted_means, reference_means) -> np.ndarray:
    a, b = _paired(predicted_means, reference_means, "means")
    if a.ndim == 1:
        a, b = a[:, None], b[:, None]
    return np.linalg.norm(a - b, axis=1)


def mean_error(predicted_means, reference_means) -> float:
    """Cumulative RMSE sqrt(sum_n ||s_m(x_n) - mu_n||^2), no 1/N."""
    return float(np.sqrt(np.sum(per_point_mean_errors(predicted_means, reference_means) ** 2)))


def _spd_inv_sqrt(S: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(0.5 * (S + S.T))
    if vals[0] < EIG_FLOOR:
        raise NotSPDError(
            f"covariance eigenvalue {vals[0]:.3g} is below the {EIG_FLOOR:g} floor"
        )
    return (vecs / np.sqrt(vals)) @ vecs.T


def _log_frobenius(M: np.ndarray) -> float:
    vals = np.linalg.eigvalsh(0.5 * (M + M.T))
    if vals[0] < EIG_FLOOR:
        raise NotSPDError(
            f"whitened covariance eigenvalue {vals[0]:.3g} is below the floor"
        )
    return float(np.sqrt(np.sum(np.log(vals) ** 2)))


def per_point_cov_errors(predicted_covs, reference_covs) -> np.ndarray:
    a, b = _paired(predicted_covs, reference_covs, "covariances")
    out = np.empty(a.shape[0])
    for n in range(a.shape[0]):
        w = _spd_inv_sqrt(b[n])
        out[n] = _log_frobenius(w @ a[n] @ w)
    return out


def cov_error(predicted_covs, reference_covs) -> float:
    """Cumulative affine-invariant distance between covariance sequences.

    Per point: Frobenius norm of the principal matrix log of
    ref^{-1/2} pred ref^{-1/2}, computed by symmetric eigendecomposition.
    """
    return float(np.sqrt(np.sum(per_point_cov_errors(predicted_covs, reference_covs) ** 2)))


def evaluate(
    predicted_means,
    predicted_covs,
    reference_means,
    reference_covs,
    wall_time: float = 0.0,
) -> EvalReport:
    em = per_point_mean_errors(predicted_means, reference_means)
    ec = per_point_cov_errors(predicted_covs, reference_covs)
    return EvalReport(
        c_m=float(np.sqrt(np.sum(em**2))),
        c_cov=float(np.sqrt(np.sum(ec**2))),
        per_point_errors=np.column_stack([em, ec]),
        wall_time=wall_time,
    )
