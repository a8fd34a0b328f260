"""Manifold-valued prediction: weighted Frechet means by Riemannian gradient
descent and tangent-space covariance prediction with parallel transport.

The descent minimizes F(mu) = sum_n alpha_n dist(anchor_n, mu)^2 by stepping
along the negative Riemannian gradient and retracting back to the manifold.
Sphere and cylinder queries run on the selected acceleration backend; other
manifolds (products) use a generic loop over the geometry primitives.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import _accel
from .data import ProbabilisticTrajectory
from .errors import (
    ConvergenceWarning,
    CutLocusError,
    DegenerateWeightsError,
    DimensionMismatchError,
    NotSPDError,
)
from .euclidean import Prediction, finalize_covariance
from .kernels import SurrogateModel, alpha_weights
from .manifolds import CircularCylinder, Manifold, Sphere


@dataclass(frozen=True)
class RgdConfig:
    """Riemannian gradient descent settings.

    eta: fixed step size (no line search).
    max_iter: iteration cap; hitting it flags the result non-converged.
    tol: stopping threshold on the Riemannian gradient norm.
    init: starting iterate, "max-alpha-anchor" (ties break to the lowest
    index) or "first-anchor".
    """

    eta: float = 0.01
    max_iter: int = 1000
    tol: float = 1e-9
    init: str = "max-alpha-anchor"

    def __post_init__(self):
        if not (self.eta > 0):
            raise ValueError("eta must be positive")
        if not (self.tol > 0):
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.init not in ("max-alpha-anchor", "first-anchor"):
            raise ValueError(f"unknown init strategy {self.init!r}")


@dataclass(frozen=True)
class DescentInfo:
    """Outcome of one descent run."""

    converged: bool
    iterations: int
    grad_norm: float
    objective_trace: np.ndarray


def _generic_descent(spec: Manifold, anchors, alpha, mu0, cfg: RgdConfig):
    """Reference loop over the geometry primitives; matches backend semantics."""
    mu = np.array(mu0, dtype=float)
    f_hist = np.empty(cfg.max_iter + 1)
    it = 0
    while True:
        g = spec.grad_weighted_dist2(alpha, anchors, mu)
        f_hist[it] = spec.objective_weighted_dist2(alpha, anchors, mu)
        gn = float(np.linalg.norm(g))
        if gn <= cfg.tol:
            return mu, it, gn, 0, -1, f_hist[: it + 1].copy()
        if it >= cfg.max_iter:
            return mu, it, gn, 1, -1, f_hist[: it + 1].copy()
        mu = spec.retract(mu, -cfg.eta * g)
        it += 1


def _run_descent(spec: Manifold, anchors, alpha, mu0, cfg: RgdConfig):
    if isinstance(spec, Sphere):
        return _accel.sphere_descent(
            anchors, alpha, mu0, spec.radius, cfg.eta, cfg.max_iter, cfg.tol
        )
    if isinstance(spec, CircularCylinder):
        return _accel.cylinder_descent(
            anchors, alpha, mu0, cfg.eta, cfg.max_iter, cfg.tol
        )
    return _generic_descent(spec, anchors, alpha, mu0, cfg)


def frechet_predict_mean(
    spec: Manifold,
    alpha,
    anchors,
    cfg: RgdConfig = RgdConfig(),
    full_output: bool = False,
):
    """Minimize the alpha-weighted squared geodesic distance to the anchors.

    Parameters
    ----------
    spec : Manifold
    alpha : array_like, shape (N,)
        Combination weights; not required to be positive, but not all ~0.
    anchors : array_like, shape (N, ambient_dim)
        Manifold points.
    cfg : RgdConfig
    full_output : bool
        When True, also return a DescentInfo with the iteration count,
        final gradient norm, and objective trace.

    Returns
    -------
    mu : ndarray
        The computed mean. A ConvergenceWarning is emitted if the gradient
        tolerance was not reached within ``cfg.max_iter`` steps.
    """
    alpha = np.asarray(alpha, dtype=float).ravel()
    A = np.atleast_2d(np.asarray(anchors, dtype=float))
    if A.shape[0] != alpha.shape[0]:
        raise DimensionMismatchError(
            f"{alpha.shape[0]} weights for {A.shape[0]} anchors"
        )
    if np.max(np.abs(alpha)) <= 1e-12:
        raise DegenerateWeightsError("all weights are numerically zero")
    for i in range(A.shape[0]):
        spec.check_point(A[i], f"anchor {i}")

    idx = 0 if cfg.init == "first-anchor" else int(np.argmax(alpha))
    mu0 = A[idx]
    mu, iters, gn, status, bad, f_hist = _run_descent(spec, A, alpha, mu0, cfg)
    if status == 2:
        raise CutLocusError(
            f"anchor {bad} became antipodal to the iterate during descent"
        )
    converged = status == 0
    if not converged:
        warnings.warn(
            f"Frechet mean did not reach tol={cfg.tol:g} within "
            f"{cfg.max_iter} iterations (grad norm {gn:.3g})",
            ConvergenceWarning,
            stacklevel=2,
        )
    if full_output:
        return mu, DescentInfo(
            converged=converged,
            iterations=iters,
            grad_norm=gn,
            objective_trace=f_hist,
        )
    return mu


def transported_covariance(spec: Manifold, sigma_n, mu_n, mu) -> np.ndarray:
    """Carry a tangent covariance from mu_n to mu by parallel transport.

    The covariance is eigendecomposed into scaled eigenvectors, each is
    transported along the geodesic, and the outer products are re-summed in
    the tangent basis at the destination. Transport is an isometry, so the
    eigenvalue spectrum is preserved.
    """
    sigma_n = np.asarray(sigma_n, dtype=float)
    p = spec.check_point(mu_n, "mu_n")
    q = spec.check_point(mu, "mu")
    d = spec.intrinsic_dim
    if sigma_n.shape != (d, d):
        raise DimensionMismatchError(f"sigma must be {d}x{d} for this manifold")
    vals, vecs = np.linalg.eigh(0.5 * (sigma_n + sigma_n.T))
    if vals[0] < -1e-10 * max(vals[-1], 1.0):
        raise NotSPDError(f"covariance has negative eigenvalue {vals[0]:.3g}")
    vals = np.maximum(vals, 0.0)
    basis_src = spec.tangent_basis(p)
    basis_dst = spec.tangent_basis(q)
    out = np.zeros((d, d))
    for j in range(d):
        ambient = basis_src.T @ (np.sqrt(vals[j]) * vecs[:, j])
        moved = spec.parallel_transport(p, q, ambient)
        coords = basis_dst @ moved
        out += np.outer(coords, coords)
    return 0.5 * (out + out.T)


def predict_manifold(
    model: SurrogateModel,
    data: ProbabilisticTrajectory,
    x,
    cfg: RgdConfig = RgdConfig(),
    variant: str = "approx",
) -> Prediction:
    """Predict a manifold mean and tangent covariance at query x.

    variant "approx" averages the transported training covariances;
    "exact" additionally includes the outer products of the log-mapped
    mean offsets, mirroring the Euclidean KL covariance.
    """
    if data.manifold is None:
        raise ValueError("trajectory is not manifold-valued; use predict")
    if variant not in ("exact", "approx"):
        raise ValueError(f"unknown covariance variant {variant!r}")
    if len(data) != model.n_points:
        raise DimensionMismatchError(
            f"model fitted on {model.n_points} points but trajectory has {len(data)}"
        )
    spec = data.manifold
    alpha = alpha_weights(model, x)
    mu, info = frechet_predict_mean(
        spec, alpha, data.means, cfg, full_output=True
    )
    s = float(np.sum(alpha))
    if abs(s) <= 1e-12:
        raise DegenerateWeightsError("weights sum to ~0; covariance undefined")

    d = spec.intrinsic_dim
    basis_mu = spec.tangent_basis(mu)
    sigma = np.zeros((d, d))
    for n in range(len(data)):
        moved = transported_covariance(spec, data.covariances[n], data.means[n], mu)
        term = moved
        if variant == "exact":
            log_coords = basis_mu @ spec.log_map(mu, data.means[n])
            term = term + np.outer(log_coords, log_coords)
        sigma += alpha[n] * term
    sigma /= s
    sigma, clamped = finalize_covariance(sigma, alpha)
    return Prediction(mu=mu, sigma=sigma, clamped=clamped, converged=info.converged)
