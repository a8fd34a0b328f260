"""Kernel evaluation, Gram matrices, and input-dependent surrogate weights.

The surrogate learner is kernel ridge regression. Fitting stores an LU
factorization of the (optionally row-weighted) regularized Gram system so
the weight vector for any query input is a cheap triangular solve. Row
weighting implements via-point emphasis: the Gram rows and the query kernel
entries of emphasized points are both scaled by their weight, which makes
the system asymmetric, hence LU rather than Cholesky.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lapack, lu_factor, lu_solve

from .errors import ConditioningWarning, DimensionMismatchError, SingularSystemError

# Condition-number guard: above this we add diagonal jitter and warn.
# Duplicate inputs (common in concatenated via-point datasets) land here.
COND_LIMIT = 1e12
JITTER = 1e-10


def _gaussian(xa: np.ndarray, xb: np.ndarray, kappa: float) -> np.ndarray:
    """exp(-kappa * ||a - b||^2) for all row pairs of two (n, I) arrays."""
    sq = (
        np.sum(xa * xa, axis=1)[:, None]
        + np.sum(xb * xb, axis=1)[None, :]
        - 2.0 * xa @ xb.T
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-kappa * sq)


_KERNELS = {"gaussian": _gaussian}


def register_kernel(name: str, fn) -> None:
    """Register an additional kernel family.

    ``fn(xa, xb, kappa)`` must return the (n_a, n_b) matrix of kernel values
    between the rows of ``xa`` and ``xb``.
    """
    _KERNELS[name] = fn


@dataclass(frozen=True)
class KernelConfig:
    """Kernel family and ridge hyperparameters.

    Parameters
    ----------
    kappa : float
        Bandwidth applied to the squared Euclidean input distance.
    lam : float
        Ridge regularization scalar. The solve multiplies it by the
        effective point count (sum of row weights).
    kind : str
        Registered kernel family; only "gaussian" ships.
    """

    kappa: float = 6.0
    lam: float = 1e-5
    kind: str = "gaussian"

    def __post_init__(self):
        if not (np.isfinite(self.kappa) and self.kappa > 0):
            raise ValueError("kappa must be a positive finite scalar")
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise ValueError("lambda must be a positive finite scalar")
        if self.kind not in _KERNELS:
            raise ValueError(
                f"unknown kernel kind {self.kind!r}; registered: {sorted(_KERNELS)}"
            )

    def pairwise(self, xa: np.ndarray, xb: np.ndarray) -> np.ndarray:
        return _KERNELS[self.kind](xa, xb, self.kappa)


def kernel_eval(x, x2, config: KernelConfig) -> float:
    """Evaluate the kernel between two input vectors."""
    x = np.asarray(x, dtype=float).ravel()
    x2 = np.asarray(x2, dtype=float).ravel()
    if x.shape != x2.shape:
        raise DimensionMismatchError(
            f"input lengths differ: {x.shape[0]} vs {x2.shape[0]}"
        )
    return float(config.pairwise(x[None, :], x2[None, :])[0, 0])


def gram_matrix(inputs, config: KernelConfig) -> np.ndarray:
    """Kernel matrix K[i, j] = k(x_i, x_j) for a list of input vectors.

    The result is exactly symmetric with unit diagonal (zero self-distance).
    """
    X = _as_input_matrix(inputs)
    K = config.pairwise(X, X)
    # Mirror the upper triangle so K equals its transpose bit-for-bit.
    iu = np.triu_indices(K.shape[0], k=1)
    K[(iu[1], iu[0])] = K[iu]
    np.fill_diagonal(K, 1.0)
    return K


def _as_input_matrix(inputs) -> np.ndarray:
    X = np.asarray(inputs, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] == 0:
        raise DimensionMismatchError("inputs must be a nonempty list of vectors")
    if not np.all(np.isfinite(X)):
        raise ValueError("inputs contain non-finite values")
    return X


def regularized_factor(A: np.ndarray):
    """LU-factorize a regularized kernel system with a conditioning guard.

    Returns ``(lu_piv, rcond)``. If the estimated condition number exceeds
    COND_LIMIT, diagonal jitter is added once and a ConditioningWarning is
    emitted; a system that stays singular raises SingularSystemError.
    """
    anorm = np.linalg.norm(A, 1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # scipy warns on exact singularity
        lu_piv = lu_factor(A)
    rcond, _ = lapack.dgecon(lu_piv[0], anorm, norm="1")
    if not np.isfinite(rcond) or rcond < 1.0 / COND_LIMIT:
        cond = np.inf if rcond == 0 else 1.0 / rcond
        warnings.warn(
            f"kernel system condition estimate {cond:.3g} exceeds {COND_LIMIT:.0e}; "
            f"adding {JITTER:.0e} diagonal jitter",
            ConditioningWarning,
            stacklevel=3,
        )
        A = A + JITTER * np.eye(A.shape[0])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            lu_piv = lu_factor(A)
        rcond, _ = lapack.dgecon(lu_piv[0], np.linalg.norm(A, 1), norm="1")
        if not np.isfinite(rcond) or rcond == 0.0:
            raise SingularSystemError(
                f"kernel system singular after jitter (rcond={rcond:.3g})"
            )
    return lu_piv, float(rcond)


@dataclass(frozen=True, eq=False)
class SurrogateModel:
    """Fitted kernel state for input-dependent weight computation.

    Holds the training inputs, per-row weights (1 for demonstrated points,
    w_j > 1 for via-points), and the factorization of
    ``diag(w) K + N' lam I`` with ``N'`` the sum of the row weights.
    """

    inputs: np.ndarray
    row_weights: np.ndarray
    config: KernelConfig
    effective_count: float
    rcond: float
    _lu: tuple = field(repr=False)

    @property
    def n_points(self) -> int:
        return self.inputs.shape[0]

    @property
    def input_dim(self) -> int:
        return self.inputs.shape[1]


def fit(inputs, row_weights=None, config: KernelConfig = KernelConfig()) -> SurrogateModel:
    """Fit the surrogate system for later weight queries.

    Parameters
    ----------
    inputs : array_like, shape (N, I)
        Training input vectors.
    row_weights : array_like, shape (N,), optional
        Positive per-row weights; defaults to all ones.
    config : KernelConfig

    Returns
    -------
    SurrogateModel
    """
    X = _as_input_matrix(inputs)
    n = X.shape[0]
    if row_weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(row_weights, dtype=float).ravel()
    if w.shape[0] != n:
        raise DimensionMismatchError(
            f"{w.shape[0]} row weights for {n} inputs"
        )
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise ValueError("row weights must be positive and finite")

    K = gram_matrix(X, config)
    eff = float(w.sum())
    A = w[:, None] * K + eff * config.lam * np.eye(n)
    lu_piv, rcond = regularized_factor(A)
    return SurrogateModel(
        inputs=X,
        row_weights=w,
        config=config,
        effective_count=eff,
        rcond=rcond,
        _lu=lu_piv,
    )


def alpha_weights(model: SurrogateModel, x) -> np.ndarray:
    """Input-dependent weights alpha(x) solving (K' + N' lam I) alpha = k'_x.

    Both the Gram rows and the query kernel entries of weighted points are
    scaled by their row weight.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != model.input_dim:
        raise DimensionMismatchError(
            f"query has length {x.shape[0]}, model inputs have length {model.input_dim}"
        )
    kx = model.row_weights * model.config.pairwise(x[None, :], model.inputs)[0]
    return lu_solve(model._lu, kx)
