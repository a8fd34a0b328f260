"""Dataset model: probabilistic trajectories, via-points, superpositions, JSON IO.

A probabilistic trajectory is an ordered list of Gaussian samples
(x_n, mu_n, Sigma_n). Raw demonstrations are aggregated per index into
empirical means and covariances; manifold-valued demonstrations use the
per-index Frechet mean and tangent-space statistics instead.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DimensionMismatchError, SchemaError
from .manifolds import Manifold, manifold_from_dict

GRID_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class GaussianPoint:
    """One trajectory sample: input x, output mean mu, covariance sigma.

    For manifold-valued data, mu holds ambient coordinates and sigma is the
    covariance in the tangent basis at mu (intrinsic dimension).
    """

    x: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).ravel())
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=float).ravel())
        object.__setattr__(self, "sigma", np.asarray(self.sigma, dtype=float))
        if self.sigma.ndim != 2 or self.sigma.shape[0] != self.sigma.shape[1]:
            raise DimensionMismatchError("sigma must be a square matrix")
        norm = np.linalg.norm(self.sigma)
        if np.linalg.norm(self.sigma - self.sigma.T) > 1e-12 * max(norm, 1e-300):
            raise ValueError("sigma is not symmetric within tolerance")


@dataclass(frozen=True, eq=False)
class ProbabilisticTrajectory:
    """Ordered Gaussian samples sharing input/output dimensionalities."""

    points: tuple
    manifold: Manifold | None = None

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if not self.points:
            raise ValueError("trajectory must contain at least one point")
        p0 = self.points[0]
        for i, p in enumerate(self.points):
            if p.x.shape != p0.x.shape or p.mu.shape != p0.mu.shape:
                raise DimensionMismatchError(
                    f"point {i} has inconsistent input/output dimensions"
                )
            if p.sigma.shape != p0.sigma.shape:
                raise DimensionMismatchError(f"point {i} has inconsistent sigma shape")
        if self.manifold is not None:
            if p0.mu.shape[0] != self.manifold.ambient_dim:
                raise DimensionMismatchError(
                    "mean length does not match the manifold ambient dimension"
                )
            if p0.sigma.shape[0] != self.manifold.intrinsic_dim:
                raise DimensionMismatchError(
                    "sigma size does not match the manifold intrinsic dimension"
                )
            for i, p in enumerate(self.points):
                if not self.manifold.contains(p.mu):
                    raise ValueError(f"point {i} mean is not on the manifold")

    def __len__(self):
        return len(self.points)

    @classmethod
    def from_arrays(cls, inputs, means, covariances, manifold=None):
        inputs = _as_sample_matrix(inputs)
        means = _as_sample_matrix(means)
        covariances = np.asarray(covariances, dtype=float)
        pts = [
            GaussianPoint(inputs[i], means[i], covariances[i])
            for i in range(inputs.shape[0])
        ]
        return cls(points=tuple(pts), manifold=manifold)

    @cached_property
    def inputs(self) -> np.ndarray:
        return np.array([p.x for p in self.points])

    @cached_property
    def means(self) -> np.ndarray:
        return np.array([p.mu for p in self.points])

    @cached_property
    def covariances(self) -> np.ndarray:
        return np.array([p.sigma for p in self.points])

    @property
    def input_dim(self) -> int:
        return self.points[0].x.shape[0]

    @property
    def output_dim(self) -> int:
        return self.points[0].mu.shape[0]


@dataclass(frozen=True, eq=False)
class ViaPointSet:
    """Desired points with emphasis weights w_j > 1 (repetition counts)."""

    points: tuple
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        object.__setattr__(
            self, "weights", np.asarray(self.weights, dtype=float).ravel()
        )
        if len(self.points) != self.weights.shape[0]:
            raise DimensionMismatchError(
                f"{len(self.points)} via points but {self.weights.shape[0]} weights"
            )
        if len(self.points) and not np.all(self.weights > 1.0):
            raise ValueError("via-point weights must all exceed 1")

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True, eq=False)
class SuperpositionSet:
    """H trajectories on a shared input grid with normalized priorities."""

    trajectories: tuple
    priorities: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "trajectories", tuple(self.trajectories))
        object.__setattr__(
            self, "priorities", np.asarray(self.priorities, dtype=float).ravel()
        )
        if not self.trajectories:
            raise ValueError("superposition needs at least one trajectory")
        if len(self.trajectories) != self.priorities.shape[0]:
            raise DimensionMismatchError(
                f"{len(self.trajectories)} trajectories but "
                f"{self.priorities.shape[0]} priorities"
            )
        if np.any(self.priorities < 0):
            raise ValueError("priorities must be nonnegative")
        if abs(self.priorities.sum() - 1.0) > 1e-9:
            raise ValueError("priorities must sum to 1 within 1e-9")
        grid = self.trajectories[0].inputs
        for h, t in enumerate(self.trajectories[1:], start=1):
            if t.inputs.shape != grid.shape or np.max(np.abs(t.inputs - grid)) > GRID_TOL:
                raise DimensionMismatchError(
                    f"trajectory {h} input grid differs from trajectory 0"
                )
            if t.output_dim != self.trajectories[0].output_dim:
                raise DimensionMismatchError(
                    f"trajectory {h} output dimension differs from trajectory 0"
                )


def _as_sample_matrix(a) -> np.ndarray:
    """(N,) or (N, k) array of per-index samples, always returned as (N, k)."""
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    return a


def _normalize_demo(demo, idx):
    """Accept a demo as (X, Y) arrays or a sequence of (x, y) pairs."""
    if isinstance(demo, tuple) and len(demo) == 2:
        X, Y = demo
    else:
        X = [p[0] for p in demo]
        Y = [p[1] for p in demo]
    X = _as_sample_matrix(X)
    Y = _as_sample_matrix(Y)
    if X.shape[0] != Y.shape[0]:
        raise DimensionMismatchError(
            f"demo {idx}: {X.shape[0]} inputs but {Y.shape[0]} outputs"
        )
    return X, Y


def _output_scale(values: np.ndarray) -> float:
    """Mean per-dimension range; the default jitter scale."""
    scale = float(np.mean(values.max(axis=0) - values.min(axis=0)))
    return scale if scale > 0 else 1.0


def _frechet_point_mean(manifold, samples: np.ndarray) -> np.ndarray:
    """Fixed-point Frechet mean: mu <- R_mu(mean of Log_mu(y_m))."""
    mu = samples[0].copy()
    for _ in range(200):
        t = np.mean([manifold.log_map(mu, y) for y in samples], axis=0)
        if np.linalg.norm(t) < 1e-9:
            break
        mu = manifold.retract(mu, t)
    return mu


def ingest_demonstrations(
    demos, epsilon: float | None = None, manifold: Manifold | None = None
) -> ProbabilisticTrajectory:
    """Aggregate M index-aligned demonstrations into a probabilistic trajectory.

    Parameters
    ----------
    demos : sequence
        M demonstrations, each either an (inputs, outputs) array pair or a
        sequence of (x, y) pairs. All must share length and input grid.
    epsilon : float, optional
        Covariance jitter added to every Sigma_n. Defaults to
        1e-8 * (mean output scale)^2.
    manifold : Manifold, optional
        When given, outputs are treated as manifold points: the per-index
        mean is the Frechet mean and the covariance is computed from the
        tangent coordinates at that mean.

    Returns
    -------
    ProbabilisticTrajectory
        mu_n is the per-index mean and Sigma_n the per-index sample
        covariance (divisor M-1) plus epsilon * I.
    """
    normalized = [_normalize_demo(d, i) for i, d in enumerate(demos)]
    m = len(normalized)
    if m < 2:
        raise ValueError("ingestion needs at least 2 demonstrations")
    X0, _ = normalized[0]
    n = X0.shape[0]
    for i, (X, Y) in enumerate(normalized):
        if X.shape != X0.shape:
            raise DimensionMismatchError(f"demo {i}: input grid shape differs")
        if np.max(np.abs(X - X0)) > GRID_TOL:
            raise DimensionMismatchError(
                f"demo {i}: input grid differs beyond {GRID_TOL:g}"
            )
    Ys = np.stack([Y for _, Y in normalized])  # (M, N, O)

    if manifold is None:
        if epsilon is None:
            epsilon = 1e-8 * _output_scale(Ys.reshape(-1, Ys.shape[2])) ** 2
        means = Ys.mean(axis=0)
        centered = Ys - means[None, :, :]
        covs = (
            np.einsum("mni,mnj->nij", centered, centered) / (m - 1)
            + epsilon * np.eye(Ys.shape[2])[None]
        )
        points = [GaussianPoint(X0[i], means[i], covs[i]) for i in range(n)]
        return ProbabilisticTrajectory(points=tuple(points), manifold=None)

    d = manifold.intrinsic_dim
    means = np.empty((n, manifold.ambient_dim))
    tangent_coords = np.empty((n, m, d))
    for i in range(n):
        samples = np.array([manifold.check_point(Ys[h, i], f"demo {h} point {i}")
                            for h in range(m)])
        mu = _frechet_point_mean(manifold, samples)
        basis = manifold.tangent_basis(mu)
        means[i] = mu
        for h in range(m):
            tangent_coords[i, h] = basis @ manifold.log_map(mu, samples[h])
    if epsilon is None:
        epsilon = 1e-8 * _output_scale(tangent_coords.reshape(-1, d)) ** 2
    covs = (
        np.einsum("nmi,nmj->nij", tangent_coords, tangent_coords) / (m - 1)
        + epsilon * np.eye(d)[None]
    )
    points = [GaussianPoint(X0[i], means[i], covs[i]) for i in range(n)]
    return ProbabilisticTrajectory(points=tuple(points), manifold=manifold)


def merge_via_points(base: ProbabilisticTrajectory, via: ViaPointSet):
    """Concatenate a via-point set onto a trajectory.

    Returns the augmented trajectory of length N+J and the row-weight vector
    (1 for demonstrated points, w_j for via points). The downstream solve
    uses the weight sum N' = N + sum_j w_j as its regularizer count.
    """
    if len(via) == 0:
        return base, np.ones(len(base))
    for j, p in enumerate(via.points):
        if p.x.shape[0] != base.input_dim:
            raise DimensionMismatchError(f"via point {j}: input length differs")
        if p.mu.shape[0] != base.output_dim:
            raise DimensionMismatchError(f"via point {j}: mean length differs")
        if p.sigma.shape != base.points[0].sigma.shape:
            raise DimensionMismatchError(f"via point {j}: sigma shape differs")
    merged = ProbabilisticTrajectory(
        points=base.points + via.points, manifold=base.manifold
    )
    weights = np.concatenate([np.ones(len(base)), via.weights])
    return merged, weights


# -- JSON schema ------------------------------------------------------------


def _require(cond, path, msg):
    if not cond:
        raise SchemaError(f"{path}: {msg}")


def _as_float_matrix(obj, path, width=None):
    _require(isinstance(obj, list) and obj, path, "must be a nonempty list")
    rows = []
    for i, row in enumerate(obj):
        _require(isinstance(row, list), f"{path}[{i}]", "must be a list of numbers")
        if width is not None:
            _require(len(row) == width, f"{path}[{i}]", f"must have length {width}")
        for j, v in enumerate(row):
            _require(
                isinstance(v, (int, float)) and math.isfinite(v),
                f"{path}[{i}][{j}]",
                "must be a finite number",
            )
        rows.append([float(v) for v in row])
    widths = {len(r) for r in rows}
    _require(len(widths) == 1, path, "rows must all have the same length")
    return np.array(rows)


def trajectory_to_dict(traj: ProbabilisticTrajectory) -> dict:
    return {
        "inputs": traj.inputs.tolist(),
        "means": traj.means.tolist(),
        "covariances": traj.covariances.tolist(),
        "manifold": None if traj.manifold is None else traj.manifold.to_dict(),
    }


def trajectory_from_dict(d: dict, path: str = "") -> ProbabilisticTrajectory:
    prefix = f"{path}." if path else ""
    _require(isinstance(d, dict), path or "record", "must be an object")
    known = {"inputs", "means", "covariances", "manifold"}
    extra = set(d) - known - {"weights"}
    _require(not extra, path or "record", f"unknown fields {sorted(extra)}")
    for key in ("inputs", "means", "covariances"):
        _require(key in d, f"{prefix}{key}", "missing")
    inputs = _as_float_matrix(d["inputs"], f"{prefix}inputs")
    means = _as_float_matrix(d["means"], f"{prefix}means")
    n = inputs.shape[0]
    _require(means.shape[0] == n, f"{prefix}means", f"expected {n} rows")
    covs_raw = d["covariances"]
    _require(
        isinstance(covs_raw, list) and len(covs_raw) == n,
        f"{prefix}covariances",
        f"must be a list of {n} matrices",
    )
    covs = np.stack(
        [_as_float_matrix(c, f"{prefix}covariances[{i}]") for i, c in enumerate(covs_raw)]
    )
    _require(
        covs.shape[1] == covs.shape[2],
        f"{prefix}covariances",
        "matrices must be square",
    )
    manifold = None
    if d.get("manifold") is not None:
        manifold = manifold_from_dict(d["manifold"], f"{prefix}manifold")
    try:
        return ProbabilisticTrajectory.from_arrays(inputs, means, covs, manifold)
    except (ValueError, DimensionMismatchError) as e:
        raise SchemaError(f"{path or 'record'}: {e}") from e


def via_set_to_dict(via: ViaPointSet, manifold=None) -> dict:
    traj = {
        "inputs": [p.x.tolist() for p in via.points],
        "means": [p.mu.tolist() for p in via.points],
        "covariances": [p.sigma.tolist() for p in via.points],
        "manifold": None if manifold is None else manifold.to_dict(),
    }
    traj["weights"] = via.weights.tolist()
    return traj


def via_set_from_dict(d: dict, path: str = "") -> ViaPointSet:
    prefix = f"{path}." if path else ""
    _require(isinstance(d, dict), path or "record", "must be an object")
    _require("weights" in d, f"{prefix}weights", "missing")
    weights = d["weights"]
    _require(isinstance(weights, list), f"{prefix}weights", "must be a list")
    if not weights:
        _require(
            not d.get("inputs"), f"{prefix}weights", "empty but points are present"
        )
        return ViaPointSet(points=(), weights=np.zeros(0))
    for j, w in enumerate(weights):
        _require(
            isinstance(w, (int, float)) and math.isfinite(w) and w > 1,
            f"{prefix}weights[{j}]",
            "must be a finite number > 1",
        )
    traj = trajectory_from_dict({k: v for k, v in d.items() if k != "weights"}, path)
    _require(
        len(traj) == len(weights),
        f"{prefix}weights",
        f"expected {len(traj)} entries",
    )
    return ViaPointSet(points=traj.points, weights=np.array(weights, dtype=float))


def superposition_to_dict(sup: SuperpositionSet) -> dict:
    return {
        "priorities": sup.priorities.tolist(),
        "trajectories": [trajectory_to_dict(t) for t in sup.trajectories],
    }


def superposition_from_dict(d: dict) -> SuperpositionSet:
    _require(isinstance(d, dict), "record", "must be an object")
    extra = set(d) - {"priorities", "trajectories"}
    _require(not extra, "record", f"unknown fields {sorted(extra)}")
    _require("priorities" in d, "priorities", "missing")
    _require("trajectories" in d, "trajectories", "missing")
    pr = d["priorities"]
    _require(isinstance(pr, list) and pr, "priorities", "must be a nonempty list")
    trs = d["trajectories"]
    _require(isinstance(trs, list) and trs, "trajectories", "must be a nonempty list")
    trajectories = [
        trajectory_from_dict(t, f"trajectories[{h}]") for h, t in enumerate(trs)
    ]
    try:
        return SuperpositionSet(
            trajectories=tuple(trajectories), priorities=np.array(pr, dtype=float)
        )
    except (ValueError, DimensionMismatchError) as e:
        raise SchemaError(f"record: {e}") from e


def _save_json(obj, path):
    with open(path, "w") as f:
        json.dump(obj, f, allow_nan=False)
        f.write("\n")


def _load_json(path):
    with open(path) as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as e:
            raise SchemaError(f"{path}: invalid JSON ({e})") from e


def save_trajectory(traj: ProbabilisticTrajectory, path) -> None:
    _save_json(trajectory_to_dict(traj), path)


def load_trajectory(path) -> ProbabilisticTrajectory:
    return trajectory_from_dict(_load_json(path))


def save_via_set(via: ViaPointSet, path, manifold=None) -> None:
    _save_json(via_set_to_dict(via, manifold), path)


def load_via_set(path) -> ViaPointSet:
    return via_set_from_dict(_load_json(path))


def save_superposition(sup: SuperpositionSet, path) -> None:
    _save_json(superposition_to_dict(sup), path)


def load_superposition(path) -> SuperpositionSet:
    return superposition_from_dict(_load_json(path))
