"""Riemannian primitives: sphere, circle, cylinder, and product manifolds.

Points and tangent vectors are plain ambient-coordinate arrays. Covariance
matrices are expressed in a deterministic orthonormal basis of the tangent
space (see ``tangent_basis``), which keeps them full-rank square matrices of
the intrinsic dimension. The cylinder is the product of a flat plane and the
unit circle embedded in R^2, laid out as ``[e1, e2, c1, c2]``.
"""

from __future__ import annotations

import numpy as np

from .errors import CutLocusError, NotTangentError, OffManifoldError, SchemaError

MEMBER_TOL = 1e-9
CUT_TOL = 1e-9      # cos(angle) <= -1 + CUT_TOL counts as the cut locus
ZERO_DIST = 1e-12   # below this, log is zero and transport is the identity
SERIES_TOL = 1e-8   # switch to the series form of arccos(u)/sqrt(1-u^2)


def _arc_factor(u: np.ndarray) -> np.ndarray:
    """arccos(u)/sqrt(1-u^2), elementwise, stable as u -> 1.

    Near u = 1 the ratio tends to 1; we substitute the leading series
    1 + (1-u)/3 once 1-u drops below SERIES_TOL.
    """
    u = np.minimum(u, 1.0)
    near = (1.0 - u) < SERIES_TOL
    safe = np.where(near, 0.0, u)
    with np.errstate(invalid="ignore", divide="ignore"):
        exact = np.arccos(safe) / np.sqrt(1.0 - safe * safe)
    return np.where(near, 1.0 + (1.0 - u) / 3.0, exact)


class Manifold:
    """Common surface for all geometry descriptors."""

    kind: str
    ambient_dim: int
    intrinsic_dim: int

    # -- membership ---------------------------------------------------------

    def contains(self, p, tol: float = MEMBER_TOL) -> bool:
        raise NotImplementedError

    def check_point(self, p, name: str = "point") -> np.ndarray:
        q = np.asarray(p, dtype=float).ravel()
        if q.shape[0] != self.ambient_dim:
            raise OffManifoldError(
                f"{name} has length {q.shape[0]}, expected {self.ambient_dim}"
            )
        if not self.contains(q):
            raise OffManifoldError(f"{name} is not on the manifold: {q.tolist()}")
        return q

    def check_tangent(self, base: np.ndarray, v, name: str = "vector") -> np.ndarray:
        u = np.asarray(v, dtype=float).ravel()
        if u.shape[0] != self.ambient_dim:
            raise NotTangentError(
                f"{name} has length {u.shape[0]}, expected {self.ambient_dim}"
            )
        if not self.is_tangent(base, u):
            raise NotTangentError(f"{name} is not tangent at the base point")
        return u

    def is_tangent(self, base: np.ndarray, v: np.ndarray) -> bool:
        raise NotImplementedError

    # -- core operations ----------------------------------------------------

    def dist(self, p, q) -> float:
        raise NotImplementedError

    def log_map(self, base, target) -> np.ndarray:
        raise NotImplementedError

    def retract(self, base, v) -> np.ndarray:
        raise NotImplementedError

    def parallel_transport(self, start, end, u) -> np.ndarray:
        raise NotImplementedError

    def grad_weighted_dist2(self, alpha, anchors, mu) -> np.ndarray:
        """Riemannian gradient of F(mu) = sum_n alpha_n dist(anchor_n, mu)^2."""
        raise NotImplementedError

    def objective_weighted_dist2(self, alpha, anchors, mu) -> float:
        alpha = np.asarray(alpha, dtype=float).ravel()
        return float(
            sum(a * self.dist(p, mu) ** 2 for a, p in zip(alpha, np.atleast_2d(anchors)))
        )

    def tangent_basis(self, p) -> np.ndarray:
        """Deterministic orthonormal basis of the tangent space at ``p``.

        Returns an (intrinsic_dim, ambient_dim) array whose rows are the
        basis vectors. The basis is a fixed function of the point, so
        covariance coordinates are reproducible across calls.
        """
        raise NotImplementedError

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __eq__(self, other):
        return isinstance(other, Manifold) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(repr(self.to_dict()))

    def __repr__(self):
        return f"{type(self).__name__}({self.to_dict()})"


class _SphereLike(Manifold):
    """Round sphere of any ambient dimension; the unit circle reuses it."""

    def __init__(self, radius: float, ambient_dim: int):
        if not (np.isfinite(radius) and radius > 0):
            raise ValueError("radius must be positive")
        self.radius = float(radius)
        self.ambient_dim = ambient_dim
        self.intrinsic_dim = ambient_dim - 1

    def contains(self, p, tol: float = MEMBER_TOL) -> bool:
        q = np.asarray(p, dtype=float).ravel()
        if q.shape[0] != self.ambient_dim or not np.all(np.isfinite(q)):
            return False
        return abs(np.linalg.norm(q) - self.radius) <= tol * self.radius

    def is_tangent(self, base, v):
        return abs(float(base @ v)) <= 1e-9 * max(np.linalg.norm(v), 1e-300) * self.radius

    def _cos_angle(self, p, q) -> float:
        return float(p @ q) / (self.radius * self.radius)

    def dist(self, p, q) -> float:
        p = self.check_point(p, "p")
        q = self.check_point(q, "q")
        c = np.clip(self._cos_angle(p, q), -1.0, 1.0)
        return self.radius * float(np.arccos(c))

    def log_map(self, base, target) -> np.ndarray:
        p = self.check_point(base, "base")
        q = self.check_point(target, "target")
        c = self._cos_angle(p, q)
        if c <= -1.0 + CUT_TOL:
            raise CutLocusError("target is antipodal to the base point")
        d = self.radius * float(np.arccos(np.clip(c, -1.0, 1.0)))
        if d < ZERO_DIST:
            return np.zeros(self.ambient_dim)
        w = self.radius**2 * q - float(p @ q) * p
        return d * w / np.linalg.norm(w)

    def retract(self, base, v) -> np.ndarray:
        p = self.check_point(base, "base")
        u = self.check_tangent(p, v)
        w = p + u
        n = np.linalg.norm(w)
        if n == 0.0:
            raise ValueError("retraction undefined: base + vector vanished")
        return self.radius * w / n

    def parallel_transport(self, start, end, u) -> np.ndarray:
        p = self.check_point(start, "start")
        q = self.check_point(end, "end")
        vec = self.check_tangent(p, u)
        d = self.dist(p, q)
        if d < ZERO_DIST:
            return vec.copy()
        lpq = self.log_map(p, q)
        lqp = self.log_map(q, p)
        return vec - (float(lpq @ vec) / d**2) * (lpq + lqp)

    def grad_weighted_dist2(self, alpha, anchors, mu) -> np.ndarray:
        m = self.check_point(mu, "mu")
        A = np.atleast_2d(np.asarray(anchors, dtype=float))
        alpha = np.asarray(alpha, dtype=float).ravel()
        u = A @ m / self.radius**2
        bad = np.nonzero(u <= -1.0 + CUT_TOL)[0]
        if bad.size:
            raise CutLocusError(f"anchor {bad[0]} is antipodal to the evaluation point")
        u = np.minimum(u, 1.0)
        coeff = 2.0 * alpha * _arc_factor(u)
        return coeff @ (u[:, None] * m[None, :] - A)

    def objective_weighted_dist2(self, alpha, anchors, mu) -> float:
        m = self.check_point(mu, "mu")
        A = np.atleast_2d(np.asarray(anchors, dtype=float))
        alpha = np.asarray(alpha, dtype=float).ravel()
        u = np.clip(A @ m / self.radius**2, -1.0, 1.0)
        return float(np.sum(alpha * (self.radius * np.arccos(u)) ** 2))


class Sphere(_SphereLike):
    """S^2 with radius r, embedded in R^3."""

    kind = "sphere"

    def __init__(self, radius: float):
        super().__init__(radius, ambient_dim=3)

    def tangent_basis(self, p) -> np.ndarray:
        p = self.check_point(p)
        n = p / self.radius
        axis = np.array([0.0, 0.0, 1.0])
        if abs(n @ axis) > 0.9:
            axis = np.array([1.0, 0.0, 0.0])
        b1 = axis - (n @ axis) * n
        b1 /= np.linalg.norm(b1)
        b2 = np.cross(n, b1)
        return np.vstack([b1, b2])

    def to_dict(self) -> dict:
        return {"kind": "sphere", "radius": self.radius}


class Circle(_SphereLike):
    """Unit circle S^1 embedded in R^2; sphere formulas with r = 1."""

    kind = "circle"

    def __init__(self):
        super().__init__(1.0, ambient_dim=2)

    def tangent_basis(self, p) -> np.ndarray:
        p = self.check_point(p)
        return np.array([[-p[1], p[0]]])

    def to_dict(self) -> dict:
        return {"kind": "circle"}


class Euclidean(Manifold):
    """Flat R^n, the trivial factor in product manifolds."""

    kind = "euclidean"

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.ambient_dim = int(dim)
        self.intrinsic_dim = int(dim)

    def contains(self, p, tol: float = MEMBER_TOL) -> bool:
        q = np.asarray(p, dtype=float).ravel()
        return q.shape[0] == self.ambient_dim and bool(np.all(np.isfinite(q)))

    def is_tangent(self, base, v):
        return True

    def dist(self, p, q) -> float:
        return float(np.linalg.norm(self.check_point(p) - self.check_point(q)))

    def log_map(self, base, target) -> np.ndarray:
        return self.check_point(target) - self.check_point(base)

    def retract(self, base, v) -> np.ndarray:
        return self.check_point(base) + np.asarray(v, dtype=float).ravel()

    def parallel_transport(self, start, end, u) -> np.ndarray:
        return np.asarray(u, dtype=float).ravel().copy()

    def grad_weighted_dist2(self, alpha, anchors, mu) -> np.ndarray:
        A = np.atleast_2d(np.asarray(anchors, dtype=float))
        alpha = np.asarray(alpha, dtype=float).ravel()
        m = self.check_point(mu)
        return 2.0 * alpha @ (m[None, :] - A)

    def objective_weighted_dist2(self, alpha, anchors, mu) -> float:
        A = np.atleast_2d(np.asarray(anchors, dtype=float))
        alpha = np.asarray(alpha, dtype=float).ravel()
        m = self.check_point(mu)
        return float(alpha @ np.sum((A - m[None, :]) ** 2, axis=1))

    def tangent_basis(self, p) -> np.ndarray:
        return np.eye(self.ambient_dim)

    def to_dict(self) -> dict:
        return {"kind": "euclidean", "dim": self.ambient_dim}


class ProductManifold(Manifold):
    """Finite Cartesian product; every operation concatenates the factors."""

    kind = "product"

    def __init__(self, components):
        components = tuple(components)
        if not components:
            raise ValueError("product manifold needs at least one component")
        self.components = components
        self.ambient_dim = sum(c.ambient_dim for c in components)
        self.intrinsic_dim = sum(c.intrinsic_dim for c in components)
        self._slices = []
        start = 0
        for c in components:
            self._slices.append(slice(start, start + c.ambient_dim))
            start += c.ambient_dim

    def split(self, p: np.ndarray):
        return [p[s] for s in self._slices]

    def contains(self, p, tol: float = MEMBER_TOL) -> bool:
        q = np.asarray(p, dtype=float).ravel()
        if q.shape[0] != self.ambient_dim:
            return False
        return all(c.contains(q[s], tol) for c, s in zip(self.components, self._slices))

    def is_tangent(self, base, v):
        return all(
            c.is_tangent(base[s], v[s]) for c, s in zip(self.components, self._slices)
        )

    def dist(self, p, q) -> float:
        p = self.check_point(p, "p")
        q = self.check_point(q, "q")
        parts = [
            c.dist(p[s], q[s]) for c, s in zip(self.components, self._slices)
        ]
        return float(np.sqrt(np.sum(np.square(parts))))

    def log_map(self, base, target) -> np.ndarray:
        p = self.check_point(base, "base")
        q = self.check_point(target, "target")
        return np.concatenate(
            [c.log_map(p[s], q[s]) for c, s in zip(self.components, self._slices)]
        )

    def retract(self, base, v) -> np.ndarray:
        p = self.check_point(base, "base")
        u = self.check_tangent(p, v)
        return np.concatenate(
            [c.retract(p[s], u[s]) for c, s in zip(self.components, self._slices)]
        )

    def parallel_transport(self, start, end, u) -> np.ndarray:
        p = self.check_point(start, "start")
        q = self.check_point(end, "end")
        vec = self.check_tangent(p, u)
        return np.concatenate(
            [
                c.parallel_transport(p[s], q[s], vec[s])
                for c, s in zip(self.components, self._slices)
            ]
        )

    def grad_weighted_dist2(self, alpha, anchors, mu) -> np.ndarray:
        m = self.check_point(mu, "mu")
        A = np.atleast_2d(np.asarray(anchors, dtype=float))
        return np.concatenate(
            [
                c.grad_weighted_dist2(alpha, A[:, s], m[s])
                for c, s in zip(self.components, self._slices)
            ]
        )

    def objective_weighted_dist2(self, alpha, anchors, mu) -> float:
        m = self.check_point(mu, "mu")
        A = np.atleast_2d(np.asarray(anchors, dtype=float))
        return float(
            sum(
                c.objective_weighted_dist2(alpha, A[:, s], m[s])
                for c, s in zip(self.components, self._slices)
            )
        )

    def tangent_basis(self, p) -> np.ndarray:
        p = self.check_point(p)
        B = np.zeros((self.intrinsic_dim, self.ambient_dim))
        row = 0
        for c, s in zip(self.components, self._slices):
            Bc = c.tangent_basis(p[s])
            B[row : row + c.intrinsic_dim, s] = Bc
            row += c.intrinsic_dim
        return B

    def to_dict(self) -> dict:
        return {
            "kind": "product",
            "components": [c.to_dict() for c in self.components],
        }


class CircularCylinder(ProductManifold):
    """R^2 x S^1 with point layout [e1, e2, c1, c2], (c1, c2) on the unit circle."""

    kind = "cylinder"

    def __init__(self):
        super().__init__([Euclidean(2), Circle()])

    def to_dict(self) -> dict:
        return {"kind": "cylinder"}


def manifold_from_dict(d, path: str = "manifold") -> Manifold:
    """Build a manifold from its JSON record."""
    if not isinstance(d, dict) or "kind" not in d:
        raise SchemaError(f"{path}: expected an object with a 'kind' field")
    kind = d["kind"]
    if kind == "sphere":
        if "radius" not in d:
            raise SchemaError(f"{path}.radius: missing")
        radius = d["radius"]
        if not isinstance(radius, (int, float)) or not radius > 0:
            raise SchemaError(f"{path}.radius: must be a positive number")
        extra = set(d) - {"kind", "radius"}
        if extra:
            raise SchemaError(f"{path}: unknown fields {sorted(extra)}")
        return Sphere(float(radius))
    if kind == "cylinder":
        extra = set(d) - {"kind"}
        if extra:
            raise SchemaError(f"{path}: unknown fields {sorted(extra)}")
        return CircularCylinder()
    if kind == "circle":
        return Circle()
    if kind == "euclidean":
        if not isinstance(d.get("dim"), int) or d["dim"] < 1:
            raise SchemaError(f"{path}.dim: must be a positive integer")
        return Euclidean(d["dim"])
    if kind == "product":
        comps = d.get("components")
        if not isinstance(comps, list) or not comps:
            raise SchemaError(f"{path}.components: must be a nonempty list")
        return ProductManifold(
            [
                manifold_from_dict(c, f"{path}.components[{i}]")
                for i, c in enumerate(comps)
            ]
        )
    raise SchemaError(f"{path}.kind: unknown manifold kind {kind!r}")
