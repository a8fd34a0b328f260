"""Pure-NumPy descent loops, used when the compiled core is unavailable.

Semantics match ``_descent.pyx`` exactly: same branch constants, same
stopping rule, same return layout
``(mu, n_steps, grad_norm, status, bad_anchor, f_history)`` with status
0 = converged, 1 = iteration cap reached, 2 = cut locus hit at ``bad_anchor``.
"""

import numpy as np

CUT_TOL = 1e-9
SERIES_TOL = 1e-8


def _factor(u):
    near = (1.0 - u) < SERIES_TOL
    safe = np.where(near, 0.0, u)
    with np.errstate(invalid="ignore", divide="ignore"):
        exact = np.arccos(safe) / np.sqrt(1.0 - safe * safe)
    return np.where(near, 1.0 + (1.0 - u) / 3.0, exact)


def sphere_descent(anchors, alpha, mu_init, radius, eta, max_iter, tol):
    anchors = np.ascontiguousarray(anchors, dtype=float)
    alpha = np.ascontiguousarray(alpha, dtype=float)
    mu = np.array(mu_init, dtype=float)
    r2 = radius * radius
    f_hist = np.empty(max_iter + 1)
    it = 0
    while True:
        u = anchors @ mu / r2
        bad = np.nonzero(u <= -1.0 + CUT_TOL)[0]
        if bad.size:
            return mu, it, np.nan, 2, int(bad[0]), f_hist[:it]
        u = np.minimum(u, 1.0)
        theta = np.arccos(u)
        f_hist[it] = np.sum(alpha * r2 * theta * theta)
        coeff = 2.0 * alpha * _factor(u)
        g = coeff @ (u[:, None] * mu[None, :] - anchors)
        gn = float(np.linalg.norm(g))
        if gn <= tol:
            return mu, it, gn, 0, -1, f_hist[: it + 1].copy()
        if it >= max_iter:
            return mu, it, gn, 1, -1, f_hist[: it + 1].copy()
        w = mu - eta * g
        mu = radius * w / np.linalg.norm(w)
        it += 1


def cylinder_descent(anchors, alpha, mu_init, eta, max_iter, tol):
    anchors = np.ascontiguousarray(anchors, dtype=float)
    alpha = np.ascontiguousarray(alpha, dtype=float)
    mu = np.array(mu_init, dtype=float)
    f_hist = np.empty(max_iter + 1)
    it = 0
    while True:
        diff = mu[None, :2] - anchors[:, :2]
        u = anchors[:, 2:] @ mu[2:]
        bad = np.nonzero(u <= -1.0 + CUT_TOL)[0]
        if bad.size:
            return mu, it, np.nan, 2, int(bad[0]), f_hist[:it]
        u = np.minimum(u, 1.0)
        theta = np.arccos(u)
        f_hist[it] = np.sum(alpha * (np.sum(diff * diff, axis=1) + theta * theta))
        ge = 2.0 * alpha @ diff
        coeff = 2.0 * alpha * _factor(u)
        gc = coeff @ (u[:, None] * mu[None, 2:] - anchors[:, 2:])
        gn = float(np.sqrt(ge @ ge + gc @ gc))
        if gn <= tol:
            return mu, it, gn, 0, -1, f_hist[: it + 1].copy()
        if it >= max_iter:
            return mu, it, gn, 1, -1, f_hist[: it + 1].copy()
        mu = mu.copy()
        mu[:2] -= eta * ge
        c = mu[2:] - eta * gc
        mu[2:] = c / np.linalg.norm(c)
        it += 1
