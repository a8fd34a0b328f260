# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled descent loops for weighted Frechet means on the sphere and cylinder.

Return layout matches ``fallback.py``:
``(mu, n_steps, grad_norm, status, bad_anchor, f_history)`` with status
0 = converged, 1 = iteration cap reached, 2 = cut locus hit.
"""

import numpy as np

from libc.math cimport acos, sqrt

cdef double CUT_TOL = 1e-9
cdef double SERIES_TOL = 1e-8


cdef inline double _factor(double u) nogil:
    # arccos(u)/sqrt(1-u^2); series form once 1-u < SERIES_TOL
    if 1.0 - u < SERIES_TOL:
        return 1.0 + (1.0 - u) / 3.0
    return acos(u) / sqrt(1.0 - u * u)


def sphere_descent(anchors, alpha, mu_init, double radius, double eta,
                   int max_iter, double tol):
    cdef double[:, ::1] A = np.ascontiguousarray(anchors, dtype=np.float64)
    cdef double[::1] al = np.ascontiguousarray(alpha, dtype=np.float64)
    mu_arr = np.array(mu_init, dtype=np.float64)
    hist_arr = np.empty(max_iter + 1, dtype=np.float64)
    cdef double[::1] mu = mu_arr
    cdef double[::1] fh = hist_arr
    cdef Py_ssize_t n = A.shape[0]
    cdef double r2 = radius * radius
    cdef double m0, m1, m2, g0, g1, g2, u, th, c, w0, w1, w2, nrm
    cdef double F = 0.0, gn = 0.0
    cdef Py_ssize_t i
    cdef int it = 0, status = -1, bad = -1
    with nogil:
        m0 = mu[0]; m1 = mu[1]; m2 = mu[2]
        while True:
            g0 = 0.0; g1 = 0.0; g2 = 0.0; F = 0.0
            for i in range(n):
                u = (A[i, 0] * m0 + A[i, 1] * m1 + A[i, 2] * m2) / r2
                if u <= -1.0 + CUT_TOL:
                    status = 2; bad = <int> i
                    break
                if u > 1.0:
                    u = 1.0
                th = acos(u)
                F += al[i] * r2 * th * th
                c = 2.0 * al[i] * _factor(u)
                g0 += c * (u * m0 - A[i, 0])
                g1 += c * (u * m1 - A[i, 1])
                g2 += c * (u * m2 - A[i, 2])
            if status == 2:
                break
            fh[it] = F
            gn = sqrt(g0 * g0 + g1 * g1 + g2 * g2)
            if gn <= tol:
                status = 0
                break
            if it >= max_iter:
                status = 1
                break
            w0 = m0 - eta * g0; w1 = m1 - eta * g1; w2 = m2 - eta * g2
            nrm = sqrt(w0 * w0 + w1 * w1 + w2 * w2)
            m0 = radius * w0 / nrm; m1 = radius * w1 / nrm; m2 = radius * w2 / nrm
            it += 1
        mu[0] = m0; mu[1] = m1; mu[2] = m2
    if status == 2:
        return mu_arr, it, np.nan, 2, bad, hist_arr[:it].copy()
    return mu_arr, it, gn, status, -1, hist_arr[:it + 1].copy()


def cylinder_descent(anchors, alpha, mu_init, double eta, int max_iter, double tol):
    cdef double[:, ::1] A = np.ascontiguousarray(anchors, dtype=np.float64)
    cdef double[::1] al = np.ascontiguousarray(alpha, dtype=np.float64)
    mu_arr = np.array(mu_init, dtype=np.float64)
    hist_arr = np.empty(max_iter + 1, dtype=np.float64)
    cdef double[::1] mu = mu_arr
    cdef double[::1] fh = hist_arr
    cdef Py_ssize_t n = A.shape[0]
    cdef double e0, e1, c0, c1, ge0, ge1, gc0, gc1
    cdef double u, th, c, d0, d1, w0, w1, nrm
    cdef double F = 0.0, gn = 0.0
    cdef Py_ssize_t i
    cdef int it = 0, status = -1, bad = -1
    with nogil:
        e0 = mu[0]; e1 = mu[1]; c0 = mu[2]; c1 = mu[3]
        while True:
            ge0 = 0.0; ge1 = 0.0; gc0 = 0.0; gc1 = 0.0; F = 0.0
            for i in range(n):
                u = A[i, 2] * c0 + A[i, 3] * c1
                if u <= -1.0 + CUT_TOL:
                    status = 2; bad = <int> i
                    break
                if u > 1.0:
                    u = 1.0
                th = acos(u)
                d0 = e0 - A[i, 0]; d1 = e1 - A[i, 1]
                F += al[i] * (d0 * d0 + d1 * d1 + th * th)
                ge0 += 2.0 * al[i] * d0
                ge1 += 2.0 * al[i] * d1
                c = 2.0 * al[i] * _factor(u)
                gc0 += c * (u * c0 - A[i, 2])
                gc1 += c * (u * c1 - A[i, 3])
            if status == 2:
                break
            fh[it] = F
            gn = sqrt(ge0 * ge0 + ge1 * ge1 + gc0 * gc0 + gc1 * gc1)
            if gn <= tol:
                status = 0
                break
            if it >= max_iter:
                status = 1
                break
            e0 -= eta * ge0
            e1 -= eta * ge1
            w0 = c0 - eta * gc0; w1 = c1 - eta * gc1
            nrm = sqrt(w0 * w0 + w1 * w1)
            c0 = w0 / nrm; c1 = w1 / nrm
            it += 1
        mu[0] = e0; mu[1] = e1; mu[2] = c0; mu[3] = c1
    if status == 2:
        return mu_arr, it, np.nan, 2, bad, hist_arr[:it].copy()
    return mu_arr, it, gn, status, -1, hist_arr[:it + 1].copy()
