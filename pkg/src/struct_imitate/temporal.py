"""Position+velocity trajectory learning with derivative feature maps.

Velocity features are central differences of the kernel feature map, so the
2N x 2N kernel matrix holds four entry families: position-position values
are plain kernel evaluations, position-velocity and velocity-position use
one central difference, velocity-velocity uses the doubly differenced
four-term stencil. Because one weight matrix serves both feature maps, the
predicted velocity is exactly the central difference of the predicted
position at the same half-step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_solve

from .errors import DimensionMismatchError
from .kernels import KernelConfig, regularized_factor


def phase_map(t, tau: float):
    """Phase variable z = t / tau from first-order linear dynamics.

    tau > 1 slows the trajectory down, tau < 1 speeds it up; queries at t
    are routed to the unmodulated trajectory at z.
    """
    if not (np.isfinite(tau) and tau > 0):
        raise ValueError("tau must be a positive finite scalar")
    return np.asarray(t, dtype=float) / tau


@dataclass(frozen=True, eq=False)
class TemporalModel:
    """Fitted position+velocity model.

    Rows alternate position/velocity per time stamp for the demonstrated
    data; rows appended by adaptation carry their own kind flag. The solver
    state factorizes diag(w) K + N' lam I with N' the effective stamp count
    (base stamps count 1, each adapted stamp counts its weight).
    """

    times: np.ndarray        # (R,) per-row time stamp
    is_velocity: np.ndarray  # (R,) bool, row kind
    Y: np.ndarray            # (R, O) stacked outputs
    config: KernelConfig
    delta: float
    row_weights: np.ndarray  # (R,)
    effective_count: float
    _lu: tuple = field(repr=False)
    _n_base: int = 0         # demonstrated stamps, kept for re-fitting

    @property
    def output_dim(self) -> int:
        return self.Y.shape[1]


def _pair_kernel(ta, tb, config: KernelConfig) -> np.ndarray:
    return config.pairwise(
        np.asarray(ta, dtype=float).reshape(-1, 1),
        np.asarray(tb, dtype=float).reshape(-1, 1),
    )


def _row_gram(times, is_vel, config: KernelConfig, delta: float) -> np.ndarray:
    """Kernel matrix over rows with mixed position/velocity kinds."""
    t = np.asarray(times, dtype=float)
    tp, tm = t + delta, t - delta
    k00 = _pair_kernel(t, t, config)
    k0p = _pair_kernel(t, tp, config)
    k0m = _pair_kernel(t, tm, config)
    kp0 = _pair_kernel(tp, t, config)
    km0 = _pair_kernel(tm, t, config)
    kpp = _pair_kernel(tp, tp, config)
    kpm = _pair_kernel(tp, tm, config)
    kmp = _pair_kernel(tm, tp, config)
    kmm = _pair_kernel(tm, tm, config)
    two_d = 2.0 * delta
    Kpv = (k0p - k0m) / two_d
    Kvp = (kp0 - km0) / two_d
    Kvv = (kpp - kpm - kmp + kmm) / (two_d * two_d)
    v = np.asarray(is_vel, dtype=bool)
    P = ~v
    K = np.where(P[:, None] & P[None, :], k00, 0.0)
    K = np.where(P[:, None] & v[None, :], Kpv, K)
    K = np.where(v[:, None] & P[None, :], Kvp, K)
    K = np.where(v[:, None] & v[None, :], Kvv, K)
    return K


def build_temporal_gram(times, config: KernelConfig, delta: float) -> np.ndarray:
    """2N x 2N kernel matrix with interleaved position/velocity rows."""
    t = np.asarray(times, dtype=float).ravel()
    if not np.all(np.isfinite(t)):
        raise ValueError("times contain non-finite values")
    if not (delta > 0):
        raise ValueError("delta must be positive")
    rows_t = np.repeat(t, 2)
    rows_v = np.tile([False, True], t.shape[0])
    return _row_gram(rows_t, rows_v, config, delta)


def _min_positive_spacing(t: np.ndarray) -> float:
    if t.shape[0] < 2:
        return np.inf
    gaps = np.diff(np.sort(t))
    gaps = gaps[gaps > 0]
    return float(gaps.min()) if gaps.size else np.inf


def _assemble(times_r, is_vel, Y, weights, eff, config, delta, n_base):
    K = _row_gram(times_r, is_vel, config, delta)
    A = weights[:, None] * K + eff * config.lam * np.eye(K.shape[0])
    lu_piv, _ = regularized_factor(A)
    return TemporalModel(
        times=times_r,
        is_velocity=is_vel,
        Y=Y,
        config=config,
        delta=delta,
        row_weights=weights,
        effective_count=eff,
        _lu=lu_piv,
        _n_base=n_base,
    )


def fit_temporal(
    times,
    positions,
    velocities,
    config: KernelConfig = KernelConfig(),
    delta: float | None = None,
) -> TemporalModel:
    """Fit the joint position/velocity model on per-stamp data.

    Parameters
    ----------
    times : array_like, shape (N,)
    positions, velocities : array_like, shape (N, O)
    config : KernelConfig
    delta : float, optional
        Central-difference half-step. Defaults to 1e-4 times the time span
        and must stay below a tenth of the smallest stamp spacing.
    """
    t = np.asarray(times, dtype=float).ravel()
    pos = np.atleast_2d(np.asarray(positions, dtype=float))
    vel = np.atleast_2d(np.asarray(velocities, dtype=float))
    if pos.shape[0] == 1 and t.shape[0] > 1:
        pos = pos.T
    if vel.shape[0] == 1 and t.shape[0] > 1:
        vel = vel.T
    if pos.shape != vel.shape or pos.shape[0] != t.shape[0]:
        raise DimensionMismatchError(
            f"times/positions/velocities disagree: {t.shape[0]}, "
            f"{pos.shape}, {vel.shape}"
        )
    span = float(t.max() - t.min()) if t.shape[0] > 1 else 1.0
    if delta is None:
        delta = 1e-4 * (span if span > 0 else 1.0)
    if not (delta > 0):
        raise ValueError("delta must be positive")
    spacing = _min_positive_spacing(t)
    if delta > spacing / 10:
        raise ValueError(
            f"delta={delta:g} exceeds a tenth of the smallest stamp "
            f"spacing ({spacing:g})"
        )

    n = t.shape[0]
    rows_t = np.repeat(t, 2)
    rows_v = np.tile([False, True], n)
    Y = np.empty((2 * n, pos.shape[1]))
    Y[0::2] = pos
    Y[1::2] = vel
    weights = np.ones(2 * n)
    return _assemble(rows_t, rows_v, Y, weights, float(n), config, delta, n)


def kp_kv(model: TemporalModel, t: float):
    """Kernel vectors for position and velocity prediction at time t.

    Entries follow the row kinds: position rows take plain kernel values
    against t (position vector) or its central difference in t (velocity
    vector); velocity rows use the stamp-side difference, and both sides for
    the velocity vector. Rows are scaled by their weights.
    """
    t = float(t)
    d = model.delta
    tr = model.times
    base = _pair_kernel(tr, [t], model.config)[:, 0]
    q_p = _pair_kernel(tr, [t + d], model.config)[:, 0]
    q_m = _pair_kernel(tr, [t - d], model.config)[:, 0]
    s_p = _pair_kernel(tr + d, [t], model.config)[:, 0]
    s_m = _pair_kernel(tr - d, [t], model.config)[:, 0]
    spp = _pair_kernel(tr + d, [t + d], model.config)[:, 0]
    spm = _pair_kernel(tr + d, [t - d], model.config)[:, 0]
    smp = _pair_kernel(tr - d, [t + d], model.config)[:, 0]
    smm = _pair_kernel(tr - d, [t - d], model.config)[:, 0]
    v = model.is_velocity
    kp = np.where(v, (s_p - s_m) / (2 * d), base)
    kv = np.where(v, (spp - spm - smp + smm) / (4 * d * d), (q_p - q_m) / (2 * d))
    return model.row_weights * kp, model.row_weights * kv


def predict_pos_vel(model: TemporalModel, t: float):
    """Predicted position and velocity at time t."""
    kp, kv = kp_kv(model, t)
    alpha_p = lu_solve(model._lu, kp)
    alpha_v = lu_solve(model._lu, kv)
    return model.Y.T @ alpha_p, model.Y.T @ alpha_v


def adapt_temporal(model: TemporalModel, desired) -> TemporalModel:
    """Re-fit with desired (t, position, velocity, weight) rows appended.

    Each entry must supply at least one of position/velocity; a missing
    component contributes no row. Appended rows carry the entry weight, and
    each entry adds its weight to the effective stamp count.
    """
    times = list(model.times)
    kinds = list(model.is_velocity)
    rows = list(model.Y)
    weights = list(model.row_weights)
    eff = model.effective_count
    for j, entry in enumerate(desired):
        t_j, pos, vel, w = entry
        if pos is None and vel is None:
            raise ValueError(f"desired entry {j} has neither position nor velocity")
        if not (np.isfinite(w) and w > 0):
            raise ValueError(f"desired entry {j} weight must be positive")
        if pos is not None:
            pos = np.asarray(pos, dtype=float).ravel()
            if pos.shape[0] != model.output_dim:
                raise DimensionMismatchError(f"desired entry {j}: position length")
            times.append(float(t_j))
            kinds.append(False)
            rows.append(pos)
            weights.append(float(w))
        if vel is not None:
            vel = np.asarray(vel, dtype=float).ravel()
            if vel.shape[0] != model.output_dim:
                raise DimensionMismatchError(f"desired entry {j}: velocity length")
            times.append(float(t_j))
            kinds.append(True)
            rows.append(vel)
            weights.append(float(w))
        eff += float(w)
    return _assemble(
        np.array(times),
        np.array(kinds, dtype=bool),
        np.array(rows),
        np.array(weights),
        eff,
        model.config,
        model.delta,
        model._n_base,
    )
