import warnings

import numpy as np
import pytest

from struct_imitate import (
    CircularCylinder,
    KernelConfig,
    ProbabilisticTrajectory,
    ProductManifold,
    RgdConfig,
    Sphere,
    fit,
    frechet_predict_mean,
    predict_manifold,
    transported_covariance,
)
from struct_imitate.errors import (
    ConvergenceWarning,
    CutLocusError,
    DegenerateWeightsError,
    DimensionMismatchError,
    NotSPDError,
)


def _sphere_point(rng, r=1.0):
    p = rng.standard_normal(3)
    return r * p / np.linalg.norm(p)


def test_single_anchor_zero_iterations():
    sph = Sphere(1.0)
    a = np.array([0.0, 0.0, 1.0])
    mu, info = frechet_predict_mean(sph, [1.0], a[None], full_output=True)
    assert np.array_equal(mu, a)
    assert info.iterations == 0
    assert info.converged


def test_two_anchor_midpoint():
    sph = Sphere(1.0)
    mu = frechet_predict_mean(
        sph,
        [0.5, 0.5],
        [[1, 0, 0], [0, 1, 0]],
        cfg=RgdConfig(max_iter=2000),
    )
    assert np.allclose(mu, [1 / np.sqrt(2), 1 / np.sqrt(2), 0.0], atol=1e-6)


def test_three_anchor_beats_grid_search():
    sph = Sphere(1.0)
    rng = np.random.default_rng(0)
    anchors = np.stack([_sphere_point(rng) for _ in range(3)])
    alpha = np.array([1.0, 0.7, 0.4])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        mu = frechet_predict_mean(sph, alpha, anchors, cfg=RgdConfig(max_iter=3000))
    f_hat = sph.objective_weighted_dist2(alpha, anchors, mu)
    th = np.linspace(0, np.pi, 100)
    ph = np.linspace(0, 2 * np.pi, 200, endpoint=False)
    TH, PH = np.meshgrid(th, ph, indexing="ij")
    grid = np.stack(
        [np.sin(TH) * np.cos(PH), np.sin(TH) * np.sin(PH), np.cos(TH)], axis=-1
    ).reshape(-1, 3)
    f_grid = (np.arccos(np.clip(grid @ anchors.T, -1, 1)) ** 2) @ alpha
    assert f_hat <= f_grid.min() + 1e-9


@pytest.mark.parametrize("kind", ["sphere", "cylinder", "product"])
def test_monotone_descent(kind):
    rng = np.random.default_rng(1)
    if kind == "sphere":
        man = Sphere(1.0)
        anchors = np.stack([_sphere_point(rng) for _ in range(5)])
    elif kind == "cylinder":
        man = CircularCylinder()
        anchors = np.stack(
            [
                np.concatenate([rng.standard_normal(2), _sphere_point(rng)[:2]])
                for _ in range(5)
            ]
        )
        anchors[:, 2:] /= np.linalg.norm(anchors[:, 2:], axis=1, keepdims=True)
    else:
        man = ProductManifold([Sphere(1.0), Sphere(2.0)])
        anchors = np.stack(
            [
                np.concatenate([_sphere_point(rng), _sphere_point(rng, 2.0)])
                for _ in range(5)
            ]
        )
    alpha = rng.uniform(0.3, 1.0, 5)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        _, info = frechet_predict_mean(
            man, alpha, anchors, cfg=RgdConfig(max_iter=800), full_output=True
        )
    trace = info.objective_trace
    assert trace.shape[0] >= 2
    assert np.all(np.diff(trace) <= 1e-12)


def test_generic_path_agrees_with_fast_path():
    # a one-component product runs the generic loop on the same geometry
    rng = np.random.default_rng(2)
    anchors = np.stack([_sphere_point(rng) for _ in range(4)])
    alpha = rng.uniform(0.2, 1.0, 4)
    cfg = RgdConfig(max_iter=2000)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        fast = frechet_predict_mean(Sphere(1.0), alpha, anchors, cfg=cfg)
        generic = frechet_predict_mean(
            ProductManifold([Sphere(1.0)]), alpha, anchors, cfg=cfg
        )
    assert np.allclose(fast, generic, atol=1e-9)


def test_init_strategies():
    sph = Sphere(1.0)
    anchors = np.array([[1.0, 0, 0], [0, 1.0, 0]])
    mu_a, info_a = frechet_predict_mean(
        sph, [1.0, 3.0], anchors, cfg=RgdConfig(max_iter=1, tol=1e30), full_output=True
    )
    assert np.array_equal(mu_a, anchors[1])  # max-alpha init, tol hit immediately
    mu_f, _ = frechet_predict_mean(
        sph,
        [1.0, 3.0],
        anchors,
        cfg=RgdConfig(max_iter=1, tol=1e30, init="first-anchor"),
        full_output=True,
    )
    assert np.array_equal(mu_f, anchors[0])


def test_degenerate_weights_rejected():
    sph = Sphere(1.0)
    with pytest.raises(DegenerateWeightsError):
        frechet_predict_mean(sph, [0.0, 0.0], [[1, 0, 0], [0, 1, 0]])


def test_weight_anchor_mismatch():
    sph = Sphere(1.0)
    with pytest.raises(DimensionMismatchError):
        frechet_predict_mean(sph, [1.0], [[1, 0, 0], [0, 1, 0]])


def test_cut_locus_during_descent_names_anchor():
    # strong negative weight on one anchor pushes the iterate to its antipode
    sph = Sphere(1.0)
    anchors = np.array([[1.0, 0, 0], [np.cos(0.1), np.sin(0.1), 0.0]])
    with pytest.raises(CutLocusError, match="anchor"):
        frechet_predict_mean(
            sph, [1.0, -5.0], anchors, cfg=RgdConfig(eta=0.05, max_iter=100000)
        )


def test_nonconvergence_warns_and_flags():
    sph = Sphere(1.0)
    with pytest.warns(ConvergenceWarning):
        _, info = frechet_predict_mean(
            sph,
            [1.0, 1.0],
            [[1, 0, 0], [0, 1, 0]],
            cfg=RgdConfig(max_iter=3),
            full_output=True,
        )
    assert not info.converged
    assert info.iterations == 3


# -- transported covariance ----------------------------------------------------


def test_transport_covariance_identity():
    sph = Sphere(1.0)
    rng = np.random.default_rng(3)
    p = _sphere_point(rng)
    S = np.array([[0.5, 0.1], [0.1, 0.2]])
    out = transported_covariance(sph, S, p, p)
    assert np.allclose(out, S, atol=1e-12)


def test_transport_covariance_preserves_spectrum_and_trace():
    sph = Sphere(1.0)
    rng = np.random.default_rng(4)
    for _ in range(20):
        p, q = _sphere_point(rng), _sphere_point(rng)
        if sph.dist(p, q) > 0.9 * np.pi:
            continue
        A = rng.standard_normal((2, 2))
        S = A @ A.T + 0.1 * np.eye(2)
        out = transported_covariance(sph, S, p, q)
        assert np.allclose(
            np.linalg.eigvalsh(out), np.linalg.eigvalsh(S), atol=1e-9
        )
        assert np.trace(out) == pytest.approx(np.trace(S), abs=1e-9)


def test_transport_covariance_validation():
    sph = Sphere(1.0)
    p = np.array([1.0, 0.0, 0.0])
    q = np.array([0.0, 1.0, 0.0])
    with pytest.raises(DimensionMismatchError):
        transported_covariance(sph, np.eye(3), p, q)
    with pytest.raises(NotSPDError):
        transported_covariance(sph, np.diag([1.0, -1.0]), p, q)


# -- end-to-end prediction -------------------------------------------------------


def _sphere_traj(rng, n=12):
    t = np.linspace(0, 1, n)
    lon = 0.8 * np.pi * (t - 0.5)
    lat = 0.3 * np.sin(np.pi * t)
    means = np.column_stack(
        [np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon), np.sin(lat)]
    )
    covs = np.tile(1e-3 * np.eye(2), (n, 1, 1))
    return ProbabilisticTrajectory.from_arrays(
        t[:, None], means, covs, manifold=Sphere(1.0)
    )


def test_predict_manifold_degenerate_dataset():
    sph = Sphere(1.0)
    a = np.array([0.0, 1.0, 0.0])
    S = np.array([[2e-3, 0.0], [0.0, 1e-3]])
    traj = ProbabilisticTrajectory.from_arrays(
        np.linspace(0, 1, 4)[:, None],
        np.tile(a, (4, 1)),
        np.tile(S, (4, 1, 1)),
        manifold=sph,
    )
    model = fit(traj.inputs, config=KernelConfig(kappa=6.0, lam=1e-5))
    pred = predict_manifold(model, traj, [0.5], variant="approx")
    assert np.allclose(pred.mu, a, atol=1e-9)
    assert np.allclose(pred.sigma, S, atol=1e-9)


def test_predict_manifold_single_point_exact():
    sph = Sphere(1.0)
    a = np.array([0.0, 0.0, 1.0])
    S = np.array([[1e-3, 2e-4], [2e-4, 5e-4]])
    traj = ProbabilisticTrajectory.from_arrays(
        np.array([[0.3]]), a[None], S[None], manifold=sph
    )
    model = fit(traj.inputs, config=KernelConfig(kappa=6.0, lam=1e-8))
    pred = predict_manifold(model, traj, [0.3], variant="exact")
    assert np.allclose(pred.mu, a, atol=1e-12)
    assert np.allclose(pred.sigma, S, atol=1e-12)


def test_predict_manifold_means_stay_on_manifold():
    rng = np.random.default_rng(5)
    traj = _sphere_traj(rng)
    model = fit(traj.inputs, config=KernelConfig(kappa=30.0, lam=1e-5))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        for x in np.linspace(0, 1, 15):
            pred = predict_manifold(model, traj, [x])
            assert abs(np.linalg.norm(pred.mu) - 1.0) <= 1e-9
            np.linalg.cholesky(pred.sigma)


def test_predict_manifold_requires_manifold_data():
    rng = np.random.default_rng(6)
    traj = ProbabilisticTrajectory.from_arrays(
        np.linspace(0, 1, 4)[:, None],
        rng.standard_normal((4, 2)),
        np.tile(np.eye(2), (4, 1, 1)),
    )
    model = fit(traj.inputs, config=KernelConfig())
    with pytest.raises(ValueError):
        predict_manifold(model, traj, [0.5])


def test_euclidean_limit_of_frechet_mean():
    sph = Sphere(1.0)
    rng = np.random.default_rng(7)
    center = _sphere_point(rng)
    basis = sph.tangent_basis(center)
    anchors = np.stack(
        [
            sph.retract(center, basis.T @ (1e-3 * rng.standard_normal(2)))
            for _ in range(5)
        ]
    )
    alpha = rng.uniform(0.5, 1.5, 5)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        mu = frechet_predict_mean(sph, alpha, anchors, cfg=RgdConfig(max_iter=5000))
    lifts = np.stack([sph.log_map(anchors[0], a) for a in anchors])
    tangent_mean = alpha @ lifts / alpha.sum()
    mu_lift = sph.retract(anchors[0], tangent_mean)
    assert sph.dist(mu, mu_lift) <= 1e-6


def test_rgd_config_validation():
    with pytest.raises(ValueError):
        RgdConfig(eta=0.0)
    with pytest.raises(ValueError):
        RgdConfig(tol=-1.0)
    with pytest.raises(ValueError):
        RgdConfig(init="random")
