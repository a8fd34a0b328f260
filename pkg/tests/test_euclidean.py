import numpy as np
import pytest
from scipy.optimize import minimize

from struct_imitate import (
    ImitationMode,
    KernelConfig,
    ProbabilisticTrajectory,
    SuperpositionSet,
    alpha_weights,
    fit,
    predict,
    predict_cov_kl,
    predict_cov_rkl,
    predict_mean_kl,
    predict_mean_rkl,
    superpose_predict,
)
from struct_imitate.errors import (
    DegenerateWeightsError,
    DimensionMismatchError,
    NegativeWeightsWarning,
    SingularSystemError,
)
from struct_imitate.euclidean import finalize_covariance


def _random_spd(rng, o):
    A = rng.standard_normal((o, o))
    return A @ A.T + 0.5 * np.eye(o)


def test_mean_kl_symmetry():
    assert predict_mean_kl([0.5, 0.5], [[0.0], [2.0]])[0] == pytest.approx(1.0)


def test_mean_kl_constant_means():
    rng = np.random.default_rng(0)
    mu = np.array([1.5, -2.0])
    alpha = rng.uniform(0.1, 2.0, 6)
    out = predict_mean_kl(alpha, np.tile(mu, (6, 1)))
    assert np.allclose(out, mu, rtol=1e-14)


def test_mean_kl_hand_value():
    assert predict_mean_kl([2.0, 1.0], [[0.0], [3.0]])[0] == pytest.approx(1.0)


def test_mean_kl_degenerate_weights():
    with pytest.raises(DegenerateWeightsError):
        predict_mean_kl([1.0, -1.0], [[0.0], [1.0]])


def test_cov_kl_constant_inputs():
    sigma = np.array([[2.0, 0.1], [0.1, 1.0]])
    mu = np.array([1.0, 2.0])
    out = predict_cov_kl(
        [0.3, 0.7], np.tile(mu, (2, 1)), np.tile(sigma, (2, 1, 1)), mu, "approximate"
    )
    assert np.allclose(out, sigma, rtol=1e-14)


def test_cov_kl_single_point_exact():
    sigma = np.array([[1.5]])
    out = predict_cov_kl([1.0], [[2.0]], sigma[None], np.array([2.0]), "exact")
    assert np.allclose(out, sigma)


def test_cov_kl_scalar_average():
    out = predict_cov_kl(
        [0.5, 0.5],
        [[0.0], [0.0]],
        np.array([[[1.0]], [[3.0]]]),
        np.array([0.0]),
        "approximate",
    )
    assert out[0, 0] == pytest.approx(2.0)


def test_mean_rkl_equal_covs_matches_kl():
    rng = np.random.default_rng(1)
    alpha = rng.uniform(0.1, 1.0, 5)
    means = rng.standard_normal((5, 3))
    covs = np.tile(_random_spd(rng, 3), (5, 1, 1))
    kl = predict_mean_kl(alpha, means)
    rkl = predict_mean_rkl(alpha, means, covs)
    assert np.allclose(kl, rkl, atol=1e-10)


def test_mean_rkl_hand_value():
    out = predict_mean_rkl(
        [1.0, 1.0], [[0.0], [5.0]], np.array([[[1.0]], [[4.0]]])
    )
    assert out[0] == pytest.approx(1.0, rel=1e-12)


def test_mean_rkl_single_point():
    out = predict_mean_rkl([1.0], [[3.0, -1.0]], np.eye(2)[None] * 0.3)
    assert np.allclose(out, [3.0, -1.0])


def test_cov_rkl_single_point():
    sigma = np.array([[2.0, 0.4], [0.4, 1.0]])
    assert np.allclose(predict_cov_rkl([1.0], sigma[None]), sigma, rtol=1e-12)


def test_cov_rkl_hand_value():
    out = predict_cov_rkl([1.0, 1.0], np.array([[[1.0]], [[4.0]]]))
    assert out[0, 0] == pytest.approx(1.6, rel=1e-12)


def test_cov_rkl_constant():
    rng = np.random.default_rng(2)
    sigma = _random_spd(rng, 2)
    out = predict_cov_rkl(rng.uniform(0.1, 1.0, 4), np.tile(sigma, (4, 1, 1)))
    assert np.allclose(out, sigma, rtol=1e-10)


def test_rkl_singular_precision_sum():
    with pytest.raises(SingularSystemError):
        predict_mean_rkl([1.0, -1.0], [[0.0], [1.0]], np.tile(np.eye(1), (2, 1, 1)))


@pytest.mark.parametrize("c", [3.7, -2.1])
def test_scale_invariance(c):
    rng = np.random.default_rng(3)
    alpha = rng.uniform(0.2, 1.0, 4)
    means = rng.standard_normal((4, 2))
    covs = np.stack([_random_spd(rng, 2) for _ in range(4)])
    mu = predict_mean_kl(alpha, means)
    assert np.allclose(mu, predict_mean_kl(c * alpha, means), rtol=1e-10)
    for variant in ("exact", "approximate"):
        assert np.allclose(
            predict_cov_kl(alpha, means, covs, mu, variant),
            predict_cov_kl(c * alpha, means, covs, mu, variant),
            rtol=1e-10,
        )
    assert np.allclose(
        predict_mean_rkl(alpha, means, covs),
        predict_mean_rkl(c * alpha, means, covs),
        rtol=1e-10,
    )
    assert np.allclose(
        predict_cov_rkl(alpha, covs), predict_cov_rkl(c * alpha, covs), rtol=1e-10
    )


def test_stationarity_against_grid():
    rng = np.random.default_rng(4)
    for _ in range(10):
        n = rng.integers(2, 5)
        o = rng.integers(1, 3)
        alpha = rng.uniform(0.1, 1.0, n)
        means = rng.standard_normal((n, o))
        covs = np.stack([_random_spd(rng, o) for _ in range(n)])
        sigma = _random_spd(rng, o)

        kl_mu = predict_mean_kl(alpha, means)
        rkl_mu = predict_mean_rkl(alpha, means, covs)

        def kl_obj(mu):
            d = mu[None, :] - means
            return float(np.sum(alpha * np.einsum("ni,ij,nj->n", d, np.linalg.inv(sigma), d)))

        def rkl_obj(mu):
            d = mu[None, :] - means
            precs = np.linalg.inv(covs)
            return float(np.sum(alpha * np.einsum("ni,nij,nj->n", d, precs, d)))

        span = np.linspace(-0.5, 0.5, 21)
        offsets = (
            span[:, None]
            if o == 1
            else np.stack(np.meshgrid(span, span), axis=-1).reshape(-1, 2)
        )
        assert kl_obj(kl_mu) <= min(kl_obj(kl_mu + d) for d in offsets) + 1e-12
        assert rkl_obj(rkl_mu) <= min(rkl_obj(rkl_mu + d) for d in offsets) + 1e-12


def test_spd_preservation_and_symmetry():
    rng = np.random.default_rng(5)
    alpha = rng.uniform(0.1, 1.0, 6)
    means = rng.standard_normal((6, 3))
    covs = np.stack([_random_spd(rng, 3) for _ in range(6)])
    mu = predict_mean_kl(alpha, means)
    for sigma in (
        predict_cov_kl(alpha, means, covs, mu, "exact"),
        predict_cov_kl(alpha, means, covs, mu, "approximate"),
        predict_cov_rkl(alpha, covs),
    ):
        sym, _ = finalize_covariance(sigma, alpha)
        assert np.array_equal(sym, sym.T)
        np.linalg.cholesky(sym)


def test_finalize_clamps_with_negative_weights():
    indefinite = np.diag([1.0, -0.5])
    with pytest.warns(NegativeWeightsWarning):
        out, clamped = finalize_covariance(indefinite, np.array([1.0, -0.5]))
    assert clamped
    assert np.linalg.eigvalsh(out).min() >= 0


def _make_traj(rng, n=10, o=2, spread=1.0):
    t = np.linspace(0, 1, n)
    means = spread * rng.standard_normal((n, o))
    covs = np.stack([_random_spd(rng, o) for _ in range(n)])
    return ProbabilisticTrajectory.from_arrays(t[:, None], means, covs)


def test_predict_requires_matching_model():
    rng = np.random.default_rng(6)
    traj = _make_traj(rng)
    model = fit(traj.inputs[:-1], config=KernelConfig())
    with pytest.raises(DimensionMismatchError):
        predict(model, traj, ImitationMode("kl"), [0.5])


def test_predict_dispatch_kl_vs_rkl():
    rng = np.random.default_rng(7)
    traj = _make_traj(rng)
    model = fit(traj.inputs, config=KernelConfig(kappa=20.0, lam=1e-4))
    x = [0.35]
    alpha = alpha_weights(model, x)
    p_kl = predict(model, traj, ImitationMode("kl"), x)
    assert np.allclose(p_kl.mu, predict_mean_kl(alpha, traj.means))
    p_rkl = predict(model, traj, ImitationMode("rkl"), x)
    assert np.allclose(
        p_rkl.mu, predict_mean_rkl(alpha, traj.means, traj.covariances)
    )


def test_superpose_vanishing_priority_matches_single():
    rng = np.random.default_rng(8)
    t1 = _make_traj(rng)
    t2 = _make_traj(rng)
    sup = SuperpositionSet(trajectories=(t1, t2), priorities=[1.0, 0.0])
    model = fit(t1.inputs, config=KernelConfig(kappa=10.0, lam=1e-4))
    for mode in (ImitationMode("kl"), ImitationMode("rkl")):
        a = superpose_predict(model, sup, mode, [0.4])
        b = predict(model, t1, mode, [0.4])
        assert np.allclose(a.mu, b.mu, atol=1e-12)
        assert np.allclose(a.sigma, b.sigma, atol=1e-12)


def test_superpose_duplicate_trajectories():
    rng = np.random.default_rng(9)
    t1 = _make_traj(rng)
    sup = SuperpositionSet(trajectories=(t1, t1), priorities=[0.3, 0.7])
    model = fit(t1.inputs, config=KernelConfig(kappa=10.0, lam=1e-4))
    a = superpose_predict(model, sup, ImitationMode("kl"), [0.6])
    b = predict(model, t1, ImitationMode("kl"), [0.6])
    assert np.allclose(a.mu, b.mu)
    assert np.allclose(a.sigma, b.sigma)


def test_superpose_kl_mean_symmetry():
    n = 8
    t = np.linspace(0, 1, n)
    covs = np.tile(np.eye(1) * 0.1, (n, 1, 1))
    t0 = ProbabilisticTrajectory.from_arrays(t[:, None], np.zeros((n, 1)), covs)
    t2 = ProbabilisticTrajectory.from_arrays(t[:, None], 2 * np.ones((n, 1)), covs)
    sup = SuperpositionSet(trajectories=(t0, t2), priorities=[0.5, 0.5])
    model = fit(t0.inputs, config=KernelConfig(kappa=6.0, lam=1e-5))
    for x in np.linspace(0, 1, 7):
        out = superpose_predict(model, sup, ImitationMode("kl"), [x])
        assert out.mu[0] == pytest.approx(1.0, abs=1e-9)


def test_superpose_rkl_matches_numeric_minimizer():
    rng = np.random.default_rng(10)
    t1 = _make_traj(rng, n=6)
    t2 = _make_traj(rng, n=6)
    sup = SuperpositionSet(trajectories=(t1, t2), priorities=[0.3, 0.7])
    model = fit(t1.inputs, config=KernelConfig(kappa=6.0, lam=1e-4))
    x = [0.37]
    pred = superpose_predict(model, sup, ImitationMode("rkl"), x)
    alpha = alpha_weights(model, x)

    def objective(mu):
        total = 0.0
        for w, tr in zip(sup.priorities, sup.trajectories):
            d = mu[None, :] - tr.means
            precs = np.linalg.inv(tr.covariances)
            total += w * float(np.sum(alpha * np.einsum("ni,nij,nj->n", d, precs, d)))
        return total

    res = minimize(
        objective,
        pred.mu + 0.5,
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 5000},
    )
    assert np.linalg.norm(pred.mu - res.x) < 1e-6


def test_superpose_grid_mismatch():
    rng = np.random.default_rng(11)
    t1 = _make_traj(rng)
    sup = SuperpositionSet(trajectories=(t1,), priorities=[1.0])
    model = fit(t1.inputs[:-2], config=KernelConfig())
    with pytest.raises(DimensionMismatchError):
        superpose_predict(model, sup, ImitationMode("kl"), [0.5])


def test_mode_validation():
    with pytest.raises(ValueError):
        ImitationMode("js")
    with pytest.raises(ValueError):
        ImitationMode("kl", kl_cov_variant="loose")
