import numpy as np
import pytest

from struct_imitate import KernelConfig, alpha_weights, fit, gram_matrix, kernel_eval
from struct_imitate.errors import (
    ConditioningWarning,
    DimensionMismatchError,
    SingularSystemError,
)
from struct_imitate.kernels import regularized_factor


def test_kernel_eval_zero_distance():
    cfg = KernelConfig(kappa=6.0)
    assert kernel_eval([1.0, 2.0, -0.5], [1.0, 2.0, -0.5], cfg) == 1.0


def test_kernel_eval_unit_distance():
    cfg = KernelConfig(kappa=6.0)
    assert kernel_eval([0.0], [1.0], cfg) == pytest.approx(np.exp(-6.0), rel=1e-15)


def test_kernel_eval_symmetry():
    cfg = KernelConfig(kappa=2.5)
    rng = np.random.default_rng(0)
    for _ in range(20):
        a, b = rng.standard_normal(3), rng.standard_normal(3)
        assert kernel_eval(a, b, cfg) == kernel_eval(b, a, cfg)


def test_kernel_eval_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        kernel_eval([0.0, 1.0], [0.0], KernelConfig())


def test_config_validation():
    with pytest.raises(ValueError):
        KernelConfig(kappa=0.0)
    with pytest.raises(ValueError):
        KernelConfig(lam=-1.0)
    with pytest.raises(ValueError):
        KernelConfig(kind="matern")


def test_gram_single_input():
    K = gram_matrix([[0.3]], KernelConfig())
    assert K.shape == (1, 1)
    assert K[0, 0] == 1.0


def test_gram_identical_inputs():
    K = gram_matrix([[1.0, 2.0], [1.0, 2.0]], KernelConfig())
    assert np.array_equal(K, np.ones((2, 2)))


def test_gram_symmetric_psd():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((50, 2))
    K = gram_matrix(X, KernelConfig(kappa=1.3))
    assert np.array_equal(K, K.T)
    assert np.all(np.diag(K) == 1.0)
    assert np.linalg.eigvalsh(K).min() >= -1e-10


def test_gram_empty_error():
    with pytest.raises(DimensionMismatchError):
        gram_matrix(np.zeros((0, 2)), KernelConfig())


def test_alpha_single_point_analytic():
    model = fit([[0.0]], config=KernelConfig(kappa=6.0, lam=0.5))
    alpha = alpha_weights(model, [0.0])
    assert alpha[0] == pytest.approx(2.0 / 3.0, rel=1e-14)


def test_alpha_interpolation_limit():
    rng = np.random.default_rng(2)
    X = rng.uniform(-2, 2, size=(8, 2))
    mus = rng.standard_normal((8, 3))
    model = fit(X, config=KernelConfig(kappa=1.0, lam=1e-12))
    for i in range(8):
        alpha = alpha_weights(model, X[i])
        assert np.linalg.norm(alpha @ mus - mus[i]) < 1e-6


def test_alpha_matches_dense_solve():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((12, 2))
    w = rng.uniform(1.0, 4.0, 12)
    cfg = KernelConfig(kappa=0.8, lam=1e-4)
    model = fit(X, row_weights=w, config=cfg)
    K = gram_matrix(X, cfg)
    A = w[:, None] * K + w.sum() * cfg.lam * np.eye(12)
    for _ in range(5):
        x = rng.standard_normal(2)
        kx = w * np.exp(-cfg.kappa * np.sum((X - x) ** 2, axis=1))
        expected = np.linalg.solve(A, kx)
        assert np.allclose(alpha_weights(model, x), expected, atol=1e-12)


def test_alpha_residual_property():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((20, 3))
    w = rng.uniform(1.0, 10.0, 20)
    cfg = KernelConfig(kappa=2.0, lam=1e-5)
    model = fit(X, row_weights=w, config=cfg)
    K = gram_matrix(X, cfg)
    A = w[:, None] * K + w.sum() * cfg.lam * np.eye(20)
    for _ in range(10):
        x = rng.standard_normal(3)
        kx = w * np.exp(-cfg.kappa * np.sum((X - x) ** 2, axis=1))
        alpha = alpha_weights(model, x)
        assert np.linalg.norm(A @ alpha - kx) <= 1e-9 * np.linalg.norm(kx)


def test_unit_weights_match_unweighted():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((9, 1))
    cfg = KernelConfig(kappa=3.0, lam=1e-3)
    m1 = fit(X, config=cfg)
    m2 = fit(X, row_weights=np.ones(9), config=cfg)
    x = rng.standard_normal(1)
    assert np.array_equal(alpha_weights(m1, x), alpha_weights(m2, x))


def test_row_weight_rescaling_no_silent_normalization():
    rng = np.random.default_rng(6)
    X = rng.standard_normal((10, 2))
    w = rng.uniform(1.0, 5.0, 10)
    c = 3.7
    cfg = KernelConfig(kappa=1.0, lam=1e-4)
    model = fit(X, row_weights=c * w, config=cfg)
    K = gram_matrix(X, cfg)
    A = (c * w)[:, None] * K + (c * w).sum() * cfg.lam * np.eye(10)
    x = rng.standard_normal(2)
    kx = c * w * np.exp(-cfg.kappa * np.sum((X - x) ** 2, axis=1))
    assert np.linalg.norm(alpha_weights(model, x) - np.linalg.solve(A, kx)) <= 1e-9


def test_fit_deterministic():
    rng = np.random.default_rng(7)
    X = rng.standard_normal((30, 2))
    cfg = KernelConfig(kappa=1.5, lam=1e-6)
    x = rng.standard_normal(2)
    a1 = alpha_weights(fit(X, config=cfg), x)
    a2 = alpha_weights(fit(X, config=cfg), x)
    assert np.max(np.abs(a1 - a2)) <= 1e-12


def test_duplicate_inputs_trigger_jitter_warning():
    X = np.array([[0.0], [0.0], [1.0]])
    with pytest.warns(ConditioningWarning):
        model = fit(X, config=KernelConfig(kappa=6.0, lam=1e-14))
    alpha = alpha_weights(model, [0.0])
    assert np.all(np.isfinite(alpha))


def test_singular_beyond_tolerance_raises():
    bad = np.full((3, 3), np.nan)
    with pytest.warns(ConditioningWarning):
        with pytest.raises(SingularSystemError):
            regularized_factor(bad)


def test_fit_input_validation():
    with pytest.raises(DimensionMismatchError):
        fit([[0.0], [1.0]], row_weights=[1.0])
    with pytest.raises(ValueError):
        fit([[0.0], [1.0]], row_weights=[1.0, -2.0])
    with pytest.raises(ValueError):
        fit([[np.inf]])


def test_alpha_query_dimension_check():
    model = fit([[0.0, 1.0]])
    with pytest.raises(DimensionMismatchError):
        alpha_weights(model, [0.0])
