import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cdfm._linalg import numerical_rank, spectral_radius
from cdfm.errors import IsolatedNodeError, ValidationError
from cdfm.model import Membership
from cdfm.netvar import (WsbmVarConfig, cdfm_rewrite, empirical_c_values, expected_c_values,
                         sample_wsbm, simulate_averaged, simulate_wsbm_var, transition_matrix,
                         weak_factor_table)


def _config(sizes, B, phi=0.5, low=1.0, high=1.0):
    z = np.repeat(np.arange(len(sizes)), sizes)
    return WsbmVarConfig(Membership(z, len(sizes)), np.asarray(B, dtype=float), phi, low, high)


def test_config_validation():
    with pytest.raises(ValidationError):
        _config([2, 2], [[0.5, 0.2], [0.3, 0.5]])
    with pytest.raises(ValidationError):
        _config([2, 2], [[1.5, 0.2], [0.2, 0.5]])
    with pytest.raises(ValidationError):
        _config([2, 2], np.eye(2), low=2.0, high=1.0)


def test_complete_graph(rng):
    cfg = _config([6], [[1.0]])
    A, deg = sample_wsbm(cfg, rng)
    np.testing.assert_array_equal(A, np.ones((6, 6)) - np.eye(6))
    np.testing.assert_array_equal(deg, np.full(6, 5.0))


def test_empty_graph_is_an_error(rng):
    with pytest.raises(IsolatedNodeError):
        sample_wsbm(_config([3, 3], np.zeros((2, 2))), rng, max_resamples=3)


def test_within_block_density(rng):
    cfg = _config([100, 100], [[0.8, 0.1], [0.1, 0.8]])
    A, _ = sample_wsbm(cfg, rng)
    block = A[:100, :100]
    dens = block[np.triu_indices(100, 1)].mean()
    assert abs(dens - 0.8) < 0.05
    assert abs(A[:100, 100:].mean() - 0.1) < 0.05
    assert np.all(A == A.T) and np.all(np.diag(A) == 0)


def test_weights_in_range(rng):
    A, _ = sample_wsbm(_config([20, 20], [[0.9, 0.5], [0.5, 0.9]], low=0.5, high=2.0), rng)
    w = A[A > 0]
    assert w.min() >= 0.5 and w.max() <= 2.0


def test_phi_zero_gives_white_noise(rng):
    cfg = _config([5, 5], [[0.9, 0.2], [0.2, 0.9]], phi=0.0)
    Y, psi = simulate_wsbm_var(cfg, 20_000, rng)
    assert np.all(psi == 0)
    np.testing.assert_allclose(Y.T @ Y / len(Y), np.eye(10), atol=0.05)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), p=st.floats(0.2, 1.0))
def test_normalized_adjacency_radius_at_most_one(seed, p):
    cfg = _config([8, 7], [[p, 0.3], [0.3, p]], low=0.2, high=3.0)
    A, deg = sample_wsbm(cfg, np.random.default_rng(seed))
    assert spectral_radius(transition_matrix(A, deg, 1.0)) <= 1.0 + 1e-12


def test_yule_walker(rng):
    cfg = _config([10, 10], [[0.7, 0.1], [0.1, 0.7]], phi=0.5)
    Y, psi = simulate_wsbm_var(cfg, 100_000, rng)
    Y = Y - Y.mean(axis=0)
    g0 = Y.T @ Y / len(Y)
    g1 = Y[1:].T @ Y[:-1] / (len(Y) - 1)
    assert np.max(np.abs(g1 - psi @ g0)) < 0.05


def test_rewrite_gram_example():
    cfg = _config([2, 2], [[0.6, 0.2], [0.2, 0.6]], phi=0.5)
    avg = cdfm_rewrite(cfg, [2.0, 2.0])
    np.testing.assert_allclose(avg.gram, np.diag([0.0625, 0.0625]), atol=1e-15)


def test_rewrite_single_block():
    cfg = _config([7], [[0.4]], phi=0.8, low=1.0, high=3.0)
    avg = cdfm_rewrite(cfg, [1.5])
    np.testing.assert_allclose(avg.psi_bar, 0.8 * 2.0 * 0.4 / (7 * 1.5) * np.ones((7, 7)), atol=1e-15)
    assert numerical_rank(avg.psi_bar) == 1


def test_rewrite_rejects_bad_c():
    with pytest.raises(ValidationError):
        cdfm_rewrite(_config([2, 2], np.eye(2)), [1.0, 0.0])


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), K=st.integers(1, 4))
def test_rewrite_structure(seed, K):
    g = np.random.default_rng(seed)
    sizes = g.integers(2, 12, K)
    B = g.uniform(0.05, 1.0, (K, K))
    B = (B + B.T) / 2
    cfg = _config(sizes, B, phi=g.uniform(0.1, 0.9), low=0.5, high=1.5)
    c = g.uniform(0.2, 2.0, K)
    avg = cdfm_rewrite(cfg, c)
    d = sizes.sum()
    assert numerical_rank(avg.psi_bar) <= K
    # L'L = diag(n_k phi^2 mu_W^2 / (C_k d))
    np.testing.assert_allclose(avg.gram, np.diag(sizes * (cfg.phi * cfg.mu_w) ** 2 / (c * d)), atol=1e-14)
    # Psi_bar y = L (G y) for any y
    y = g.standard_normal(d)
    np.testing.assert_allclose(avg.psi_bar @ y, avg.loadings @ (avg.factor_map @ y), atol=1e-13)
    np.testing.assert_allclose(avg.phi_mat, avg.factor_map @ avg.loadings, atol=1e-14)
    np.testing.assert_allclose(avg.eta_cov, avg.factor_map @ avg.factor_map.T, atol=1e-14)
    # every row of L is one of K points
    assert np.unique(np.round(avg.loadings, 12), axis=0).shape[0] <= K


def test_factor_recursion_residual(rng):
    cfg = _config([15, 25], [[0.8, 0.2], [0.2, 0.6]], phi=0.9)
    avg = cdfm_rewrite(cfg, expected_c_values(cfg))
    Y, F, xi = simulate_averaged(avg, 200, rng)
    # f_t = Phi f_{t-1} + eta_t with eta_t = G xi_{t-1}
    eta = F[1:] - F[:-1] @ avg.phi_mat.T
    np.testing.assert_allclose(eta, xi[:-1] @ avg.factor_map.T, atol=1e-12)
    # Y_t = L f_t + xi_t
    np.testing.assert_allclose(Y, F @ avg.loadings.T + xi, atol=1e-12)


def test_c_values(rng):
    cfg = _config([100, 100], [[0.8, 0.1], [0.1, 0.8]])
    _, deg = sample_wsbm(cfg, rng)
    emp = empirical_c_values(deg, cfg.membership)
    exp = expected_c_values(cfg)
    np.testing.assert_allclose(exp, (0.8 * 99 + 0.1 * 100) / 200)
    np.testing.assert_allclose(emp, exp, rtol=0.03)


def test_very_weak_factors():
    rows = weak_factor_table([0.5, 0.5], [[0.8, 0.1], [0.1, 0.8]], 0.5, [100, 400, 1600])
    tr = np.array([r["trace"] for r in rows])
    assert tr.max() / tr.min() <= 2.0
    assert all(r["rank_psi_bar"] <= 2 for r in rows)
