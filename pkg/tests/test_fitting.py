import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cdfm.errors import ValidationError
from cdfm.fitting import (VARIANCE_FLOOR, FitResult, fit_communities, fit_errors, fit_mle, fit_nce,
                          mle_objective, nce_objective, nce_terms)
from cdfm.mixtures import MixingSpec, normal_logpdf, sample_mixing


def _sample(mu, s2, n, seed):
    return sample_mixing(MixingSpec.restricted_normal(mu, s2), n, np.random.default_rng(seed))


@pytest.fixture(scope="module")
def rn_sample():
    return _sample([0.2, 0.1], 0.09, 10_000, 31)


def test_mle_recovers_mean(rn_sample):
    fit = fit_mle(rn_sample, rng=np.random.default_rng(1))
    assert np.linalg.norm(fit.mu_hat - [0.2, 0.1]) < 0.03
    np.testing.assert_allclose(np.diag(fit.sigma_hat), 0.09, atol=0.01)
    assert fit.converged


def test_mle_objective_prefers_truth(rn_sample):
    s = 0.09 * np.eye(2)
    assert mle_objective(rn_sample, [0.2, 0.1], s) >= mle_objective(rn_sample, [2.2, 0.1], s)


def test_mle_objective_matches_direct_formula():
    # oracle: scipy's multivariate normal and the standard normal disc mass
    from scipy import stats
    y = np.array([[0.1, 0.2], [-0.3, 0.0], [0.5, -0.5]])
    direct = np.sum(stats.multivariate_normal(np.zeros(2), np.eye(2)).logpdf(y)) - 3 * math.log(1 - math.exp(-0.5))
    assert mle_objective(y, np.zeros(2), np.eye(2)) == pytest.approx(direct, abs=1e-6)


def test_mle_improves_on_its_start(rn_sample):
    start = FitResult(np.array([0.0, 0.0]), 0.2 * np.eye(2), None, 0.0, False, 0)
    sub = rn_sample[:500]
    fit = fit_mle(sub, init=start, rng=np.random.default_rng(2))
    assert fit.objective_value >= mle_objective(sub, start.mu_hat, start.sigma_hat)


def test_mle_degenerate_sample_hits_floor():
    fit = fit_mle(np.tile([0.3, 0.2], (20, 1)), rng=np.random.default_rng(0), restarts=1, maxiter=300)
    assert not fit.converged
    assert np.min(np.linalg.eigvalsh(fit.sigma_hat)) <= 10 * VARIANCE_FLOOR
    np.testing.assert_allclose(fit.mu_hat, [0.3, 0.2], atol=1e-3)


def test_mle_too_few_samples():
    with pytest.raises(ValidationError):
        fit_mle([[0.1, 0.2], [0.2, 0.1]])


def test_nce_freeze_gives_minus_log_two(rng):
    a = rng.standard_normal(50)
    b = rng.standard_normal(50)
    assert nce_terms(a, a, b, b) == pytest.approx(-math.log(2.0), abs=1e-15)


def test_nce_objective_freeze_with_model_equal_noise(rng):
    # points inside the disc, model with c = 0 equal to the noise density
    y = rng.uniform(-0.5, 0.5, size=(40, 2))
    v = rng.uniform(-0.5, 0.5, size=(40, 2))
    mu, S = np.array([0.1, 0.0]), np.diag([0.2, 0.3])
    assert nce_objective(y, v, mu, S, mu, S, 0.0) == pytest.approx(-math.log(2.0), abs=1e-14)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=st.floats(-5, 5), s=st.floats(0.01, 1.0))
def test_nce_objective_nonpositive(seed, c, s):
    g = np.random.default_rng(seed)
    y, v = g.uniform(-0.7, 0.7, (30, 2)), g.normal(0, 0.5, (30, 2))
    val = nce_objective(y, v, np.zeros(2), 0.25 * np.eye(2), g.uniform(-0.5, 0.5, 2), s * np.eye(2), c)
    assert val <= 0.0


def test_nce_recovers_mean():
    y = _sample([0.3, 0.0], 0.04, 10_000, 41)
    fit = fit_nce(y, np.random.default_rng(3))
    assert np.linalg.norm(fit.mu_hat - [0.3, 0.0]) < 0.05
    np.testing.assert_allclose(np.diag(fit.sigma_hat), 0.04, atol=0.01)
    # c plays the role of -log P(Y in disc) under e^{-c} phi
    from cdfm.mixtures import disc_probability
    assert fit.c_hat == pytest.approx(math.log(disc_probability([0.3, 0.0], 0.04 * np.eye(2))), abs=0.1)


def test_nce_deterministic_given_seed():
    y = _sample([0.1, -0.2], 0.05, 500, 5)
    a = fit_nce(y, np.random.default_rng(9))
    b = fit_nce(y, np.random.default_rng(9))
    np.testing.assert_array_equal(a.mu_hat, b.mu_hat)
    assert a.c_hat == b.c_hat


def test_fit_communities_point_masses():
    mu = np.array([[0.5, 0.0], [-0.4, 0.3]])
    lam = np.repeat(mu, 15, axis=0)
    z = np.repeat([0, 1], 15)
    fits = fit_communities(lam, z, method="mle", rng=np.random.default_rng(0), restarts=1, maxiter=300)
    for k, f in enumerate(fits):
        np.testing.assert_allclose(f.mu_hat, mu[k], atol=1e-3)
        assert not f.converged


def test_fit_communities_single_matches_single_fit():
    y = _sample([0.1, 0.1], 0.05, 300, 8)
    a = fit_communities(y, np.zeros(300, int), "nce", rng=np.random.default_rng(4))[0]
    b = fit_nce(y, np.random.default_rng(4))
    np.testing.assert_array_equal(a.mu_hat, b.mu_hat)


def test_fit_communities_errors():
    with pytest.raises(ValidationError):
        fit_communities(np.zeros((4, 2)), [0, 0, 0, 1], "mle")
    with pytest.raises(ValidationError):
        fit_communities(np.zeros((4, 2)), [0, 0, 0, 0], "em")


def test_fit_errors_metrics():
    fits = [FitResult(np.array([0.3, 0.4]), np.diag([0.1, 0.1]), None, 0.0, True, 1),
            FitResult(np.array([0.0, 0.0]), np.diag([0.09, 0.09]), None, 0.0, True, 1)]
    out = fit_errors(fits, [[0.0, 0.0], [0.0, 0.0]], 0.09)
    assert out["mean_errors"] == pytest.approx([0.5, 0.0])
    assert out["variance_errors"][0] == pytest.approx(math.sqrt(2) * 0.01)
    assert out["avg_mean_error"] == pytest.approx(0.25)


def test_normal_logpdf_matches_scipy(rng):
    from scipy import stats
    S = np.array([[0.3, 0.1], [0.1, 0.2]])
    x = rng.standard_normal((5, 2))
    np.testing.assert_allclose(normal_logpdf(x, [0.1, 0.2], S),
                               stats.multivariate_normal([0.1, 0.2], S).logpdf(x), atol=1e-12)
