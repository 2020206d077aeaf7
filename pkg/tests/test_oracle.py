import numpy as np
import pytest

from spfim import matrixcore as mc
from spfim import models
from spfim.errors import OracleError, ValidationError
from spfim.oracle import (
    FDConfig,
    fd_gradient,
    fd_hessian,
    mc_true_fim,
    mc_true_fim_accumulator,
    relative_spectral_error,
    typical_index,
)

from conftest import random_spd


def test_fd_gradient_of_quadratic(rng):
    a = random_spd(rng, 4).dense()
    theta = rng.standard_normal(4)
    g = fd_gradient(lambda t: -0.5 * t @ a @ t, theta)
    np.testing.assert_allclose(g, -a @ theta, rtol=1e-9, atol=1e-9)


def test_fd_hessian_of_quadratic(rng):
    a = random_spd(rng, 3)
    h = fd_hessian(lambda t: -0.5 * t @ a.dense() @ t, rng.standard_normal(3))
    np.testing.assert_allclose(h.dense(), -a.dense(), rtol=1e-6)


def test_fd_hessian_scalar_gaussian_closed_form(rng):
    m = models.ScalarGaussian(0.3, 2.0, 8)
    z = m.sample(rng)
    h = fd_hessian(lambda t: m.loglik(t, z), m.theta)
    exact = m.hessian_per_datum(m.theta, z).sum(axis=0)
    np.testing.assert_allclose(h.dense(), exact, rtol=1e-5, atol=1e-6)


def test_fd_error_shrinks_quadratically():
    f = np.sin
    x = np.array([0.7])
    errs = [abs(fd_gradient(lambda t: f(t[0]), x, FDConfig(h))[0] - np.cos(0.7)) for h in (1e-2, 1e-3)]
    assert errs[0] / errs[1] == pytest.approx(100, rel=0.05)


def test_fd_failures_are_reported():
    with pytest.raises(OracleError):
        fd_gradient(lambda t: np.nan, np.zeros(2))
    with pytest.raises(OracleError):
        fd_gradient(lambda t: 1.0 / 0.0, np.zeros(2))
    with pytest.raises(ValidationError):
        FDConfig(step=0.0)


def test_mc_true_fim_known_variance_is_exact():
    m = models.ScalarGaussian(0.0, 1.0, 10, known_variance=True)
    f = mc_true_fim(m, m.theta, 100, seed=1)
    assert f.get(0, 0) == pytest.approx(10.0, rel=1e-12)


def test_mc_true_fim_scalar_gaussian():
    m = models.ScalarGaussian(0.0, 4.0, 1)
    f = mc_true_fim(m, m.theta, 200_000, seed=2)
    np.testing.assert_allclose(np.diag(f.dense()), [0.25, 1 / 32], rtol=0.01)
    assert abs(f.get(0, 1)) < 3 * np.sqrt(1 / 4**3 / 200_000)


def test_mc_true_fim_error_shrinks_like_inverse_root():
    m = models.ScalarGaussian(0.0, 4.0, 1)
    exact = np.array([0.25, 0, 1 / 32])
    spread = []
    for r in (1_000, 16_000):
        errs = [np.abs(mc_true_fim(m, m.theta, r, seed=s).packed - exact)[2] for s in range(30)]
        spread.append(np.sqrt(np.mean(np.square(errs))))
    assert spread[0] / spread[1] == pytest.approx(4.0, rel=0.4)


def test_mc_true_fim_spn_close_to_analytic():
    m = models.spn_model(np.zeros(3), models.default_sigma(),
                         models.scaled_noise_covariances(5, np.random.default_rng(3)))
    f, acc = mc_true_fim_accumulator(m, m.theta, 20_000, seed=4)
    se = np.sqrt(acc.variance / acc.count)
    exact = m.analytic_fim().packed
    # the mean block is constant, so its spread is finite-difference roundoff only
    assert np.all(np.abs(f.packed - exact) <= 4 * se + 1e-9 * np.abs(exact).max())


def test_mc_true_fim_worker_invariant(mixture):
    ref = mc_true_fim(mixture, mixture.theta, 5000, seed=9)
    assert mc_true_fim(mixture, mixture.theta, 5000, seed=9, workers=2) == ref


def test_relative_error_examples():
    t = mc.sym_from_packed([2.0, 0.5, 1.0], 2)
    assert relative_spectral_error(t, t) == 0.0
    z = mc.sym_from_packed([0.0, 0.0, 0.0], 2)
    assert relative_spectral_error(z, t) == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        relative_spectral_error(t, z)


def test_typical_index():
    errs = np.arange(50.0)[::-1].copy()
    assert typical_index(errs) == 24
    assert typical_index([3.0, 1.0, 2.0], rank=1) == 0
    with pytest.raises(ValidationError):
        typical_index([1.0], rank=2)
