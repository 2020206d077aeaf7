"""Statistical models exposing pseudo-data sampling and per-datum scores.

All gradient methods are vectorized. ``theta`` may carry leading batch axes
and a datum axis: an array of shape ``(..., n or 1, p)`` is evaluated
against data ``z`` of shape ``(..., n, d)`` and yields per-datum scores of
shape ``(..., n, p)``. A plain ``(p,)`` vector broadcasts against any data.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod

import numpy as np

from . import matrixcore as mc
from .errors import DimensionError, NotPositiveDefiniteError, ValidationError

_LOG_2PI = math.log(2.0 * math.pi)


class Model(ABC):
    """Base class for models with independent data ``z_1..z_n``.

    Subclasses set ``theta`` (nominal parameter vector), ``n`` and
    ``data_dim`` and implement :meth:`sample_batch`, :meth:`grad_per_datum`
    and :meth:`loglik_per_datum`.
    """

    theta: np.ndarray
    n: int
    data_dim: int
    parameter_names: tuple[str, ...]

    @property
    def p(self) -> int:
        return self.theta.shape[0]

    @abstractmethod
    def sample_batch(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """``size`` independent pseudo datasets, shape ``(size, n, data_dim)``."""

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """Pseudo dataset of shape ``(n, data_dim)`` drawn at the nominal theta."""
        return self.sample_batch(rng, 1)[0]

    @abstractmethod
    def grad_per_datum(self, theta, z) -> np.ndarray:
        ...

    @abstractmethod
    def loglik_per_datum(self, theta, z) -> np.ndarray:
        ...

    def grad_total(self, theta, z) -> np.ndarray:
        """Score of the whole dataset; ``theta`` is ``(..., p)``, no datum axis."""
        theta = np.asarray(theta, dtype=float)
        return self.grad_per_datum(theta[..., None, :], z).sum(axis=-2)

    def loglik(self, theta, z) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return self.loglik_per_datum(theta[..., None, :], z).sum(axis=-1)

    def hessian_per_datum(self, theta, z, step: float = 1e-5) -> np.ndarray:
        """Per-datum Hessians ``(..., n, p, p)`` by central differences of the score.

        Subclasses with a closed form override this.
        """
        theta = np.asarray(theta, dtype=float)
        p = theta.shape[-1]
        cols = []
        for j in range(p):
            e = np.zeros(p)
            e[j] = step
            cols.append((self.grad_per_datum(theta + e, z) - self.grad_per_datum(theta - e, z)) / (2.0 * step))
        h = np.stack(cols, axis=-1)
        return 0.5 * (h + np.swapaxes(h, -1, -2))

    def analytic_fim(self) -> mc.SymmetricMatrix:
        raise NotImplementedError(f"{type(self).__name__} has no closed-form FIM")

    def _check_data(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.ndim < 2 or z.shape[-1] != self.data_dim:
            raise DimensionError(f"data must have shape (..., n, {self.data_dim}), got {z.shape}")
        return z


def _batched_inverse_spd(s: np.ndarray) -> np.ndarray:
    """Inverse of a stack of SPD matrices; raises on any non-SPD member."""
    try:
        np.linalg.cholesky(s)
    except np.linalg.LinAlgError:
        bad = np.argwhere(np.linalg.eigvalsh(s)[..., 0] <= 0.0)
        index = tuple(int(i) for i in bad[0]) if len(bad) else None
        raise NotPositiveDefiniteError(
            f"covariance Sigma + P_t is not positive definite at batch index {index}", index
        ) from None
    return np.linalg.inv(s)


class SignalPlusNoise(Model):
    """``z_t ~ N(mu, Sigma + P_t)`` with known noise covariances ``P_t``.

    ``theta`` packs ``mu`` first and then the upper triangle of ``Sigma`` in
    row-major order; for ``d = 3`` that is
    ``[mu1, mu2, mu3, S11, S12, S13, S22, S23, S33]``.
    """

    def __init__(self, mu, sigma: mc.SymmetricMatrix, noise_covs):
        mu = np.asarray(mu, dtype=float)
        d = mu.shape[0]
        if sigma.dim != d:
            raise DimensionError(f"Sigma is {sigma.dim}x{sigma.dim} but mu has length {d}")
        noise = np.asarray(noise_covs, dtype=float)
        if noise.ndim != 3 or noise.shape[1:] != (d, d):
            raise DimensionError(f"noise covariances must have shape (n, {d}, {d})")
        if not np.allclose(noise, np.swapaxes(noise, 1, 2), rtol=0, atol=1e-12):
            raise ValidationError("noise covariances must be symmetric")
        self.mu = mu
        self.sigma = sigma
        self.noise_covs = noise
        self.n = noise.shape[0]
        self.data_dim = d
        self.theta = np.concatenate([mu, sigma.packed])
        rows, cols = mc.triu_indices(d)
        self.parameter_names = tuple(f"mu{i + 1}" for i in range(d)) + tuple(
            f"Sigma{r + 1}{c + 1}" for r, c in zip(rows, cols)
        )
        # off-diagonal Sigma coordinates appear twice in the matrix
        self._sigma_mult = np.where(rows == cols, 1.0, 2.0)
        self._cov = sigma.dense() + noise
        for t in range(self.n):
            try:
                mc.cholesky(mc.SymmetricMatrix.from_dense(self._cov[t], atol=1e-12))
            except NotPositiveDefiniteError as exc:
                raise NotPositiveDefiniteError(f"Sigma + P_{t + 1} is not SPD: {exc}", t) from None
        self._chol = np.linalg.cholesky(self._cov)

    def _split(self, theta):
        d = self.data_dim
        return theta[..., :d], mc.unpack(theta[..., d:])

    def sample_batch(self, rng, size):
        w = rng.standard_normal((size, self.n, self.data_dim))
        return self.mu + np.einsum("tij,btj->bti", self._chol, w)

    def _inverse_and_residual(self, theta, z):
        theta = np.asarray(theta, dtype=float)
        z = self._check_data(z)
        mu, sig = self._split(theta)
        w = _batched_inverse_spd(sig + self.noise_covs)
        e = z - mu
        return w, e

    def grad_per_datum(self, theta, z):
        w, e = self._inverse_and_residual(theta, z)
        u = np.einsum("...ij,...j->...i", w, e)
        g = 0.5 * (u[..., :, None] * u[..., None, :] - w)
        return np.concatenate([u, mc.pack(g) * self._sigma_mult], axis=-1)

    def loglik_per_datum(self, theta, z):
        theta = np.asarray(theta, dtype=float)
        z = self._check_data(z)
        mu, sig = self._split(theta)
        s = sig + self.noise_covs
        chol = np.linalg.cholesky(s)
        e = z - mu
        y = np.linalg.solve(chol, e[..., None])[..., 0]
        logdet = 2.0 * np.log(np.diagonal(chol, axis1=-2, axis2=-1)).sum(axis=-1)
        return -0.5 * (logdet + np.sum(y * y, axis=-1) + self.data_dim * _LOG_2PI)

    def analytic_fim(self):
        """Sum over data of the Gaussian FIM blocks, evaluated at the nominal theta."""
        d = self.data_dim
        w = np.linalg.inv(self._cov)
        rows, cols = mc.triu_indices(d)
        basis = np.zeros((rows.size, d, d))
        basis[np.arange(rows.size), rows, cols] = 1.0
        basis[np.arange(rows.size), cols, rows] = 1.0
        # tr(W E_ab W E_cd) for every pair of unique covariance entries
        cov_block = 0.5 * np.einsum("tij,ajk,tkl,bli->ab", w, basis, w, basis)
        fim = np.zeros((self.p, self.p))
        fim[:d, :d] = w.sum(axis=0)
        fim[d:, d:] = cov_block
        return mc.SymmetricMatrix.from_dense(0.5 * (fim + fim.T))


def spn_model(mu, sigma: mc.SymmetricMatrix, noise_covs) -> SignalPlusNoise:
    return SignalPlusNoise(mu, sigma, noise_covs)


def spn_analytic_fim(model: SignalPlusNoise) -> mc.SymmetricMatrix:
    if not isinstance(model, SignalPlusNoise):
        raise ValidationError("analytic FIM formula applies to the signal-plus-noise model only")
    return model.analytic_fim()


def scaled_noise_covariances(n: int, rng: np.random.Generator, dim: int = 3) -> np.ndarray:
    """``P_i = sqrt(i) U^T U`` for ``i = 1..n`` with one ``U ~ uniform(0,1)``."""
    u = rng.uniform(0.0, 1.0, size=(dim, dim))
    base = u.T @ u
    base = 0.5 * (base + base.T)
    return np.sqrt(np.arange(1, n + 1))[:, None, None] * base


def default_sigma(dim: int = 3) -> mc.SymmetricMatrix:
    """0.5 everywhere except 2 on the diagonal."""
    return mc.SymmetricMatrix.from_dense(np.full((dim, dim), 0.5) + 1.5 * np.eye(dim))


class Mixture(Model):
    """Two-component scalar normal mixture, ``theta = [lam, mu1, var1, mu2, var2]``."""

    parameter_names = ("lambda", "mu1", "var1", "mu2", "var2")

    def __init__(self, theta, n: int):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (5,):
            raise DimensionError("mixture theta must be [lambda, mu1, var1, mu2, var2]")
        lam, _, v1, _, v2 = theta
        if not 0.0 < lam < 1.0:
            raise ValidationError(f"lambda must lie in (0, 1), got {lam}")
        if v1 <= 0.0 or v2 <= 0.0:
            raise ValidationError("component variances must be positive")
        if n < 1:
            raise ValidationError("n must be >= 1")
        self.theta = theta
        self.n = int(n)
        self.data_dim = 1

    def sample_batch(self, rng, size):
        lam, m1, v1, m2, v2 = self.theta
        first = rng.random((size, self.n)) < lam
        w = rng.standard_normal((size, self.n))
        z = np.where(first, m1 + math.sqrt(v1) * w, m2 + math.sqrt(v2) * w)
        return z[..., None]

    def _log_parts(self, theta, z):
        theta = np.asarray(theta, dtype=float)
        z = self._check_data(z)[..., 0]
        lam, m1, v1, m2, v2 = np.moveaxis(theta, -1, 0)
        r1, r2 = z - m1, z - m2
        lp1 = -0.5 * (r1 * r1 / v1 + np.log(v1) + _LOG_2PI)
        lp2 = -0.5 * (r2 * r2 / v2 + np.log(v2) + _LOG_2PI)
        logf = np.logaddexp(np.log(lam) + lp1, np.log1p(-lam) + lp2)
        return lam, v1, v2, r1, r2, lp1, lp2, logf

    def grad_per_datum(self, theta, z):
        lam, v1, v2, r1, r2, lp1, lp2, logf = self._log_parts(theta, z)
        q1 = np.exp(lp1 - logf)  # phi_1 / f
        q2 = np.exp(lp2 - logf)
        w1 = lam * q1
        w2 = (1.0 - lam) * q2
        out = [
            q1 - q2,
            w1 * r1 / v1,
            w1 * (r1 * r1 - v1) / (2.0 * v1 * v1),
            w2 * r2 / v2,
            w2 * (r2 * r2 - v2) / (2.0 * v2 * v2),
        ]
        return np.stack(np.broadcast_arrays(*out), axis=-1)

    def loglik_per_datum(self, theta, z):
        return self._log_parts(theta, z)[-1]


def mixture_model(theta, n: int = 30) -> Mixture:
    return Mixture(theta, n)


class Quadratic(Model):
    """``L_t(theta) = -theta^T A theta / 2`` for every datum; constant Hessian ``-A``.

    Pseudo data are drawn (standard normal) but never enter the likelihood.
    """

    def __init__(self, a: mc.SymmetricMatrix, n: int = 1, theta=None):
        mc.cholesky(a)
        self.a = a
        self._a = a.dense()
        self.n = int(n)
        self.data_dim = 1
        self.theta = np.zeros(a.dim) if theta is None else np.asarray(theta, dtype=float)
        if self.theta.shape != (a.dim,):
            raise DimensionError("theta length must match A")
        self.parameter_names = tuple(f"theta{i + 1}" for i in range(a.dim))

    def sample_batch(self, rng, size):
        return rng.standard_normal((size, self.n, 1))

    def grad_per_datum(self, theta, z):
        theta = np.asarray(theta, dtype=float)
        z = self._check_data(z)
        g = -np.einsum("jl,...l->...j", self._a, theta)
        shape = np.broadcast_shapes(theta.shape[:-1], z.shape[:-1]) + (self.p,)
        return np.broadcast_to(g, shape).copy()

    def loglik_per_datum(self, theta, z):
        theta = np.asarray(theta, dtype=float)
        z = self._check_data(z)
        val = -0.5 * np.einsum("...j,jl,...l->...", theta, self._a, theta)
        return np.broadcast_to(val, np.broadcast_shapes(theta.shape[:-1], z.shape[:-1])).copy()

    def hessian_per_datum(self, theta, z, step=None):
        theta = np.asarray(theta, dtype=float)
        z = self._check_data(z)
        shape = np.broadcast_shapes(theta.shape[:-1], z.shape[:-1]) + (self.p, self.p)
        return np.broadcast_to(-self._a, shape).copy()

    def analytic_fim(self):
        return self.a * float(self.n)


def quadratic_model(a: mc.SymmetricMatrix, n: int = 1, theta=None) -> Quadratic:
    return Quadratic(a, n, theta)


class ScalarGaussian(Model):
    """``z_t ~ N(mu, var)``; ``theta = [mu]`` when ``var`` is known, else ``[mu, var]``."""

    def __init__(self, mu: float, var: float, n: int, known_variance: bool = False):
        if var <= 0.0:
            raise ValidationError("variance must be positive")
        self.known_variance = known_variance
        self.var = float(var)
        self.theta = np.array([mu], float) if known_variance else np.array([mu, var], float)
        self.parameter_names = ("mu",) if known_variance else ("mu", "var")
        self.n = int(n)
        self.data_dim = 1

    def _params(self, theta):
        theta = np.asarray(theta, dtype=float)
        mu = theta[..., 0]
        var = self.var if self.known_variance else theta[..., 1]
        return mu, var

    def sample_batch(self, rng, size):
        return self.theta[0] + math.sqrt(self.var) * rng.standard_normal((size, self.n, 1))

    def grad_per_datum(self, theta, z):
        mu, var = self._params(theta)
        r = self._check_data(z)[..., 0] - mu
        if self.known_variance:
            return (r / var)[..., None]
        return np.stack(np.broadcast_arrays(r / var, (r * r - var) / (2.0 * var * var)), axis=-1)

    def loglik_per_datum(self, theta, z):
        mu, var = self._params(theta)
        r = self._check_data(z)[..., 0] - mu
        return -0.5 * (r * r / var + np.log(var) + _LOG_2PI)

    def hessian_per_datum(self, theta, z, step=None):
        mu, var = self._params(theta)
        r = self._check_data(z)[..., 0] - mu
        if self.known_variance:
            return np.broadcast_to(-1.0 / var, r.shape)[..., None, None].copy()
        r, var = np.broadcast_arrays(r, var)
        h = np.empty(r.shape + (2, 2))
        h[..., 0, 0] = -1.0 / var
        h[..., 0, 1] = h[..., 1, 0] = -r / var**2
        h[..., 1, 1] = 0.5 / var**2 - r * r / var**3
        return h

    def analytic_fim(self):
        if self.known_variance:
            return mc.SymmetricMatrix([self.n / self.var], 1)
        return mc.SymmetricMatrix([self.n / self.var, 0.0, self.n / (2.0 * self.var**2)], 2)
