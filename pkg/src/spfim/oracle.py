"""Independent ground truth: finite differences and Monte Carlo true FIM."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matrixcore as mc
from . import streams
from .accumulate import VarianceAccumulator, map_tasks, tree_reduce
from .errors import DimensionError, OracleError, ReplicateError, ValidationError
from .models import Model

_CHUNK_DATA = 1 << 15


@dataclass(frozen=True)
class FDConfig:
    step: float = 1e-5
    scheme: str = "central"

    def __post_init__(self):
        if not self.step > 0.0:
            raise ValidationError("finite-difference step must be positive")
        if self.scheme != "central":
            raise ValidationError("only central differences are supported")


def _evaluate(loglik, theta) -> float:
    try:
        value = float(loglik(theta))
    except Exception as exc:  # any failure inside the user function
        raise OracleError(f"log-likelihood evaluation failed at {theta}: {exc}") from exc
    if not np.isfinite(value):
        raise OracleError(f"non-finite log-likelihood at {theta}")
    return value


def fd_gradient(loglik, theta, fd: FDConfig = FDConfig()) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    h = fd.step
    grad = np.empty(theta.size)
    for j in range(theta.size):
        e = np.zeros(theta.size)
        e[j] = h
        grad[j] = (_evaluate(loglik, theta + e) - _evaluate(loglik, theta - e)) / (2.0 * h)
    return grad


def fd_hessian(loglik, theta, fd: FDConfig = FDConfig(step=1e-4)) -> mc.SymmetricMatrix:
    """Second-order central stencil on function values, upper triangle only.

    The default step is larger than for gradients: the stencil divides by
    ``step**2``, so roundoff grows as ``eps/step**2``.
    """
    theta = np.asarray(theta, dtype=float)
    p, h = theta.size, fd.step
    f0 = _evaluate(loglik, theta)
    eye = np.eye(p) * h
    out = np.empty((p, p))
    for j in range(p):
        fp = _evaluate(loglik, theta + eye[j])
        fm = _evaluate(loglik, theta - eye[j])
        out[j, j] = (fp - 2.0 * f0 + fm) / (h * h)
        for l in range(j + 1, p):
            fpp = _evaluate(loglik, theta + eye[j] + eye[l])
            fpm = _evaluate(loglik, theta + eye[j] - eye[l])
            fmp = _evaluate(loglik, theta - eye[j] + eye[l])
            fmm = _evaluate(loglik, theta - eye[j] - eye[l])
            out[j, l] = out[l, j] = (fpp - fpm - fmp + fmm) / (4.0 * h * h)
    return mc.SymmetricMatrix.from_dense(out)


def _oracle_chunk(args):
    model, theta, seed, start, stop = args
    # one stream per block of replicates; blocks are fixed by the model alone
    rng = streams.stream(seed, streams.ORACLE, start)
    z = model.sample_batch(rng, stop - start)
    try:
        h = model.hessian_per_datum(theta, z).sum(axis=-3)
    except Exception as exc:
        raise ReplicateError(f"Hessian failed in oracle replicates {start}..{stop - 1}: {exc}", start) from exc
    if not np.all(np.isfinite(h)):
        bad = start + int(np.argwhere(~np.isfinite(h).all(axis=(-1, -2)))[0, 0])
        raise ReplicateError(f"non-finite Hessian at oracle replicate {bad}", bad)
    return VarianceAccumulator.from_values(-mc.pack(h))


def mc_true_fim(model: Model, theta, replicates: int, seed: int, workers: int = 1) -> mc.SymmetricMatrix:
    """``-(1/R) sum_r H(theta | Z_r)`` over ``R`` fresh pseudo datasets.

    Uses the model's per-datum Hessian (closed form where the model has one,
    otherwise central differences of the analytic score). Replicates are
    drawn in fixed blocks, each from its own stream keyed by the block's first
    replicate index, so the result does not depend on ``workers``.
    """
    return mc_true_fim_accumulator(model, theta, replicates, seed, workers)[0]


def mc_true_fim_accumulator(model: Model, theta, replicates: int, seed: int, workers: int = 1):
    """As :func:`mc_true_fim`, also returning the per-entry accumulator."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (model.p,):
        raise DimensionError(f"theta must have shape ({model.p},)")
    if replicates < 1:
        raise ValidationError("replicates must be >= 1")
    size = max(1, _CHUNK_DATA // model.n)
    tasks = [(model, theta, seed, s, min(s + size, replicates)) for s in range(0, replicates, size)]
    acc = tree_reduce(map_tasks(_oracle_chunk, tasks, workers))
    return mc.SymmetricMatrix(acc.mean, model.p), acc


def relative_spectral_error(estimate: mc.SymmetricMatrix, truth: mc.SymmetricMatrix) -> float:
    """``||estimate - truth|| / ||truth||`` in the spectral norm."""
    if estimate.dim != truth.dim:
        raise DimensionError(f"dimension mismatch: {estimate.dim} vs {truth.dim}")
    denom = mc.spectral_norm(truth)
    if denom == 0.0:
        raise ValidationError("truth has zero spectral norm")
    return mc.spectral_norm(estimate - truth) / denom


def typical_index(errors, rank: int = 25) -> int:
    """Index of the ``rank``-th largest error (1-based rank, descending order)."""
    errors = np.asarray(errors, dtype=float)
    if not 1 <= rank <= errors.size:
        raise ValidationError(f"rank {rank} out of range for {errors.size} errors")
    order = np.argsort(-errors, kind="stable")
    return int(order[rank - 1])
