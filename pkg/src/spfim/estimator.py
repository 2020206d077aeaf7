"""Simultaneous-perturbation Hessian estimates and Monte Carlo FIM averaging.

Two schemes are implemented:

``standard``
    one direction ``delta`` per Hessian estimate, two total-score evaluations
    at ``theta +/- c*delta``.
``independent``
    one direction per datum; each datum contributes its own estimate from two
    per-datum score evaluations and the ``n`` estimates are summed.

Both return the symmetrized matrix ``(G + G^T) / 2`` with
``G = (delta_g / 2c) (delta^-1)^T``.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import matrixcore as mc
from . import streams
from .accumulate import VarianceAccumulator, map_tasks, tree_reduce
from .errors import DimensionError, NotPositiveDefiniteError, ReplicateError, ValidationError
from .models import Model
from .perturbation import PerturbationSpec, PerturbationVector

STANDARD = "standard"
INDEPENDENT = "independent"
METHODS = (STANDARD, INDEPENDENT)

# datum-level score evaluations per work chunk; fixes chunk boundaries
# independently of the worker count
_CHUNK_WORK = 1 << 16


@dataclass(frozen=True)
class EstimatorConfig:
    method: str = STANDARD
    M: int = 1
    N: int = 1000
    c: float = 1e-4
    perturbation: PerturbationSpec = field(default_factory=PerturbationSpec)
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValidationError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.M < 1 or self.N < 1:
            raise ValidationError(f"M and N must be positive, got M={self.M}, N={self.N}")
        if not self.c > 0.0:
            raise ValidationError(f"c must be positive, got {self.c}")
        if self.c > 0.1:
            warnings.warn(f"perturbation size c={self.c} is large; the O(c^2) bias may dominate", stacklevel=3)


@dataclass
class FIMEstimate:
    mean: mc.SymmetricMatrix
    entry_variance: np.ndarray
    replicates_used: int
    wall_time_seconds: float


def _symmetrize(g: np.ndarray) -> np.ndarray:
    return 0.5 * (g + np.swapaxes(g, -1, -2))


def _hessians_standard(model: Model, theta, z, delta, c):
    """Batched estimates; ``delta`` is ``(..., p)`` and ``z`` broadcasts as ``(..., n, d)``."""
    step = (c * delta)[..., None, :]
    # difference per datum before summing: the total score is large next to
    # its change over 2c, so differencing totals loses digits
    dg = (model.grad_per_datum(theta + step, z) - model.grad_per_datum(theta - step, z)).sum(axis=-2)
    g = (dg / (2.0 * c))[..., :, None] * (1.0 / delta)[..., None, :]
    return _symmetrize(g)


def _hessians_independent(model: Model, theta, z, delta, c):
    """Batched estimates; ``delta`` is ``(..., n, p)``, one row per datum."""
    step = c * delta
    dg = model.grad_per_datum(theta + step, z) - model.grad_per_datum(theta - step, z)
    g = np.einsum("...tj,...tl->...jl", dg / (2.0 * c), 1.0 / delta)
    return _symmetrize(g)


def _check_inputs(model: Model, theta, z, c):
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (model.p,):
        raise DimensionError(f"theta must have shape ({model.p},), got {theta.shape}")
    z = np.asarray(z, dtype=float)
    if z.shape != (model.n, model.data_dim):
        raise DimensionError(f"pseudo data must have shape ({model.n}, {model.data_dim}), got {z.shape}")
    if not c > 0.0:
        raise ValidationError("c must be positive")
    return theta, z


def _as_delta(delta) -> np.ndarray:
    if isinstance(delta, PerturbationVector):
        return delta.delta
    return np.asarray(delta, dtype=float)


def sp_hessian_estimate(model: Model, theta, z, delta, c: float) -> mc.SymmetricMatrix:
    """One Hessian estimate with a single shared direction."""
    theta, z = _check_inputs(model, theta, z, c)
    d = _as_delta(delta)
    if d.shape != (model.p,):
        raise DimensionError(f"perturbation must have length {model.p}")
    return mc.SymmetricMatrix.from_dense(_hessians_standard(model, theta, z, d, c))


def sp_hessian_estimate_independent(model: Model, theta, z, deltas, c: float) -> mc.SymmetricMatrix:
    """Sum of per-datum Hessian estimates, datum ``t`` perturbed by ``deltas[t]``."""
    theta, z = _check_inputs(model, theta, z, c)
    if isinstance(deltas, (list, tuple)):
        d = np.stack([_as_delta(x) for x in deltas])
    else:
        d = _as_delta(deltas)
    if d.shape != (model.n, model.p):
        raise DimensionError(f"need {model.n} perturbations of length {model.p}, got shape {d.shape}")
    return mc.SymmetricMatrix.from_dense(_hessians_independent(model, theta, z, d, c))


@dataclass(frozen=True)
class _Job:
    model: Model
    theta: np.ndarray
    method: str
    M: int
    outer_per_item: int
    c: float
    perturbation: PerturbationSpec
    seed: int
    items: range
    keep_values: bool


def _item_values(job: _Job) -> np.ndarray:
    """Packed ``-mean(H)`` for every item of the job, shape ``(items, p(p+1)/2)``.

    Item ``r`` averages ``outer_per_item`` pseudo datasets, each contributing
    the mean of ``M`` Hessian estimates. The stream for pseudo dataset ``i`` of
    item ``r`` is keyed by ``(r, i)``; it supplies the data first and then the
    ``M`` perturbations.
    """
    model, p, n = job.model, job.model.p, job.model.n
    keys = [(r, i) for r in job.items for i in range(job.outer_per_item)]
    shape = (job.M, p) if job.method == STANDARD else (job.M, n, p)
    zs, ds = [], []
    for a, b in keys:
        rng = streams.stream(job.seed, streams.ESTIMATOR, a, b)
        zs.append(model.sample(rng))
        ds.append(job.perturbation.draw(rng, shape))
    z = np.stack(zs)[:, None]  # (B, 1, n, d), shared by the M estimates
    delta = np.stack(ds)
    try:
        if job.method == STANDARD:
            h = _hessians_standard(model, job.theta, z, delta, job.c)
        else:
            h = _hessians_independent(model, job.theta, z, delta, job.c)
    except NotPositiveDefiniteError as exc:
        outer = inner = None
        if exc.index is not None:
            outer = keys[exc.index[0]]
            inner = exc.index[1] if len(exc.index) > 1 else None
        raise ReplicateError(
            f"replicate (item, pseudo-dataset)={outer}, inner k={inner} failed: {exc}", outer, inner
        ) from exc
    terms = -mc.pack(h.mean(axis=1))
    return terms.reshape(len(job.items), job.outer_per_item, -1).mean(axis=1)


def _run_job(job: _Job):
    values = _item_values(job)
    return VarianceAccumulator.from_values(values), (values if job.keep_values else None)


def _chunk_items(model: Model, method: str, M: int, outer_per_item: int) -> int:
    per_item = M * outer_per_item * model.n * (1 if method == STANDARD else 2)
    return max(1, _CHUNK_WORK // max(per_item, 1))


def run_items(
    model: Model,
    theta,
    method: str,
    M: int,
    outer_per_item: int,
    c: float,
    perturbation: PerturbationSpec,
    seed: int,
    n_items: int,
    workers: int = 1,
    keep_values: bool = False,
):
    """Accumulate ``n_items`` independent FIM-estimate terms.

    Each item is the Monte Carlo estimate averaged over ``outer_per_item``
    pseudo datasets with ``M`` inner estimates each. Returns the merged
    :class:`VarianceAccumulator` over items and, when ``keep_values`` is set,
    the ``(n_items, p(p+1)/2)`` array of item values. Results do not depend
    on ``workers``.
    """
    theta = np.asarray(theta, dtype=float)
    size = _chunk_items(model, method, M, outer_per_item)
    jobs = [
        _Job(model, theta, method, M, outer_per_item, c, perturbation, seed,
             range(start, min(start + size, n_items)), keep_values)
        for start in range(0, n_items, size)
    ]
    results = map_tasks(_run_job, jobs, workers)
    acc = tree_reduce([r[0] for r in results])
    values = np.concatenate([r[1] for r in results]) if keep_values else None
    return acc, values


def estimate_fim(model: Model, theta, config: EstimatorConfig, workers: int = 1) -> FIMEstimate:
    """Monte Carlo FIM estimate ``-(1/N) sum_i (1/M) sum_k H_hat_{k|i}``.

    ``entry_variance`` is the sample variance over the ``N`` outer terms
    (each already averaged over its ``M`` inner estimates).
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (model.p,):
        raise DimensionError(f"theta must have shape ({model.p},)")
    start = time.perf_counter()
    acc, _ = run_items(model, theta, config.method, config.M, 1, config.c,
                       config.perturbation, config.seed, config.N, workers)
    elapsed = time.perf_counter() - start
    return FIMEstimate(
        mean=mc.SymmetricMatrix(acc.mean, model.p),
        entry_variance=mc.unpack(acc.variance),
        replicates_used=acc.count,
        wall_time_seconds=elapsed,
    )


def with_method(config: EstimatorConfig, method: str) -> EstimatorConfig:
    return replace(config, method=method)
