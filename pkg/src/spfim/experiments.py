"""Experiment drivers: variance ratio, timing, accuracy and the M-vs-N budget study."""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__
from . import matrixcore as mc
from . import models, streams
from .config import ExperimentConfig
from .errors import ConfigError
from .estimator import INDEPENDENT, STANDARD, EstimatorConfig, estimate_fim, run_items
from .oracle import mc_true_fim, relative_spectral_error, typical_index

# reference curves drawn next to the variance-ratio series
REFERENCE_CONSTANTS = (3.5, 13.0)


@dataclass
class ExperimentReport:
    """Tabular results plus everything needed to re-plot or audit them.

    ``rows`` is the delimited output (one dict per line, keys ``columns``).
    ``series`` carries plot-ready arrays, ``matrices`` named square matrices,
    ``summary`` headline scalars.
    """

    experiment: str
    columns: list[str]
    rows: list[dict]
    config: dict
    summary: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)
    matrices: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)


def _metadata(cfg: ExperimentConfig) -> dict:
    return {
        "seed": cfg.seed,
        "workers": cfg.workers,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def build_model(cfg: ExperimentConfig, n: int | None = None) -> models.Model:
    """Model described by ``cfg.model`` with ``n`` data (default ``cfg.model.n``).

    The signal-plus-noise noise matrix ``U`` depends only on the noise seed,
    so models built for different ``n`` share ``P_1, P_2, ...``.
    """
    spec = cfg.model
    n = spec.n if n is None else n
    try:
        if spec.name == "signal_plus_noise":
            d = len(spec.mu)
            sigma = mc.sym_from_packed(spec.sigma, d)
            noise_seed = cfg.seed if spec.noise_seed is None else spec.noise_seed
            rng = streams.stream(noise_seed, streams.SETUP)
            return models.spn_model(spec.mu, sigma, models.scaled_noise_covariances(n, rng, d))
        if spec.name == "mixture":
            return models.mixture_model(spec.theta, n)
        a = mc.sym_from_packed(spec.a, mc.dim_from_packed(len(spec.a)))
        return models.quadratic_model(a, n)
    except (ValueError, ArithmeticError) as exc:
        raise ConfigError(f"[model] {spec.name}: {exc}") from None


def variance_std_error(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sample variance per column and its large-sample standard error.

    ``se^2 = (m4 - s^4 (R-3)/(R-1)) / R`` with ``m4`` the fourth central moment.
    """
    values = np.asarray(values, dtype=float)
    r = values.shape[0]
    dev = values - values.mean(axis=0)
    s2 = np.einsum("ij,ij->j", dev, dev) / (r - 1)
    m4 = np.mean(dev**4, axis=0)
    se2 = np.maximum(m4 - s2 * s2 * (r - 3) / (r - 1), 0.0) / r
    return s2, np.sqrt(se2)


def variance_ratio(indep: np.ndarray, basic: np.ndarray) -> np.ndarray:
    """``indep / basic``; 1 when both vanish (exact estimates), inf when only basic does."""
    indep = np.asarray(indep, dtype=float)
    basic = np.asarray(basic, dtype=float)
    out = np.ones_like(basic)
    pos = basic > 0
    out[pos] = indep[pos] / basic[pos]
    out[~pos & (indep > 0)] = np.inf
    return out


def loglog_slope(n_values, ratios) -> float:
    """Least-squares slope of ``log(ratio)`` against ``log(n)``."""
    x = np.log(np.asarray(n_values, dtype=float))
    y = np.log(np.asarray(ratios, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def _diag_positions(p: int) -> np.ndarray:
    rows, cols = mc.triu_indices(p)
    return np.flatnonzero(rows == cols)


def run_variance_ratio(cfg: ExperimentConfig) -> ExperimentReport:
    """Per-diagonal-entry variance of ``-H_hat`` under both methods with ``M = N = 1``."""
    if cfg.replicates < 10_000:
        warnings.warn(f"{cfg.replicates} replicates: variance estimates will be noisy", stacklevel=2)
    rows, series = [], {"n": [], "ratio": {}, "std_error": {}}
    first = build_model(cfg, cfg.n_values[0])
    names = list(first.parameter_names)
    diag = _diag_positions(first.p)
    for k, n in enumerate(cfg.n_values):
        model = build_model(cfg, n)
        seed = streams.child_seed(cfg.seed, k)
        var, se = {}, {}
        for method in (STANDARD, INDEPENDENT):
            _, values = run_items(model, model.theta, method, 1, 1, cfg.c, cfg.perturbation,
                                  seed, cfg.replicates, cfg.workers, keep_values=True)
            var[method], se[method] = variance_std_error(values[:, diag])
        ratio = variance_ratio(var[INDEPENDENT], var[STANDARD])
        series["n"].append(n)
        for j in range(model.p):
            series["ratio"].setdefault(names[j], []).append(float(ratio[j]))
            for method in (STANDARD, INDEPENDENT):
                series["std_error"].setdefault(f"{names[j]}:{method}", []).append(float(se[method][j]))
                rows.append({"entry": j + 1, "method": method, "variance": float(var[method][j]),
                             "ratio": float(ratio[j]), "n": n, "seed": cfg.seed})
    series["reference"] = {
        f"{c:g}/n": [c / n for n in series["n"]] for c in REFERENCE_CONSTANTS
    }
    summary = {"parameter_names": names}
    if len(cfg.n_values) > 1:
        summary["loglog_slope"] = {name: loglog_slope(series["n"], series["ratio"][name]) for name in names}
    return ExperimentReport("variance_ratio", ["entry", "method", "variance", "ratio", "n", "seed"],
                            rows, cfg.echo(), summary, series, {}, _metadata(cfg))


def run_timing(cfg: ExperimentConfig) -> ExperimentReport:
    """Wall time of the estimation loop per method and ``n`` at equal replicate counts."""
    rows, times = [], {STANDARD: [], INDEPENDENT: []}
    for k, n in enumerate(cfg.n_values):
        model = build_model(cfg, n)
        seed = streams.child_seed(cfg.seed, k)
        for method in (STANDARD, INDEPENDENT):
            est = EstimatorConfig(method, 1, cfg.replicates, cfg.c, cfg.perturbation, seed)
            times[method].append(estimate_fim(model, model.theta, est, cfg.workers).wall_time_seconds)
        ratio = times[STANDARD][-1] / times[INDEPENDENT][-1]
        for method in (STANDARD, INDEPENDENT):
            rows.append({"n": n, "method": method, "wall_time_seconds": times[method][-1],
                         "time_ratio_basic_over_indep": ratio, "seed": cfg.seed})
    series = {"n": list(cfg.n_values), "wall_time_seconds": times,
              "time_ratio_basic_over_indep": [s / i for s, i in zip(times[STANDARD], times[INDEPENDENT])]}
    summary = {"ratio_orientation": "standard_time / independent_time"}
    return ExperimentReport("timing", ["n", "method", "wall_time_seconds", "time_ratio_basic_over_indep", "seed"],
                            rows, cfg.echo(), summary, series, {}, _metadata(cfg))


def run_accuracy(cfg: ExperimentConfig, truth: mc.SymmetricMatrix | None = None) -> ExperimentReport:
    """Mean relative spectral error of ``replicates`` independent FIM estimates per method.

    ``truth`` defaults to :func:`mc_true_fim` with ``cfg.oracle_replicates``;
    pass it in to reuse an already computed oracle.
    """
    model = build_model(cfg)
    if truth is None:
        truth = mc_true_fim(model, model.theta, cfg.oracle_replicates,
                            streams.child_seed(cfg.seed, 1 << 32), cfg.workers)
    errors = {STANDARD: [], INDEPENDENT: []}
    wall = {STANDARD: 0.0, INDEPENDENT: 0.0}
    estimates = {STANDARD: [], INDEPENDENT: []}
    for r in range(cfg.replicates):
        seed = streams.child_seed(cfg.seed, r)
        for method in (STANDARD, INDEPENDENT):
            est = EstimatorConfig(method, cfg.M, cfg.N, cfg.c, cfg.perturbation, seed)
            fim = estimate_fim(model, model.theta, est, cfg.workers)
            wall[method] += fim.wall_time_seconds
            errors[method].append(relative_spectral_error(fim.mean, truth))
            estimates[method].append(fim.mean)
    mean_err = {m: float(np.mean(e)) for m, e in errors.items()}
    err_ratio = mean_err[INDEPENDENT] / mean_err[STANDARD] if mean_err[STANDARD] > 0 else 1.0
    time_ratio = wall[INDEPENDENT] / wall[STANDARD]
    rank = max(1, cfg.replicates // 2)
    matrices = {"truth": truth.dense().tolist()}
    typical = {}
    for m in (STANDARD, INDEPENDENT):
        idx = typical_index(errors[m], rank)
        typical[m] = idx
        matrices[f"typical_{m}"] = estimates[m][idx].dense().tolist()
    rows = []
    for m in (STANDARD, INDEPENDENT):
        rows.append({"method": m, "mean_relative_error": mean_err[m],
                     "std_relative_error": float(np.std(errors[m], ddof=1)) if cfg.replicates > 1 else 0.0,
                     "wall_time_seconds": wall[m], "error_ratio_indep_over_basic": err_ratio,
                     "time_ratio_indep_over_basic": time_ratio, "seed": cfg.seed})
    summary = {"typical_rank_descending": rank, "typical_replicate": typical,
               "ratio_orientation": "independent / standard"}
    series = {"relative_error": {m: [float(x) for x in e] for m, e in errors.items()}}
    return ExperimentReport("accuracy", list(rows[0].keys()), rows, cfg.echo(), summary, series,
                            matrices, _metadata(cfg))


def divisor_pairs(budget: int) -> list[tuple[int, int]]:
    """All ``(M, N)`` with ``M * N == budget``, ordered by ``M``."""
    if budget < 1:
        raise ValueError("budget must be positive")
    return [(m, budget // m) for m in range(1, budget + 1) if budget % m == 0]


def run_mn_tradeoff(cfg: ExperimentConfig) -> ExperimentReport:
    """Variance of ``F_bar_{M,N}`` entries for every split of a fixed budget ``M*N``."""
    model = build_model(cfg)
    rows_idx, cols_idx = mc.triu_indices(model.p)
    rows, series = [], {"M": [], "variance": {}, "std_error": {}}
    for M, N in divisor_pairs(cfg.budget):
        _, values = run_items(model, model.theta, cfg.method, M, N, cfg.c, cfg.perturbation,
                              cfg.seed, cfg.replicates, cfg.workers, keep_values=True)
        var, se = variance_std_error(values)
        series["M"].append(M)
        for k, (a, b) in enumerate(zip(rows_idx, cols_idx)):
            key = f"{a + 1},{b + 1}"
            series["variance"].setdefault(key, []).append(float(var[k]))
            series["std_error"].setdefault(key, []).append(float(se[k]))
            rows.append({"row": int(a) + 1, "col": int(b) + 1, "M": M, "N": N,
                         "variance": float(var[k]), "std_error": float(se[k]), "seed": cfg.seed})
    summary = {"budget": cfg.budget, "method": cfg.method, "parameter_names": list(model.parameter_names)}
    return ExperimentReport("mn_tradeoff", ["row", "col", "M", "N", "variance", "std_error", "seed"],
                            rows, cfg.echo(), summary, series, {}, _metadata(cfg))


RUNNERS = {
    "variance_ratio": run_variance_ratio,
    "timing": run_timing,
    "accuracy": run_accuracy,
    "mn_tradeoff": run_mn_tradeoff,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    start = time.perf_counter()
    report = RUNNERS[cfg.experiment](cfg)
    report.metadata["elapsed_seconds"] = time.perf_counter() - start
    return report

