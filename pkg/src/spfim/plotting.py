"""Figures for experiment reports, written next to the delimited output."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .experiments import ExperimentReport  # noqa: E402

STYLE = {
    "figure.figsize": (6.4, 4.0),
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "savefig.dpi": 150,
}

METHOD_COLORS = {"standard": "tab:red", "independent": "tab:blue"}


def _figure(ncols=1):
    with plt.rc_context(STYLE):
        width, height = STYLE["figure.figsize"]
        return plt.subplots(1, ncols, figsize=(width * ncols, height), squeeze=False)


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_variance_ratio(report: ExperimentReport, stem: Path) -> list[Path]:
    """Ratio against ``n`` on log axes, mean part and covariance part in separate figures."""
    ns = report.series["n"]
    if len(ns) < 2:
        return _plot_ratio_bars(report, stem)
    names = report.summary["parameter_names"]
    groups = [[x for x in names if not x.startswith("Sigma")], [x for x in names if x.startswith("Sigma")]]
    refs = list(report.series["reference"].items())
    out = []
    for k, group in enumerate(groups):
        if not group:
            continue
        fig, ax = _figure()
        ax = ax[0, 0]
        for name in group:
            ax.plot(ns, report.series["ratio"][name], marker="o", label=name)
        label, values = refs[min(k, len(refs) - 1)]
        ax.plot(ns, values, "k--", label=label)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("n")
        ax.set_ylabel("var ratio (independent / standard)")
        ax.legend()
        suffix = "mean" if k == 0 else "covariance"
        out.append(_save(fig, stem.parent / f"{stem.name}_ratio_{suffix}.png"))
    return out


def _plot_ratio_bars(report, stem):
    rows = [r for r in report.rows if r["method"] == "standard"]
    fig, ax = _figure()
    ax = ax[0, 0]
    ax.bar([str(r["entry"]) for r in rows], [r["ratio"] for r in rows], color="tab:blue")
    ax.axhline(1.0, color="k", lw=0.8)
    ax.set_xlabel("diagonal entry j")
    ax.set_ylabel("var ratio (independent / standard)")
    ax.set_title(f"n = {report.series['n'][0]}")
    return [_save(fig, stem.parent / f"{stem.name}_ratio.png")]


def plot_timing(report: ExperimentReport, stem: Path) -> list[Path]:
    fig, ax = _figure()
    ax = ax[0, 0]
    for method, values in report.series["wall_time_seconds"].items():
        ax.plot(report.series["n"], values, marker="o", color=METHOD_COLORS[method], label=method)
    ax.set_xlabel("n")
    ax.set_ylabel("wall time / s")
    ax.legend()
    return [_save(fig, stem.parent / f"{stem.name}_timing.png")]


def plot_accuracy(report: ExperimentReport, stem: Path) -> list[Path]:
    errs = report.series["relative_error"]
    fig, ax = _figure()
    ax = ax[0, 0]
    for x, (method, values) in enumerate(errs.items()):
        jitter = [x + 0.15 * math.sin(7.0 * i) for i in range(len(values))]
        ax.scatter(jitter, values, s=10, color=METHOD_COLORS[method], alpha=0.6)
        mean = sum(values) / len(values)
        ax.hlines(mean, x - 0.3, x + 0.3, color="k")
    ax.set_xticks(range(len(errs)), list(errs))
    ax.set_yscale("log")
    ax.set_ylabel("relative spectral error")
    return [_save(fig, stem.parent / f"{stem.name}_accuracy.png")]


def plot_mn_tradeoff(report: ExperimentReport, stem: Path) -> list[Path]:
    ms = report.series["M"]
    fig, ax = _figure()
    ax = ax[0, 0]
    for key, values in report.series["variance"].items():
        a, b = key.split(",")
        if a != b or values[0] <= 0:
            continue
        ax.plot(ms, [v / values[0] for v in values], marker="o", label=f"j={a}")
    ax.set_xscale("log", base=2)
    ax.set_xlabel(f"M (N = {report.summary['budget']} / M)")
    ax.set_ylabel("variance relative to M = 1")
    ax.legend(ncol=3)
    return [_save(fig, stem.parent / f"{stem.name}_mn_tradeoff.png")]


PLOTTERS = {
    "variance_ratio": plot_variance_ratio,
    "timing": plot_timing,
    "accuracy": plot_accuracy,
    "mn_tradeoff": plot_mn_tradeoff,
}


def render_figures(report: ExperimentReport, output: str) -> list[Path]:
    p = Path(output)
    stem = p.with_suffix("") if p.suffix in (".csv", ".json") else p
    stem.parent.mkdir(parents=True, exist_ok=True)
    return PLOTTERS[report.experiment](report, stem)
