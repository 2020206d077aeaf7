"""Command-line entry point: ``spfim --config study.ini``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import apply_overrides, load_config
from .errors import ConfigError

log = logging.getLogger("spfim")

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spfim",
        description="Monte Carlo FIM estimation with simultaneous perturbations: run one configured study.",
    )
    parser.add_argument("--config", required=True, metavar="PATH", help="INI experiment config")
    parser.add_argument("--seed", type=int, help="override [experiment] seed")
    parser.add_argument("--workers", type=int, help="worker processes (also SPFIM_WORKERS)")
    parser.add_argument("--out", metavar="PATH", help="output path stem (also SPFIM_OUTPUT_DIR)")
    parser.add_argument("--format", choices=("csv", "json"), help="report format")
    parser.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _summary_lines(report) -> list[str]:
    cols = report.columns
    widths = [max(len(c), *(len(_cell(r[c])) for r in report.rows)) for c in cols]
    lines = ["  ".join(c.rjust(w) for c, w in zip(cols, widths))]
    for r in report.rows[:60]:
        lines.append("  ".join(_cell(r[c]).rjust(w) for c, w in zip(cols, widths)))
    if len(report.rows) > 60:
        lines.append(f"... {len(report.rows) - 60} more rows")
    return lines


def _cell(v) -> str:
    return f"{v:.6g}" if isinstance(v, float) else str(v)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = apply_overrides(load_config(args.config), args.seed, args.workers, args.out, args.format)
    except ConfigError as exc:
        print(f"spfim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    # heavy imports after config validation so bad configs fail fast
    from .experiments import run_experiment
    from .report import write_report

    try:
        log.info("running %s with seed %d on %d worker(s)", cfg.experiment, cfg.seed, cfg.workers)
        report = run_experiment(cfg)
        paths = write_report(report, cfg.output, cfg.format)
        if cfg.figures and not args.no_figures:
            from .plotting import render_figures

            paths += render_figures(report, cfg.output)
    except ConfigError as exc:
        print(f"spfim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"spfim: {cfg.experiment} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    print(f"{cfg.experiment}  seed={cfg.seed}  workers={cfg.workers}")
    print("\n".join(_summary_lines(report)))
    for key, value in report.summary.items():
        if key != "parameter_names":
            print(f"{key}: {value}")
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
