"""INI experiment configuration.

One ``[experiment]`` section picks the study, ``[model]`` and
``[estimator]`` describe what is estimated, and a section named after the
study (``[variance_ratio]``, ``[timing]``, ``[accuracy]`` or
``[mn_tradeoff]``) holds its own knobs. Sections for other studies are
ignored, so one file can carry several. See ``configs/`` for examples.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import ConfigError, SpfimError
from .estimator import METHODS
from .perturbation import BERNOULLI, PerturbationSpec

EXPERIMENTS = ("variance_ratio", "timing", "accuracy", "mn_tradeoff")
MODELS = ("signal_plus_noise", "mixture", "quadratic")
FORMATS = ("csv", "json")

ENV_WORKERS = "SPFIM_WORKERS"
ENV_OUTPUT_DIR = "SPFIM_OUTPUT_DIR"


@dataclass
class ModelSpec:
    name: str = "signal_plus_noise"
    n: int = 30
    mu: list[float] = field(default_factory=lambda: [0.0, 0.0, 0.0])
    sigma: list[float] = field(default_factory=lambda: [2.0, 0.5, 0.5, 2.0, 0.5, 2.0])
    noise_seed: int | None = None
    theta: list[float] = field(default_factory=lambda: [0.2, 0.0, 4.0, 1.0, 9.0])
    a: list[float] = field(default_factory=lambda: [2.0, 0.0, 3.0])


@dataclass
class ExperimentConfig:
    experiment: str
    model: ModelSpec = field(default_factory=ModelSpec)
    method: str = "independent"
    M: int = 1
    N: int = 1
    c: float = 1e-4
    perturbation: PerturbationSpec = field(default_factory=PerturbationSpec)
    n_values: list[int] = field(default_factory=lambda: [30])
    replicates: int = 100_000
    oracle_replicates: int = 1_000_000
    budget: int = 16
    seed: int = 0
    output: str = "results/report"
    format: str = "csv"
    workers: int = 1
    figures: bool = True

    def echo(self) -> dict:
        return asdict(self)


# defaults that differ per study
_STUDY_DEFAULTS = {
    "variance_ratio": {"replicates": 100_000, "M": 1, "N": 1},
    "timing": {"replicates": 20_000, "n_values": [30, 100, 200]},
    "accuracy": {"replicates": 50, "M": 2, "N": 4000},
    "mn_tradeoff": {"replicates": 10_000, "budget": 16},
}


class _Reader:
    def __init__(self, parser: configparser.ConfigParser, section: str):
        self.section = section
        self.data = parser[section] if parser.has_section(section) else {}

    def _fail(self, key, msg):
        raise ConfigError(f"[{self.section}] {key}: {msg}")

    def get(self, key, default=None):
        return self.data.get(key, default)

    def int(self, key, default, minimum=None):
        raw = self.data.get(key)
        if raw is None:
            return default
        try:
            value = int(raw)
        except ValueError:
            self._fail(key, f"expected an integer, got {raw!r}")
        if minimum is not None and value < minimum:
            self._fail(key, f"must be >= {minimum}, got {value}")
        return value

    def float(self, key, default):
        raw = self.data.get(key)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError:
            self._fail(key, f"expected a number, got {raw!r}")

    def floats(self, key, default):
        raw = self.data.get(key)
        if raw is None:
            return default
        try:
            return [float(x) for x in raw.replace(",", " ").split()]
        except ValueError:
            self._fail(key, f"expected a comma-separated list of numbers, got {raw!r}")

    def ints(self, key, default, minimum=None):
        raw = self.data.get(key)
        if raw is None:
            return default
        try:
            values = [int(x) for x in raw.replace(",", " ").split()]
        except ValueError:
            self._fail(key, f"expected a comma-separated list of integers, got {raw!r}")
        if not values:
            self._fail(key, "list is empty")
        if minimum is not None and min(values) < minimum:
            self._fail(key, f"all values must be >= {minimum}")
        return values

    def choice(self, key, default, choices):
        value = self.data.get(key, default)
        if value not in choices:
            self._fail(key, f"must be one of {', '.join(choices)}, got {value!r}")
        return value

    def bool(self, key, default):
        raw = self.data.get(key)
        if raw is None:
            return default
        lowered = raw.strip().lower()
        if lowered in ("1", "yes", "true", "on"):
            return True
        if lowered in ("0", "no", "false", "off"):
            return False
        self._fail(key, f"expected a boolean, got {raw!r}")


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keep 'M' and 'N' distinct from 'm' and 'n'
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    if not parser.has_section("experiment"):
        raise ConfigError("[experiment] section is required")
    exp = _Reader(parser, "experiment")
    kind = exp.choice("kind", None, EXPERIMENTS)
    defaults = dict(_STUDY_DEFAULTS[kind])

    mod = _Reader(parser, "model")
    base = ModelSpec()
    name_default = "mixture" if kind == "accuracy" else base.name
    model = ModelSpec(
        name=mod.choice("name", name_default, MODELS),
        n=mod.int("n", base.n, minimum=1),
        mu=mod.floats("mu", base.mu),
        sigma=mod.floats("sigma", base.sigma),
        noise_seed=mod.int("noise_seed", None),
        theta=mod.floats("theta", base.theta),
        a=mod.floats("a", base.a),
    )

    est = _Reader(parser, "estimator")
    kind_p = est.choice("perturbation", BERNOULLI, ("bernoulli", "segmented_uniform"))
    try:
        pert = PerturbationSpec(kind_p, est.float("a", 0.5), est.float("b", 1.5))
    except SpfimError as exc:
        raise ConfigError(f"[estimator] perturbation: {exc}") from None
    c = est.float("c", 1e-4)
    if not c > 0:
        raise ConfigError(f"[estimator] c: must be positive, got {c}")

    study = _Reader(parser, kind)
    cfg = ExperimentConfig(
        experiment=kind,
        model=model,
        method=est.choice("method", "independent", METHODS),
        M=study.int("M", est.int("M", defaults.get("M", 1), minimum=1), minimum=1),
        N=study.int("N", est.int("N", defaults.get("N", 1), minimum=1), minimum=1),
        c=c,
        perturbation=pert,
        n_values=study.ints("n_values", defaults.get("n_values", [model.n]), minimum=1),
        replicates=study.int("replicates", defaults["replicates"], minimum=2),
        oracle_replicates=study.int("oracle_replicates", 1_000_000, minimum=1),
        budget=study.int("budget", defaults.get("budget", 16), minimum=1),
        seed=exp.int("seed", 0),
        output=exp.get("output", f"results/{kind}"),
        format=exp.choice("format", "csv", FORMATS),
        workers=exp.int("workers", 1, minimum=1),
        figures=exp.bool("figures", True),
    )
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    return parse_config(text)


def apply_overrides(cfg: ExperimentConfig, seed=None, workers=None, out=None, fmt=None, environ=None) -> ExperimentConfig:
    """Command-line values win over environment variables, which win over the file."""
    environ = os.environ if environ is None else environ
    if environ.get(ENV_WORKERS):
        try:
            cfg.workers = int(environ[ENV_WORKERS])
        except ValueError:
            raise ConfigError(f"{ENV_WORKERS}: expected an integer") from None
    if environ.get(ENV_OUTPUT_DIR):
        cfg.output = str(Path(environ[ENV_OUTPUT_DIR]) / Path(cfg.output).name)
    if seed is not None:
        cfg.seed = seed
    if workers is not None:
        cfg.workers = workers
    if out is not None:
        cfg.output = out
    if fmt is not None:
        cfg.format = fmt
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    return cfg
