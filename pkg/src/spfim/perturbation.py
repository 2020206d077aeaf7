"""Simultaneous-perturbation direction vectors.

Components are i.i.d., symmetric about zero, bounded and have finite
``E|1/delta|``. Two families are offered: Bernoulli +/-1 (the default) and a
segmented uniform on ``[-b, -a] U [a, b]`` with ``0 < a < b``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

BERNOULLI = "bernoulli"
SEGMENTED_UNIFORM = "segmented_uniform"


@dataclass(frozen=True)
class PerturbationSpec:
    kind: str = BERNOULLI
    a: float = 0.5
    b: float = 1.5

    def __post_init__(self):
        if self.kind not in (BERNOULLI, SEGMENTED_UNIFORM):
            raise ValidationError(f"unknown perturbation kind {self.kind!r}")
        if self.kind == SEGMENTED_UNIFORM and not (0.0 < self.a < self.b < np.inf):
            # a == 0 would make E|1/delta| infinite
            raise ValidationError(
                f"segmented uniform needs 0 < a < b, got a={self.a}, b={self.b}"
            )

    @property
    def ratio_variance(self) -> float:
        """``var(delta_l / delta_j)`` for independent components ``l != j``."""
        if self.kind == BERNOULLI:
            return 1.0
        a, b = self.a, self.b
        # E[d^2] * E[1/d^2] for |d| ~ U[a, b]
        return (a * a + a * b + b * b) / (3.0 * a * b)

    @property
    def magnitude_bound(self) -> float:
        return 1.0 if self.kind == BERNOULLI else self.b

    def draw(self, rng: np.random.Generator, shape) -> np.ndarray:
        """Raw array of i.i.d. components with the given shape."""
        signs = 2.0 * rng.integers(0, 2, size=shape) - 1.0
        if self.kind == BERNOULLI:
            return signs
        return signs * rng.uniform(self.a, self.b, size=shape)


@dataclass(frozen=True)
class PerturbationVector:
    delta: np.ndarray
    delta_inv: np.ndarray = field(repr=False)

    @classmethod
    def from_delta(cls, delta) -> "PerturbationVector":
        delta = np.asarray(delta, dtype=float)
        if np.any(delta == 0.0):
            raise ValidationError("perturbation components must be nonzero")
        return cls(delta, 1.0 / delta)

    def __len__(self):
        return self.delta.shape[-1]


def sample_perturbation(spec: PerturbationSpec, p: int, rng: np.random.Generator) -> PerturbationVector:
    if p < 1:
        raise ValidationError(f"p must be >= 1, got {p}")
    return PerturbationVector.from_delta(spec.draw(rng, p))


def sample_independent_perturbations(
    spec: PerturbationSpec, p: int, n: int, rng: np.random.Generator
) -> list[PerturbationVector]:
    """One independent direction per datum, drawn as a single ``(n, p)`` batch."""
    if p < 1 or n < 1:
        raise ValidationError(f"need p >= 1 and n >= 1, got p={p}, n={n}")
    batch = spec.draw(rng, (n, p))
    return [PerturbationVector.from_delta(row) for row in batch]
