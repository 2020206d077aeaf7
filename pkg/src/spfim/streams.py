"""Counter-based random streams.

Every replicate gets its own :class:`numpy.random.Generator` built from a
Philox key (seed, purpose) and a counter block derived from the replicate's
integer coordinates. A replicate's draws therefore depend only on
``(seed, purpose, coordinates)``, never on which worker computed it or how
many other replicates were consumed first.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1

# purposes; kept distinct so that oracle and estimator draws never coincide
ESTIMATOR = 1
ORACLE = 2
SETUP = 3


def stream(seed: int, purpose: int, a: int = 0, b: int = 0) -> np.random.Generator:
    """Independent generator for coordinates ``(a, b)`` under ``(seed, purpose)``.

    ``a`` and ``b`` occupy the two high counter words, so each stream owns
    2**128 Philox blocks before it could run into a neighbour.
    """
    bitgen = np.random.Philox(key=[seed & _MASK64, purpose], counter=[0, 0, a, b])
    return np.random.Generator(bitgen)


def child_seed(seed: int, index: int) -> int:
    """Deterministic 64-bit seed for the ``index``-th sub-run of a run."""
    ss = np.random.SeedSequence(entropy=seed & _MASK64, spawn_key=(index,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
