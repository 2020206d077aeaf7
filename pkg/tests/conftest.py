import sys

import numpy as np
import pytest

from spfim import matrixcore as mc
from spfim import models, streams

NOISE_SEED = 20240601
MIXTURE_THETA = [0.2, 0.0, 4.0, 1.0, 9.0]


def reference_spn(n=30, seed=NOISE_SEED):
    """Signal-plus-noise setting: mu = 0, Sigma = 0.5 off-diagonal / 2 diagonal, P_i = sqrt(i) U^T U."""
    rng = streams.stream(seed, streams.SETUP)
    return models.spn_model(np.zeros(3), models.default_sigma(), models.scaled_noise_covariances(n, rng))


def random_spd(rng, p):
    b = rng.standard_normal((p, p))
    return mc.SymmetricMatrix.from_dense(b.T @ b + np.eye(p), atol=1e-12)


@pytest.fixture(scope="session")
def spn():
    return reference_spn()


@pytest.fixture(scope="session")
def mixture():
    return models.mixture_model(MIXTURE_THETA, 30)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        terminalreporter.write_line(results[k])
