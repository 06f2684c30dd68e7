import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nvzeno.hamiltonians import SystemParams, ZenoRegimeWarning

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def op_point():
    return SystemParams.symmetric(omega=0.05, delta=0.5)


@pytest.fixture(autouse=True)
def _quiet_zeno():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ZenoRegimeWarning)
        yield


def random_state(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_density(rng, dim, rank=3):
    vs = [random_state(rng, dim) for _ in range(rank)]
    w = rng.random(rank)
    w /= w.sum()
    return sum(p * np.outer(v, v.conj()) for p, v in zip(w, vs))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
