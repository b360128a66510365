import os

import pytest

from dtasep.disorder import RateLaw


def worker_count() -> int:
    """Worker count for heavy statistical tests (env override)."""
    env = os.environ.get("DTASEP_TEST_JOBS")
    if env:
        return max(1, int(env))
    return min(2, os.cpu_count() or 1)


@pytest.fixture(scope="session")
def bench_law() -> RateLaw:
    """The benchmark law used throughout: u* = 2, alpha = 1/3, A = 27/4."""
    return RateLaw(c=0.5, nu=1.0, kappa=4.0, eps=0.5)


@pytest.fixture(scope="session")
def jobs() -> int:
    return worker_count()
