import functools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from needle_charges import solve

settings.register_profile(
    "default",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@functools.lru_cache(maxsize=None)
def cached_solve(n):
    return solve(n)


@pytest.fixture(scope="session")
def solved():
    return cached_solve


def quartic_root():
    """Root of X^4 + 6X^3 - 11X^2 + 6X - 1 in (0, 1/2), by bisection."""
    def p(t):
        return t**4 + 6 * t**3 - 11 * t**2 + 6 * t - 1

    lo, hi = 0.0, 0.5
    assert p(lo) * p(hi) < 0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if p(lo) * p(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


ALPHA = quartic_root()


def direct_forces(x):
    """Net force on each interior charge, summed in plain python."""
    x = [float(v) for v in x]
    out = []
    for i in range(1, len(x) - 1):
        f = sum(1.0 / (x[i] - x[j]) ** 2 for j in range(i))
        f -= sum(1.0 / (x[i] - x[j]) ** 2 for j in range(i + 1, len(x)))
        out.append(f)
    return np.array(out)
