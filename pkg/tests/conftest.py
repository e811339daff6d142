import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from fixed_point_forest import Permutation

settings.register_profile("default", deadline=None, max_examples=200,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def all_perms(n):
    return [Permutation(p) for p in itertools.permutations(range(1, n + 1))]


@st.composite
def permutations(draw, min_n=1, max_n=9):
    n = draw(st.integers(min_n, max_n))
    return Permutation(draw(st.permutations(list(range(1, n + 1)))))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def derangement_count(n):
    # D_n = (n - 1)(D_{n-1} + D_{n-2}), an oracle independent of inclusion-exclusion
    d = [1, 0]
    for m in range(2, n + 1):
        d.append((m - 1) * (d[-1] + d[-2]))
    return d[n]
