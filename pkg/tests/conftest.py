import numpy as np
import pytest

from ttdiv import tt_random


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_tt(seed, d=None, n=None, r=None, field="real"):
    """Seeded random TT with d in {2,3,4}, n in {4,6,8}, interior ranks in 1..3."""
    g = np.random.default_rng(seed)
    d = d or int(g.integers(2, 5))
    n = n or int(g.choice([4, 6, 8]))
    ranks = [int(g.integers(1, 4)) if r is None else r for _ in range(d - 1)]
    return tt_random([n] * d, ranks, g, field=field)
