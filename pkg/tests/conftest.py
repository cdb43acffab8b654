import itertools
import math

import pytest

from shortlist import Ranking


def make_ranking(*items) -> Ranking:
    return Ranking(tuple(items))


def discordant_pairs(a: Ranking, b: Ranking) -> int:
    """O(m^2) pair-counting reference for the Kendall-Tau distance."""
    count = 0
    for x in range(a.m):
        for y in range(x + 1, a.m):
            if (a.position(x) < a.position(y)) != (b.position(x) < b.position(y)):
                count += 1
    return count


def mallows_support_oracle(center: Ranking, phi: float):
    """Independent enumeration of a Mallows distribution.

    Uses pair counting for the distance and normalizes by the summed weights,
    so it shares no code path with the closed-form normalizers under test.
    """
    perms = [Ranking(p) for p in itertools.permutations(range(center.m))]
    weights = [math.exp(-phi * discordant_pairs(center, r)) for r in perms]
    total = math.fsum(weights)
    return [(r, w / total) for r, w in zip(perms, weights)]


def first_in_menu(ranking: Ranking, menu) -> int:
    return min(menu, key=ranking.position)


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(20240801)
