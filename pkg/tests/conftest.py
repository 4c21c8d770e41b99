import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mrws import builders


@pytest.fixture
def p3():
    return builders.p3()


@pytest.fixture
def k3():
    return builders.k3()


@pytest.fixture
def two_block():
    return builders.two_block(0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_spaces(count, rng, n_lo=2, n_hi=12, connected=True):
    return [builders.random_reversible_space(int(rng.integers(n_lo, n_hi + 1)), rng,
                                             density=float(rng.uniform(0.3, 0.9)),
                                             connected=connected,
                                             self_loops=bool(rng.random() < 0.4))
            for _ in range(count)]
