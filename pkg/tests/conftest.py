import numpy as np
import pytest

from baxterchain.special import NomeQ, EllipticModuli


@pytest.fixture
def q():
    return NomeQ(0.44 + 0.12j)


@pytest.fixture
def moduli():
    return EllipticModuli(0.31 + 1.05j, 0.17 + 0.40j)


@pytest.fixture
def rng():
    return np.random.default_rng(20240915)


def rel(a, b):
    a, b = complex(a), complex(b)
    return abs(a - b) / max(abs(a), abs(b), 1e-300)
