from functools import lru_cache

import numpy as np
import pytest
import sympy as sp


@lru_cache(maxsize=None)
def sympy_moment(a: int, b: int) -> float:
    """Iterated integral of x1^a x2^b over the triangle (-1,-1), (1,-1), (-1,1)."""
    x1, x2 = sp.symbols("x1 x2")
    inner = sp.integrate(x1**a * x2**b, (x1, -1, -x2))
    return float(sp.integrate(inner, (x2, -1, 1)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
