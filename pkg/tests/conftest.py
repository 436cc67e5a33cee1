import itertools

import numpy as np
import pytest


def brute_mode_product(t, m, mode):
    """Triple-loop contraction used as an oracle for mode-n products."""
    dims = list(t.shape)
    dims[mode - 1] = m.shape[0]
    out = np.zeros(dims)
    for idx in itertools.product(*[range(d) for d in dims]):
        acc = 0.0
        for r in range(t.shape[mode - 1]):
            src = list(idx)
            src[mode - 1] = r
            acc += m[idx[mode - 1], r] * t[tuple(src)]
        out[idx] = acc
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def ramp222():
    # entry(i, j, k) = i + 2(j-1) + 4(k-1), 1-based
    t = np.zeros((2, 2, 2))
    for i, j, k in itertools.product(range(2), repeat=3):
        t[i, j, k] = (i + 1) + 2 * j + 4 * k
    return t
