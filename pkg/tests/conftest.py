import math

import mpmath as mp
import numpy as np
import pytest


def brute_power_sum(c, gamma, nu, alpha, head=10**6):
    """Direct sum of k^-c (k^-alpha + nu)^-gamma up to `head`, plus the midpoint-rule tail integral."""
    k = np.arange(1, head + 1, dtype=float)
    total = math.fsum((k ** -c * (k ** -alpha + nu) ** -gamma).tolist())
    f = lambda x: x ** -c * (x ** -alpha + nu) ** -gamma
    start = head + 0.5
    pts = [start] + [start * 10 ** j for j in range(1, 40)] + [mp.inf]
    return total + float(mp.quad(f, pts))


@pytest.fixture
def brute():
    return brute_power_sum
