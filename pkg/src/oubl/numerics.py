"""Shared numeric helpers: sequence acceleration, Gauss-Legendre rules, grids."""
from functools import lru_cache

import numpy as np


def wynn_epsilon(seq):
    """Limit estimate of a sequence by Wynn's epsilon algorithm.

    Returns the deepest even-column entry built from the whole sequence
    (the last value when fewer than three terms are given).  Stops early,
    returning the current entry, when two neighbours coincide.

    >>> round(wynn_epsilon([1 - 0.5 ** k for k in range(1, 8)]), 12)
    1.0
    """
    s = [float(x) for x in seq]
    n = len(s)
    if n < 3:
        return s[-1]
    prev = [0.0] * (n + 1)
    cur = list(s)
    best = s[-1]
    k = 0
    while len(cur) > 1:
        nxt = []
        for i in range(len(cur) - 1):
            d = cur[i + 1] - cur[i]
            if d == 0.0 or not np.isfinite(d):
                # converged column: the even entries carry the limit
                return cur[i + 1] if k % 2 == 0 else best
            nxt.append(prev[i + 1] + 1.0 / d)
        prev, cur = cur, nxt
        k += 1
        if k % 2 == 0 and cur and np.isfinite(cur[-1]):
            best = cur[-1]
    return best


@lru_cache(maxsize=64)
def gauss_legendre(n):
    """Nodes and weights of the ``n``-point Gauss-Legendre rule on ``[-1, 1]``."""
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gl_panel(a, b, n):
    """Gauss-Legendre nodes/weights mapped to ``[a, b]``."""
    x, w = gauss_legendre(n)
    h = 0.5 * (b - a)
    return a + h * (x + 1.0), h * w


def chebyshev_interior(a, b, n):
    """``n`` Chebyshev points of the first kind strictly inside ``(a, b)``."""
    k = np.arange(n)
    x = np.cos((2 * k + 1) * np.pi / (2 * n))[::-1]
    return a + 0.5 * (b - a) * (x + 1.0)
