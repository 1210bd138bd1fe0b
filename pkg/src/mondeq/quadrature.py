"""Gauss-Legendre helpers shared by the radial integrals."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def gauss_legendre(n: int):
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def segment_nodes(a, b, n: int, sqrt_start=None):
    """Gauss nodes for every interval [a_i, b_i].

    Where ``sqrt_start`` is true the map s = a + (b - a) u^2 is used, which
    integrates a (s - a)^{1/2} endpoint behaviour without order loss.
    Returns (nodes, weights) of shape (len(a), n).
    """
    a = np.asarray(a, dtype=float)[:, None]
    b = np.asarray(b, dtype=float)[:, None]
    x, w = gauss_legendre(n)
    h = b - a
    lin_s = a + h * x
    lin_w = h * w
    if sqrt_start is None:
        return lin_s, np.broadcast_to(lin_w, lin_s.shape).copy()
    mask = np.asarray(sqrt_start, dtype=bool)[:, None]
    sq_s = a + h * x * x
    sq_w = h * 2.0 * x * w
    return np.where(mask, sq_s, lin_s), np.where(mask, sq_w, lin_w)
