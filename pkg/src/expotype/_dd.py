"""Unevaluated-sum positions ``hi + lo`` for points closer than float spacing.

The shifted comb ``n + exp(-|n|)`` collapses onto the integers in float64
once ``|n| >= 37``.  Positions are therefore carried as a normalised pair
(``hi = fl(hi + lo)``), so lexicographic order on ``(hi, lo)`` is the real
order and differences keep the tiny gaps.
"""

import numpy as np


def two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def add(hi, lo, b):
    """Normalised ``(hi + lo) + b``."""
    s, e = two_sum(hi, b)
    e = e + lo
    h = s + e
    return h, e - (h - s)


def diff(hi_a, lo_a, hi_b, lo_b):
    """``(hi_a + lo_a) - (hi_b + lo_b)`` rounded once at the end."""
    d, e = two_sum(hi_a, -hi_b)
    return d + (e + (lo_a - lo_b))


def less(hi_a, lo_a, hi_b, lo_b):
    return (hi_a < hi_b) | ((hi_a == hi_b) & (lo_a < lo_b))


def lexsort(hi, lo):
    return np.lexsort((lo, hi))


def searchsorted(hi, lo, q_hi, q_lo, side="left"):
    """``np.searchsorted`` on lexicographically sorted pairs.

    ``side='left'`` counts elements strictly below the query, ``'right'``
    counts elements below or equal.
    """
    hi = np.asarray(hi)
    lo = np.asarray(lo)
    q_hi = np.atleast_1d(np.asarray(q_hi, dtype=float))
    q_lo = np.broadcast_to(np.asarray(q_lo, dtype=float), q_hi.shape)
    a = np.searchsorted(hi, q_hi, "left")
    b = np.searchsorted(hi, q_hi, "right")
    out = a.copy()
    for j in np.nonzero(b > a)[0]:
        block = lo[a[j]:b[j]]
        out[j] = a[j] + np.searchsorted(block, q_lo[j], side)
    return out
