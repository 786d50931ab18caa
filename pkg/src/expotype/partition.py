"""Two-sided partitions of the line and the shortness series.

A partition is a finite increasing list of breakpoints containing 0.  The
intervals are ``I_n = (a_n, a_{n+1}]`` with ``a_0 = 0``; the leftmost
interval is also closed on the left so that a closed truncation window is
covered exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _dd
from .measure import Interval
from .series import DEFAULT_TOLERANCES, SeriesDiagnostics, Tolerances, two_sided


class PartitionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Partition:
    breakpoints: np.ndarray

    def __post_init__(self):
        b = np.array(self.breakpoints, dtype=float)
        if b.ndim != 1 or len(b) < 2:
            raise PartitionError("a partition needs at least two breakpoints")
        if not np.all(np.isfinite(b)) or np.any(np.diff(b) <= 0):
            raise PartitionError("breakpoints must be finite and strictly increasing")
        if not np.any(b == 0.0):
            raise PartitionError("breakpoints must contain 0")
        b.setflags(write=False)
        object.__setattr__(self, "breakpoints", b)

    def __eq__(self, other):
        return isinstance(other, Partition) and np.array_equal(self.breakpoints, other.breakpoints)

    def __len__(self):
        return len(self.breakpoints) - 1

    @property
    def zero(self) -> int:
        return int(np.nonzero(self.breakpoints == 0.0)[0][0])

    @property
    def index(self) -> np.ndarray:
        """Signed interval labels ``n``."""
        return np.arange(len(self)) - self.zero

    @property
    def lefts(self) -> np.ndarray:
        return self.breakpoints[:-1]

    @property
    def rights(self) -> np.ndarray:
        return self.breakpoints[1:]

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    @property
    def dist0(self) -> np.ndarray:
        """``dist(0, I_n)``; zero when 0 lies in the closure."""
        return np.where(self.lefts >= 0, self.lefts, np.where(self.rights <= 0, -self.rights, 0.0))

    @property
    def span(self) -> Interval:
        return Interval(float(self.breakpoints[0]), float(self.breakpoints[-1]))

    def interval(self, k: int) -> Interval:
        """Interval at array position ``k`` (not the signed label)."""
        return Interval(float(self.breakpoints[k]), float(self.breakpoints[k + 1]),
                        closed_left=(k == 0), closed_right=True)

    def locate(self, points, offsets=None) -> np.ndarray:
        """Array position of the interval holding each point.

        Raises :class:`PartitionError` for points outside the span.
        """
        x = np.atleast_1d(np.asarray(points, dtype=float))
        off = np.zeros_like(x) if offsets is None else np.atleast_1d(np.asarray(offsets, dtype=float))
        b = self.breakpoints
        # breakpoints strictly below each point, in (hi, lo) order
        below = np.searchsorted(b, x, "left")
        tie = (below < len(b)) & (b[np.minimum(below, len(b) - 1)] == x)
        pos = below + (tie & (off > 0)) - 1
        pos = np.where((x == b[0]) & (off == 0), 0, pos)
        bad = (pos < 0) | (pos >= len(self))
        if np.any(bad):
            raise PartitionError(f"{int(bad.sum())} point(s) outside the partition span "
                                 f"[{b[0]}, {b[-1]}], e.g. {x[bad][0]}")
        return pos


def shortness_series(p: Partition, tol: Tolerances = DEFAULT_TOLERANCES) -> SeriesDiagnostics:
    """Terms ``|I_n|^2 / (1 + dist^2(0, I_n))`` summed outward from ``n = 0``."""
    if len(p) < 3:
        raise PartitionError("shortness needs at least three intervals")
    terms = p.lengths ** 2 / (1.0 + p.dist0 ** 2)
    return two_sided(terms, p.index, tol, trim_edges=True)


def _close_off(pos: list[float], end: float) -> list[float]:
    """Append ``end``; drop the previous breakpoint if the last piece is a sliver."""
    if len(pos) >= 2 and (end - pos[-1]) < 0.5 * (pos[-1] - pos[-2]):
        pos = pos[:-1]
    if not pos or pos[-1] < end:
        pos = pos + [end]
    return pos


def _symmetric(pos_side: list[float], R: float) -> Partition:
    side = _close_off([0.0] + pos_side, R)
    return Partition(np.array([-x for x in reversed(side[1:])] + side))


def power_partition(p_exponent: float, R: float) -> Partition:
    """Breakpoints ``0, ±1, ±2^p, ±3^p, ...`` below ``R``, closed off at ``±R``."""
    if not p_exponent > 1:
        raise PartitionError("power partition exponent must exceed 1")
    if not R > 1:
        raise PartitionError("power partition needs R > 1")
    k = np.arange(1, int(np.floor(R ** (1.0 / p_exponent))) + 2, dtype=float)
    pts = k ** p_exponent
    return _symmetric(pts[pts < R].tolist(), float(R))


def dyadic_partition(R: float) -> Partition:
    """Breakpoints ``0, ±1, ±2, ±4, ...`` below ``R`` (a long partition)."""
    if not R > 1:
        raise PartitionError("dyadic partition needs R > 1")
    pts = 2.0 ** np.arange(0, int(np.ceil(np.log2(R))) + 1)
    return _symmetric(pts[pts < R].tolist(), float(R))


def _targets(span: Interval, p_exponent: float) -> np.ndarray:
    hi = max(abs(span.left), abs(span.right))
    k = np.arange(1, int(np.floor(hi ** (1.0 / p_exponent))) + 2, dtype=float)
    t = k ** p_exponent
    t = np.concatenate([-t[::-1], [0.0], t])
    return t[(t > span.left) & (t < span.right)]


def adapted_partition(points, p_exponent: float = 1.5, span: Interval | None = None,
                      offsets=None) -> Partition:
    """Power-law partition whose breakpoints sit in the gaps of ``points``.

    Each target ``±k^p`` is moved to the midpoint of the largest gap between
    consecutive points that meets a neighbourhood of radius a quarter of the
    local target spacing (ties go to the midpoint nearest the target).  Gap
    midpoints are at least half a gap from every point, so no star interval
    (radius at most a sixth of the gap) is ever split.  Targets with no gap
    nearby stay where they are.  ``0`` is always kept.
    """
    x = np.asarray(points, dtype=float)
    off = np.zeros_like(x) if offsets is None else np.asarray(offsets, dtype=float)
    if len(x) < 2:
        raise PartitionError("adapted partition needs at least two points")
    if np.any(~_dd.less(x[:-1], off[:-1], x[1:], off[1:])):
        raise PartitionError("points must be sorted and distinct")
    if not p_exponent > 1:
        raise PartitionError("power partition exponent must exceed 1")
    if span is None:
        span = Interval(float(x[0] - 0.5 * (x[1] - x[0])), float(x[-1] + 0.5 * (x[-1] - x[-2])))
    lo = min(span.left, 0.0 - 1.0)
    hi = max(span.right, 1.0)
    span = Interval(lo, hi)

    gaps = _dd.diff(x[1:], off[1:], x[:-1], off[:-1])
    mids = 0.5 * (x[:-1] + x[1:])
    g_lo, g_hi = x[:-1], x[1:]

    t = _targets(span, p_exponent)
    chosen = []
    for j, tj in enumerate(t):
        if tj == 0.0:
            continue
        left_t = t[j - 1] if j > 0 else span.left
        right_t = t[j + 1] if j + 1 < len(t) else span.right
        rho = 0.25 * min(tj - left_t, right_t - tj)
        a = np.searchsorted(g_hi, tj - rho, "right")
        b = np.searchsorted(g_lo, tj + rho, "left")
        if b <= a:
            chosen.append(tj)
            continue
        cand = np.arange(a, b)
        g = gaps[cand]
        best = g.max()
        tied = cand[g >= best * (1 - 1e-12)]
        k = tied[np.argmin(np.abs(mids[tied] - tj))]
        chosen.append(float(mids[k]))
    neg = sorted({c for c in chosen if span.left < c < 0})
    pos = sorted({c for c in chosen if 0 < c < span.right})
    right = _close_off([0.0] + pos, span.right)
    left = _close_off([0.0] + [-c for c in reversed(neg)], -span.left)
    return Partition(np.array([-c for c in reversed(left[1:])] + right))
