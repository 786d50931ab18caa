"""Positive measures on a finite window of the line.

Two concrete kinds are supported: finitely many atoms, and piecewise-constant
densities.  Every measure carries the truncation window it lives on, and
all downstream verdicts are reported against that window.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from . import _dd
from .series import DEFAULT_TOLERANCES, SeriesDiagnostics, Tolerances, diagnose


@dataclass(frozen=True)
class Interval:
    left: float
    right: float
    closed_left: bool = True
    closed_right: bool = True
    # sub-ulp parts of the endpoints, see _dd
    left_off: float = 0.0
    right_off: float = 0.0

    def __post_init__(self):
        if _dd.less(self.right, self.right_off, self.left, self.left_off):
            raise ValueError(f"interval with left {self.left} > right {self.right}")

    @property
    def length(self) -> float:
        return float(_dd.diff(self.right, self.right_off, self.left, self.left_off))

    @property
    def center(self) -> float:
        return 0.5 * (self.left + self.right)

    def contains(self, x: float, off: float = 0.0) -> bool:
        lo = (not _dd.less(x, off, self.left, self.left_off)) if self.closed_left \
            else bool(_dd.less(self.left, self.left_off, x, off))
        hi = (not _dd.less(self.right, self.right_off, x, off)) if self.closed_right \
            else bool(_dd.less(x, off, self.right, self.right_off))
        return bool(lo and hi)


def closed(a: float, b: float) -> Interval:
    return Interval(float(a), float(b), True, True)


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    """Finitely many point masses, sorted by position."""

    positions: np.ndarray
    masses: np.ndarray
    window: Interval
    offsets: np.ndarray = None

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        ms = np.asarray(self.masses, dtype=float)
        off = np.zeros_like(pos) if self.offsets is None else np.asarray(self.offsets, dtype=float)
        if not (pos.shape == ms.shape == off.shape) or pos.ndim != 1:
            raise ValueError("positions, masses and offsets must be equal-length vectors")
        if np.any(~(ms > 0)):
            raise ValueError("atom masses must be positive")
        if len(pos) > 1 and np.any(~_dd.less(pos[:-1], off[:-1], pos[1:], off[1:])):
            raise ValueError("atom positions must be strictly increasing")
        if len(pos) and not (self.window.contains(pos[0], off[0]) and self.window.contains(pos[-1], off[-1])):
            raise ValueError("atoms outside the window")
        object.__setattr__(self, "positions", _frozen(pos))
        object.__setattr__(self, "masses", _frozen(ms))
        object.__setattr__(self, "offsets", _frozen(off))

    kind = "atomic"

    def __len__(self):
        return len(self.positions)

    def total_mass(self) -> float:
        return math.fsum(self.masses)

    def _span(self, i: Interval) -> tuple[int, int]:
        side_l = "left" if i.closed_left else "right"
        side_r = "right" if i.closed_right else "left"
        a = int(_dd.searchsorted(self.positions, self.offsets, i.left, i.left_off, side_l)[0])
        b = int(_dd.searchsorted(self.positions, self.offsets, i.right, i.right_off, side_r)[0])
        return a, max(a, b)

    def mass(self, i: Interval) -> float:
        a, b = self._span(i)
        return math.fsum(self.masses[a:b])

    def masses_of(self, lefts, rights, closed_left=True, closed_right=True,
                  left_offs=0.0, right_offs=0.0) -> np.ndarray:
        lefts = np.atleast_1d(np.asarray(lefts, dtype=float))
        rights = np.atleast_1d(np.asarray(rights, dtype=float))
        cm = np.concatenate([[0.0], np.cumsum(self.masses)])
        a = _dd.searchsorted(self.positions, self.offsets, lefts, left_offs,
                             "left" if closed_left else "right")
        b = _dd.searchsorted(self.positions, self.offsets, rights, right_offs,
                             "right" if closed_right else "left")
        b = np.maximum(a, b)
        return cm[b] - cm[a]


@dataclass(frozen=True, eq=False)
class DensityMeasure:
    """Piecewise-constant density; pieces are half-open ``[left, right)``.

    ``left_offs``/``right_offs`` are sub-ulp endpoint parts (see ``_dd``),
    needed for pieces much narrower than the float spacing at their
    position.
    """

    lefts: np.ndarray
    rights: np.ndarray
    heights: np.ndarray
    window: Interval
    left_offs: np.ndarray = None
    right_offs: np.ndarray = None

    def __post_init__(self):
        l = np.asarray(self.lefts, dtype=float)
        r = np.asarray(self.rights, dtype=float)
        h = np.asarray(self.heights, dtype=float)
        lo = np.zeros_like(l) if self.left_offs is None else np.asarray(self.left_offs, dtype=float)
        ro = np.zeros_like(r) if self.right_offs is None else np.asarray(self.right_offs, dtype=float)
        if not (l.shape == r.shape == h.shape == lo.shape == ro.shape) or l.ndim != 1:
            raise ValueError("lefts, rights, heights and offsets must be equal-length vectors")
        if np.any(~_dd.less(l, lo, r, ro)):
            raise ValueError("density pieces must have positive length")
        if np.any(~(h >= 0)) or not np.all(np.isfinite(h)):
            raise ValueError("heights must be finite and nonnegative")
        if len(l) > 1 and np.any(_dd.less(l[1:], lo[1:], r[:-1], ro[:-1])):
            raise ValueError("density pieces must be sorted and disjoint")
        w = self.window
        if len(l) and (_dd.less(l[0], lo[0], w.left, w.left_off)
                       or _dd.less(w.right, w.right_off, r[-1], ro[-1])):
            raise ValueError("density pieces outside the window")
        object.__setattr__(self, "lefts", _frozen(l))
        object.__setattr__(self, "rights", _frozen(r))
        object.__setattr__(self, "heights", _frozen(h))
        object.__setattr__(self, "left_offs", _frozen(lo))
        object.__setattr__(self, "right_offs", _frozen(ro))

    kind = "density"
    closure = (True, False)

    def __len__(self):
        return len(self.lefts)

    @property
    def widths(self) -> np.ndarray:
        return _dd.diff(self.rights, self.right_offs, self.lefts, self.left_offs)

    @property
    def piece_masses(self) -> np.ndarray:
        return self.heights * self.widths

    def total_mass(self) -> float:
        return math.fsum(self.piece_masses)

    def mass(self, i: Interval) -> float:
        a = int(_dd.searchsorted(self.rights, self.right_offs, i.left, i.left_off, "right")[0])
        b = int(_dd.searchsorted(self.lefts, self.left_offs, i.right, i.right_off, "left")[0])
        if b <= a:
            return 0.0
        return math.fsum(self.heights[a:b] * self._overlap(slice(a, b), i.left, i.left_off,
                                                          i.right, i.right_off))

    def _overlap(self, k, a, a_off, b, b_off) -> np.ndarray:
        """Length of piece ``k`` inside ``[a, b]``."""
        w = self.widths[k]
        cut_l = np.maximum(_dd.diff(a, a_off, self.lefts[k], self.left_offs[k]), 0.0)
        cut_r = np.maximum(_dd.diff(self.rights[k], self.right_offs[k], b, b_off), 0.0)
        return np.clip(w - cut_l - cut_r, 0.0, w)

    def cdf(self, x, off=0.0) -> np.ndarray:
        """Mass of ``(-inf, x]``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        off = np.broadcast_to(np.asarray(off, dtype=float), x.shape)
        if len(self.lefts) == 0:
            return np.zeros_like(x)
        cm = np.concatenate([[0.0], np.cumsum(self.piece_masses)])
        j = _dd.searchsorted(self.lefts, self.left_offs, x, off, "right") - 1
        jj = np.clip(j, 0, len(self.lefts) - 1)
        inside = np.clip(_dd.diff(x, off, self.lefts[jj], self.left_offs[jj]), 0.0, self.widths[jj])
        return np.where(j >= 0, cm[jj] + self.heights[jj] * inside, 0.0)

    def masses_of(self, lefts, rights, closed_left=True, closed_right=True,
                  left_offs=0.0, right_offs=0.0) -> np.ndarray:
        lefts = np.atleast_1d(np.asarray(lefts, dtype=float))
        rights = np.atleast_1d(np.asarray(rights, dtype=float))
        left_offs = np.broadcast_to(np.asarray(left_offs, dtype=float), lefts.shape)
        right_offs = np.broadcast_to(np.asarray(right_offs, dtype=float), rights.shape)
        out = np.maximum(self.cdf(rights, right_offs) - self.cdf(lefts, left_offs), 0.0)
        # small intervals inside one piece: direct product avoids cancellation
        if len(self.lefts):
            ja = _dd.searchsorted(self.lefts, self.left_offs, lefts, left_offs, "right") - 1
            jb = _dd.searchsorted(self.lefts, self.left_offs, rights, right_offs, "right") - 1
            same = (ja == jb) & (ja >= 0)
            if np.any(same):
                k = ja[same]
                out[same] = self.heights[k] * self._overlap(k, lefts[same], left_offs[same],
                                                            rights[same], right_offs[same])
        return out

    def height_at(self, x, off=0.0) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        off = np.broadcast_to(np.asarray(off, dtype=float), x.shape)
        if len(self.lefts) == 0:
            return np.zeros_like(x)
        j = _dd.searchsorted(self.lefts, self.left_offs, x, off, "right") - 1
        jj = np.clip(j, 0, len(self.lefts) - 1)
        inside = (j >= 0) & _dd.less(x, off, self.rights[jj], self.right_offs[jj])
        return np.where(inside, self.heights[jj], 0.0)


Measure = Union[AtomicMeasure, DensityMeasure]


def mass(m: Measure, i: Interval) -> float:
    """Exact mass of ``i``, honouring endpoint closure for atoms."""
    return m.mass(i)


def masses_of(m: Measure, intervals) -> np.ndarray:
    """Vectorised :func:`mass` for a list of intervals."""
    intervals = list(intervals)
    if not intervals:
        return np.zeros(0)
    out = np.empty(len(intervals))
    # group by closure pattern so each group is one vector call
    groups: dict[tuple[bool, bool], list[int]] = {}
    for k, i in enumerate(intervals):
        groups.setdefault((i.closed_left, i.closed_right), []).append(k)
    for (cl, cr), ks in groups.items():
        sel = [intervals[k] for k in ks]
        out[ks] = m.masses_of([i.left for i in sel], [i.right for i in sel], cl, cr,
                              np.array([i.left_off for i in sel]),
                              np.array([i.right_off for i in sel]))
    return out


def support_hull(m: Measure) -> Interval | None:
    if len(m) == 0:
        return None
    if isinstance(m, AtomicMeasure):
        return Interval(m.positions[0], m.positions[-1], left_off=m.offsets[0], right_off=m.offsets[-1])
    nz = np.nonzero(m.heights > 0)[0]
    if len(nz) == 0:
        return None
    i, j = nz[0], nz[-1]
    return Interval(m.lefts[i], m.rights[j], left_off=m.left_offs[i], right_off=m.right_offs[j])


def is_zero(m: Measure) -> bool:
    return support_hull(m) is None


def scaled(m: Measure, t: float) -> Measure:
    """The measure ``t * m``."""
    if not t > 0:
        raise ValueError("scale factor must be positive")
    if isinstance(m, AtomicMeasure):
        return AtomicMeasure(m.positions, m.masses * t, m.window, m.offsets)
    return DensityMeasure(m.lefts, m.rights, m.heights * t, m.window, m.left_offs, m.right_offs)


# --- restriction and sums ---------------------------------------------------
# Endpoints below are (hi, lo) tuples: tuple order is the real order.

def _pieces(m: DensityMeasure):
    return list(zip(zip(m.lefts.tolist(), m.left_offs.tolist()),
                    zip(m.rights.tolist(), m.right_offs.tolist()), m.heights.tolist()))


def _from_pieces(pieces, window) -> DensityMeasure:
    if not pieces:
        return DensityMeasure([], [], [], window)
    lefts = np.array([p[0][0] for p in pieces]); left_offs = np.array([p[0][1] for p in pieces])
    rights = np.array([p[1][0] for p in pieces]); right_offs = np.array([p[1][1] for p in pieces])
    return DensityMeasure(lefts, rights, [p[2] for p in pieces], window, left_offs, right_offs)


def _sorted_ends(intervals):
    return sorted(((float(i.left), float(i.left_off)), (float(i.right), float(i.right_off)))
                  for i in intervals)


def _atom_mask(m: AtomicMeasure, intervals) -> np.ndarray:
    inside = np.zeros(len(m), dtype=bool)
    for i in intervals:
        a, b = m._span(i)
        inside[a:b] = True
    return inside


def restrict(m: Measure, intervals) -> Measure:
    """``m`` restricted to the union of ``intervals`` (assumed disjoint)."""
    intervals = list(intervals)
    if isinstance(m, AtomicMeasure):
        keep = _atom_mask(m, intervals)
        return AtomicMeasure(m.positions[keep], m.masses[keep], m.window, m.offsets[keep])
    out = []
    for a, b in _sorted_ends(intervals):
        s = int(_dd.searchsorted(m.rights, m.right_offs, a[0], a[1], "right")[0])
        e = int(_dd.searchsorted(m.lefts, m.left_offs, b[0], b[1], "left")[0])
        for k in range(s, e):
            l2 = max((float(m.lefts[k]), float(m.left_offs[k])), a)
            r2 = min((float(m.rights[k]), float(m.right_offs[k])), b)
            if l2 < r2:
                out.append((l2, r2, float(m.heights[k])))
    out.sort()
    return _from_pieces(out, m.window)


def remove(m: Measure, intervals) -> Measure:
    """``m`` minus its restriction to the union of ``intervals``."""
    intervals = list(intervals)
    if isinstance(m, AtomicMeasure):
        keep = ~_atom_mask(m, intervals)
        return AtomicMeasure(m.positions[keep], m.masses[keep], m.window, m.offsets[keep])
    if not intervals:
        return m
    ends = _sorted_ends(intervals)
    his = [e[1] for e in ends]
    out = []
    for l, r, h in _pieces(m):
        s = bisect.bisect_right(his, l)
        cur = l
        for a, b in ends[s:]:
            if a >= r:
                break
            if a > cur:
                out.append((cur, a, h))
            cur = max(cur, b)
        if r > cur:
            out.append((cur, r, h))
    return _from_pieces(out, m.window)


def add(m1: Measure, m2: Measure) -> Measure:
    """Sum of two measures of the same kind; coinciding atoms merge."""
    window = Interval(min(m1.window.left, m2.window.left), max(m1.window.right, m2.window.right))
    if isinstance(m1, AtomicMeasure) and isinstance(m2, AtomicMeasure):
        pos = np.concatenate([m1.positions, m2.positions])
        off = np.concatenate([m1.offsets, m2.offsets])
        ms = np.concatenate([m1.masses, m2.masses])
        order = _dd.lexsort(pos, off)
        pos, off, ms = pos[order], off[order], ms[order]
        new = np.ones(len(pos), dtype=bool)
        new[1:] = (pos[1:] != pos[:-1]) | (off[1:] != off[:-1])
        groups = np.cumsum(new) - 1
        merged = np.zeros(int(new.sum()))
        np.add.at(merged, groups, ms)
        return AtomicMeasure(pos[new], merged, window, off[new])
    if isinstance(m1, DensityMeasure) and isinstance(m2, DensityMeasure):
        hi = np.concatenate([m1.lefts, m1.rights, m2.lefts, m2.rights])
        lo = np.concatenate([m1.left_offs, m1.right_offs, m2.left_offs, m2.right_offs])
        order = _dd.lexsort(hi, lo)
        hi, lo = hi[order], lo[order]
        new = np.ones(len(hi), dtype=bool)
        new[1:] = (hi[1:] != hi[:-1]) | (lo[1:] != lo[:-1])
        hi, lo = hi[new], lo[new]
        if len(hi) < 2:
            return DensityMeasure([], [], [], window)
        half = 0.5 * _dd.diff(hi[1:], lo[1:], hi[:-1], lo[:-1])
        mh, ml = _dd.add(hi[:-1], lo[:-1], half)
        h = m1.height_at(mh, ml) + m2.height_at(mh, ml)
        keep = h > 0
        return DensityMeasure(hi[:-1][keep], hi[1:][keep], h[keep], window,
                              lo[:-1][keep], lo[1:][keep])
    raise TypeError("only atomic+atomic or density+density sums are supported")


# --- functionals and scans --------------------------------------------------

def nested_radii(R: float, count: int = 64) -> np.ndarray:
    return R * np.arange(1, count + 1) / count


def _poisson_upto(m: Measure, r: np.ndarray) -> np.ndarray:
    """Integral of dm/(1+x^2) over [-r, r] for each radius."""
    if isinstance(m, AtomicMeasure):
        x = m.positions + m.offsets
        w = m.masses / (1.0 + x * x)
        # |x| sorted with cumulative weights
        order = np.argsort(np.abs(x), kind="stable")
        ax = np.abs(x)[order]
        cw = np.concatenate([[0.0], np.cumsum(w[order])])
        return cw[np.searchsorted(ax, r, "right")]
    out = np.zeros(len(r))
    every = np.arange(len(m.lefts))
    for k, rk in enumerate(r):
        # widths come from the offset-aware overlap: pieces narrower than an ulp survive
        w = m._overlap(every, -rk, 0.0, rk, 0.0)
        ok = w > 0
        w = w[ok]
        a = np.maximum(m.lefts[ok], -rk)
        b = np.maximum(np.minimum(m.rights[ok], rk), a)
        ab = a * b
        # atan(b) - atan(a) = atan((b - a)/(1 + ab)) keeps narrow pieces exact
        out[k] = math.fsum(m.heights[ok] * np.where(ab > -1, np.arctan(w / (1.0 + ab)),
                                                    np.arctan(b) - np.arctan(a)))
    return out


def poisson_functional(m: Measure, windows: int = 64,
                       tol: Tolerances = DEFAULT_TOLERANCES) -> SeriesDiagnostics:
    """Truncated ``int dm/(1+x^2)`` with its profile over nested windows.

    Terms are the increments between consecutive symmetric sub-windows
    ``[-r_k, r_k]``; the last partial sum is the value on the full window.
    """
    R = max(abs(m.window.left), abs(m.window.right))
    r = nested_radii(R, windows)
    vals = _poisson_upto(m, r)
    terms = np.diff(np.concatenate([[0.0], vals]))
    return diagnose(terms, r, tol)


@dataclass(frozen=True)
class FrostmanScan:
    alpha_hat: float | None
    c_hat: float | None
    centers: np.ndarray
    scales: np.ndarray
    masses: np.ndarray          # shape (len(scales), len(centers))
    worst: tuple | None         # (x, eps, mass) maximising mass/eps^alpha
    status: str = "sampled"
    flags: tuple[str, ...] = ()

    def table(self):
        """Rows (x, eps, mass), scale-major."""
        rows = []
        for s, row in zip(self.scales, self.masses):
            rows.extend((float(x), float(s), float(v)) for x, v in zip(self.centers, row))
        return rows


ALPHA_GRID = np.round(np.arange(1, 101) / 100.0, 2)


def default_centers(m: Measure, count: int = 201) -> np.ndarray:
    """Uniform grid over the support hull plus every atom / piece midpoint."""
    hull = support_hull(m)
    if hull is None:
        return np.zeros(0)
    pts = [np.linspace(hull.left, hull.right, count)]
    if isinstance(m, AtomicMeasure):
        pts.append(m.positions)
    else:
        pts.append(0.5 * (m.lefts + m.rights)[m.heights > 0])
    return np.unique(np.concatenate(pts))


def _ball_masses(m: Measure, centers: np.ndarray, radius: float) -> np.ndarray:
    return m.masses_of(centers - radius, centers + radius, False, False)


def frostman_scan(m: Measure, scales, centers=None, growth_tol: float = 0.1) -> FrostmanScan:
    """Sampled Frostman exponent: ``m((x-e, x+e)) < C e^alpha``.

    For each grid exponent the constant needed at each scale is
    ``C(e) = max_x m(B(x, e)) / e^alpha``.  An exponent is accepted when the
    constant required over the finer half of the scales exceeds the coarser
    half by at most ``1 + growth_tol``; ``alpha_hat`` is the largest
    accepted exponent.  The result is a sampled statement, never a proof.
    """
    scales = np.sort(np.asarray(scales, dtype=float))[::-1]
    if len(scales) == 0 or np.any(~(scales > 0)):
        raise ValueError("scales must be a nonempty list of positive reals")
    if centers is None:
        centers = default_centers(m)
    elif np.isscalar(centers):
        centers = default_centers(m, int(centers))
    centers = np.asarray(centers, dtype=float)
    ms = np.array([_ball_masses(m, centers, s) for s in scales]) if len(centers) else np.zeros((len(scales), 0))
    flags = []
    if len(centers) == 0 or not np.any(ms > 0):
        return FrostmanScan(None, None, centers, scales, ms, None, flags=("empty support: exponent undefined",))
    if len(scales) < 2:
        return FrostmanScan(None, None, centers, scales, ms, None, flags=("need at least two scales",))
    reach = float(np.max(np.abs(centers))) if len(centers) else 0.0
    if scales[-1] < 64 * np.spacing(max(reach, 1.0)):
        flags.append("smallest scale near float resolution at the sampled centres")
    peak = ms.max(axis=1)
    half = len(scales) // 2
    alpha_hat = 0.0
    for a in ALPHA_GRID[::-1]:
        need = peak / scales ** a
        if need[half:].max() <= (1.0 + growth_tol) * need[:half].max():
            alpha_hat = float(a)
            break
    else:
        flags.append("no grid exponent fits; reporting 0")
    ratio = ms / scales[:, None] ** alpha_hat
    k, j = np.unravel_index(np.argmax(ratio), ratio.shape)
    c_hat = float(ratio[k, j])
    worst = (float(centers[j]), float(scales[k]), float(ms[k, j]))
    return FrostmanScan(alpha_hat, c_hat, centers, scales, ms, worst, flags=tuple(flags))


@dataclass(frozen=True)
class DoublingScan:
    c_hat: float | None
    centers: np.ndarray
    radii: np.ndarray
    inner: np.ndarray
    outer: np.ndarray
    flags: tuple[str, ...] = ()

    def table(self):
        rows = []
        for r, a, b in zip(self.radii, self.inner, self.outer):
            for x, i, o in zip(self.centers, a, b):
                rows.append((float(x), float(r), float(i), float(o)))
        return rows


def doubling_scan(m: Measure, centers=None, radii=(1.0,)) -> DoublingScan:
    """Largest observed ``m((x-2r, x+2r)) / m((x-r, x+r))``."""
    radii = np.asarray(radii, dtype=float)
    if np.any(~(radii > 0)):
        raise ValueError("radii must be positive")
    if centers is None:
        centers = default_centers(m)
    elif np.isscalar(centers):
        centers = default_centers(m, int(centers))
    centers = np.asarray(centers, dtype=float)
    inner = np.array([_ball_masses(m, centers, r) for r in radii])
    outer = np.array([_ball_masses(m, centers, 2 * r) for r in radii])
    ok = inner > 0
    if not np.any(ok):
        return DoublingScan(None, centers, radii, inner, outer, ("all inner masses zero: constant undefined",))
    return DoublingScan(float(np.max(outer[ok] / inner[ok])), centers, radii, inner, outer)


def _activation(m: DensityMeasure):
    """Thresholds t_p with piece p meeting [-x, x] in positive length iff x > t_p."""
    t = np.maximum(m.lefts, -m.rights)
    order = np.argsort(t, kind="stable")
    t = np.maximum(t[order], 0.0)
    run = np.maximum.accumulate(m.heights[order]) if len(t) else np.zeros(0)
    return t, run


def ess_sup_profile(m: DensityMeasure, xs) -> list[tuple[float, float]]:
    """``M_f(x) = ess sup of the density over [-x, x]`` at each ``x``."""
    if not isinstance(m, DensityMeasure):
        raise TypeError("ess_sup_profile needs a density measure")
    xs = np.asarray(xs, dtype=float)
    t, run = _activation(m)
    k = np.searchsorted(t, xs, "left")  # pieces with t < x
    vals = np.where(k > 0, run[np.maximum(k - 1, 0)] if len(run) else 0.0, 0.0)
    return list(zip(xs.tolist(), vals.tolist()))


# --- generators ---------------------------------------------------------------

def _cell_average_poisson(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (np.arctan(b) - np.arctan(a)) / (b - a)


def _poisson_cells(lo: float, hi: float, cell: float):
    n = max(1, int(math.ceil((hi - lo) / cell - 1e-9)))
    edges = np.linspace(lo, hi, n + 1)
    return edges[:-1], edges[1:], _cell_average_poisson(edges[:-1], edges[1:])


def _clip_pieces(l, r, h, R, r_off=None):
    """Clip ``[l, r + r_off)`` to ``[-R, R]``; returns constructor keyword arguments."""
    l = np.maximum(np.asarray(l, dtype=float), -R)
    r = np.asarray(r, dtype=float)
    ro = np.zeros_like(r) if r_off is None else np.asarray(r_off, dtype=float)
    over = _dd.less(R, 0.0, r, ro)
    r, ro = np.where(over, R, r), np.where(over, 0.0, ro)
    keep = _dd.less(l, 0.0, r, ro)
    return dict(lefts=l[keep], rights=r[keep], heights=np.asarray(h, dtype=float)[keep],
                right_offs=ro[keep])


SHARPNESS_PROFILES: dict[str, Callable[[float], float]] = {
    "exp": math.exp,
    "exp_half": lambda x: math.exp(0.5 * x),
}


def _cantor_lefts(depth: int) -> np.ndarray:
    lefts = np.zeros(1)
    for k in range(1, depth + 1):
        step = 2.0 * 3.0 ** -k
        lefts = np.concatenate([lefts, lefts + step])
    return np.sort(lefts)


def generate(name: str, R: float = 10.0, **params) -> Measure:
    """Named example measures truncated to the window ``[-R, R]``.

    ``poisson``/``poisson_halfline`` use cell-averaged heights so each cell
    carries its exact Poisson mass; ``sharpness`` takes ``M`` as a callable
    or a key of :data:`SHARPNESS_PROFILES`.
    """
    if not (isinstance(R, (int, float)) and R > 0 and math.isfinite(R)):
        raise ValueError("window radius R must be a positive finite number")
    R = float(R)
    window = Interval(-R, R)
    N = int(math.floor(R))
    ints = np.arange(-N, N + 1, dtype=float)

    if name in ("poisson", "poisson_halfline"):
        cell = float(params.get("cell", 0.125))
        if not cell > 0:
            raise ValueError("cell must be positive")
        l, r, h = _poisson_cells(-R if name == "poisson" else 0.0, R, cell)
        return DensityMeasure(l, r, h, window)
    if name == "lebesgue":
        return DensityMeasure([-R], [R], [1.0], window)
    if name == "lebesgue_halfline":
        return DensityMeasure([0.0], [R], [1.0], window)
    if name == "spike":
        if R > 700:
            raise ValueError("spike heights exp(|n|) overflow beyond R = 700")
        a = np.abs(ints)
        rh, rl = _dd.add(ints, np.zeros_like(ints), np.exp(-a))
        return DensityMeasure(window=window, **_clip_pieces(ints, rh, np.exp(a) / (1 + ints ** 2), R, rl))
    if name == "comb":
        return AtomicMeasure(ints, np.ones_like(ints), window)
    if name in ("shifted_comb", "comb_plus_shifted") and R > 700:
        raise ValueError("shifts exp(-|n|) underflow beyond R = 700")
    if name == "shifted_comb":
        hi, lo = _dd.add(ints, np.zeros_like(ints), np.exp(-np.abs(ints)))
        keep = (hi < R) | ((hi == R) & (lo <= 0))
        return AtomicMeasure(hi[keep], np.ones(int(keep.sum())), window, lo[keep])
    if name == "comb_plus_shifted":
        return add(generate("comb", R), generate("shifted_comb", R))
    if name in ("dyadic_odd", "dyadic_even"):
        kmin = int(params.get("kmin", -8))
        parity = 1 if name == "dyadic_odd" else 0
        ks = [k for k in range(kmin, int(math.ceil(math.log2(R))) + 1) if k % 2 == parity]
        pos = [(2.0 ** k, 2.0 ** (k + 1)) for k in ks]
        segs = sorted([(-b, -a) for a, b in pos] + pos)
        return DensityMeasure(window=window, **_clip_pieces([s[0] for s in segs], [s[1] for s in segs],
                                                            np.ones(len(segs)), R))
    if name == "benedicks_blocks":
        q = float(params.get("q", 2.0))
        cell = float(params.get("cell", 0.125))
        if not q >= 1:
            raise ValueError("q must be >= 1")
        starts = {0}
        j = 1
        while j ** q <= R:
            starts.add(int(math.floor(j ** q)))
            starts.add(-int(math.floor(j ** q)) - 1)
            j += 1
        L, Rr, H = [], [], []
        for s in sorted(starts):
            a, b = max(float(s), -R), min(float(s + 1), R)
            if b > a:
                l, r, h = _poisson_cells(a, b, cell)
                L.append(l), Rr.append(r), H.append(h)
        return DensityMeasure(np.concatenate(L), np.concatenate(Rr), np.concatenate(H), window)
    if name == "cantor_periodic":
        depth = int(params.get("depth", 12))
        if not 1 <= depth <= 20:
            raise ValueError("depth must be between 1 and 20")
        base = _cantor_lefts(depth)
        width = 3.0 ** -depth
        height = (1.5) ** depth
        periods = np.arange(-N, N, dtype=float)
        # right ends from the local offsets, so the last piece of a period ends exactly at the next
        tops = np.minimum(base + width, 1.0)
        l = (periods[:, None] + base[None, :]).ravel()
        r = (periods[:, None] + tops[None, :]).ravel()
        return DensityMeasure(window=window, **_clip_pieces(l, r, np.full(len(l), height), R))
    if name == "sharpness":
        M = params.get("M", "exp")
        if isinstance(M, str):
            if M not in SHARPNESS_PROFILES:
                raise ValueError(f"unknown growth profile {M!r}")
            M = SHARPNESS_PROFILES[M]
        vals = np.array([M(abs(n)) for n in ints])
        if np.any(~(vals >= 1)) or not np.all(np.isfinite(vals)):
            raise ValueError("profile M must be finite and >= 1 on the window")
        rh, rl = _dd.add(ints, np.zeros_like(ints), 1.0 / vals)
        return DensityMeasure(window=window, **_clip_pieces(ints, rh, vals, R, rl))
    raise ValueError(f"unknown example measure {name!r}")


EXAMPLES = ("poisson", "poisson_halfline", "lebesgue", "lebesgue_halfline", "spike", "comb",
            "shifted_comb", "comb_plus_shifted", "dyadic_odd", "dyadic_even",
            "benedicks_blocks", "cantor_periodic", "sharpness")
