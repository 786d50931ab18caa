"""Uniform sequences: pair energy, density and energy conditions, stars.

A sequence is *d-uniform* on a short partition when the interval counts
grow like ``d|I_n|`` and the energy series

    sum_n (Delta_n^2 log|I_n| - E_n) / (1 + dist^2(0, I_n))

converges, ``E_n`` being the pair energy of the points in ``I_n``.  On a
finite window both statements become trend verdicts; see
:mod:`expotype.series`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _dd
from .measure import Interval
from .partition import Partition, adapted_partition, shortness_series
from .series import (CONVERGENT, DEFAULT_TOLERANCES, DIVERGENT, SeriesDiagnostics,
                     Tolerances, two_sided)

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"


class HypothesisError(ValueError):
    """A merge or removal hypothesis failed its numerical check."""

    def __init__(self, hypothesis: str, detail: str = ""):
        self.hypothesis = hypothesis
        super().__init__(f"{hypothesis}: {detail}" if detail else hypothesis)


@dataclass(frozen=True, eq=False)
class SequenceSet:
    """Finite set of reals, stored sorted; ``offsets`` hold sub-ulp parts."""

    points: np.ndarray
    offsets: np.ndarray = None

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.points, dtype=float))
        off = np.zeros_like(x) if self.offsets is None else np.atleast_1d(np.asarray(self.offsets, dtype=float))
        if x.ndim != 1 or x.shape != off.shape:
            raise ValueError("points and offsets must be equal-length vectors")
        if not np.all(np.isfinite(x)):
            raise ValueError("points must be finite")
        # renormalise so that (hi, lo) order is the real order
        x, off = _dd.add(x, off, 0.0)
        order = _dd.lexsort(x, off)
        x, off = x[order], off[order]
        if len(x) > 1:
            dup = (x[1:] == x[:-1]) & (off[1:] == off[:-1])
            if np.any(dup):
                raise ValueError(f"duplicate points, e.g. {x[1:][dup][0]!r}")
        x.setflags(write=False)
        off.setflags(write=False)
        object.__setattr__(self, "points", x)
        object.__setattr__(self, "offsets", off)

    def __len__(self):
        return len(self.points)

    def __eq__(self, other):
        return (isinstance(other, SequenceSet) and np.array_equal(self.points, other.points)
                and np.array_equal(self.offsets, other.offsets))

    @classmethod
    def of_measure(cls, m) -> "SequenceSet":
        """Atom positions of an atomic measure."""
        return cls(m.positions, m.offsets)

    def subset(self, keep) -> "SequenceSet":
        return SequenceSet(self.points[keep], self.offsets[keep])

    def union(self, other: "SequenceSet") -> "SequenceSet":
        return SequenceSet(np.concatenate([self.points, other.points]),
                           np.concatenate([self.offsets, other.offsets]))

    def members(self, other: "SequenceSet") -> np.ndarray:
        """Boolean mask of the points of ``other`` that belong to ``self``."""
        k = _dd.searchsorted(self.points, self.offsets, other.points, other.offsets, "left")
        kk = np.minimum(k, max(len(self) - 1, 0))
        if len(self) == 0:
            return np.zeros(len(other), dtype=bool)
        return (k < len(self)) & (self.points[kk] == other.points) & (self.offsets[kk] == other.offsets)

    def gaps(self) -> np.ndarray:
        return _dd.diff(self.points[1:], self.offsets[1:], self.points[:-1], self.offsets[:-1])

    def origin_index(self) -> np.ndarray:
        """Signed labels with ``0`` at the point nearest the origin (ties go left)."""
        if len(self) == 0:
            return np.zeros(0, dtype=int)
        k0 = int(np.argmin(np.abs(self.points + self.offsets)))
        return np.arange(len(self)) - k0


def as_sequence(points) -> SequenceSet:
    return points if isinstance(points, SequenceSet) else SequenceSet(points)


# --- pair energy ------------------------------------------------------------

def _pair_logs(x: np.ndarray, off: np.ndarray) -> list[float]:
    i, j = np.triu_indices(len(x), 1)
    # fl(d + err) == d, so plain subtraction agrees bitwise when offsets vanish
    d = x[j] - x[i] if not off.any() else _dd.diff(x[j], off[j], x[i], off[i])
    return list(map(math.log, d.tolist()))


def pair_energy(points) -> float:
    """Sum of ``log|x_k - x_l|`` over ordered pairs ``k != l``.

    Summation is correctly rounded (``math.fsum``), so the result does not
    depend on the enumeration order and equals twice the unordered sum.
    """
    s = as_sequence(points)
    if len(s) < 2:
        return 0.0
    return 2.0 * math.fsum(_pair_logs(s.points, s.offsets))


def interval_counts(points, p: Partition) -> np.ndarray:
    """Number of points in each ``(a_n, a_{n+1}]``."""
    s = as_sequence(points)
    if len(s) == 0:
        return np.zeros(len(p), dtype=int)
    pos = p.locate(s.points, s.offsets)
    return np.bincount(pos, minlength=len(p))


# --- stars ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StarSystem:
    """Closed intervals centred at sequence points, a third of the local gap long."""

    centers: np.ndarray
    center_offs: np.ndarray
    radii: np.ndarray
    index: np.ndarray  # signed label of each centre within the source sequence

    def __len__(self):
        return len(self.centers)

    @property
    def lengths(self) -> np.ndarray:
        return 2.0 * self.radii

    def bounds(self):
        """``(left, left_off, right, right_off)`` arrays."""
        lh, ll = _dd.add(self.centers, self.center_offs, -self.radii)
        rh, rl = _dd.add(self.centers, self.center_offs, self.radii)
        return lh, ll, rh, rl

    def intervals(self) -> list[Interval]:
        lh, ll, rh, rl = self.bounds()
        return [Interval(float(a), float(c), True, True, float(b), float(d))
                for a, b, c, d in zip(lh, ll, rh, rl)]

    def as_pairs(self):
        """``(center, Interval)`` pairs."""
        return list(zip((self.centers + self.center_offs).tolist(), self.intervals()))


def star_intervals(points, boundary: str = "one_sided") -> StarSystem:
    s = as_sequence(points)
    if len(s) < 2:
        raise ValueError("stars need at least two points")
    if boundary not in ("one_sided", "drop_edges"):
        raise ValueError(f"unknown boundary rule {boundary!r}")
    g = s.gaps()
    nearest = np.empty(len(s))
    nearest[0], nearest[-1] = g[0], g[-1]
    nearest[1:-1] = np.minimum(g[:-1], g[1:])
    radii = nearest / 6.0
    idx = s.origin_index()
    keep = slice(None) if boundary == "one_sided" else slice(1, -1)
    return StarSystem(s.points[keep], s.offsets[keep], radii[keep], idx[keep])


# --- certification ----------------------------------------------------------

@dataclass(frozen=True)
class DensityReport:
    deviations: np.ndarray           # Delta_n/|I_n| - d per interval
    side_trend: tuple[float, float]  # fitted deviation at the outermost negative / positive label
    tolerance: float

    @property
    def ok(self) -> bool:
        return all(math.isfinite(t) and abs(t) < self.tolerance for t in self.side_trend)


@dataclass(frozen=True, eq=False)
class UniformityCertificate:
    lam: SequenceSet
    partition: Partition
    d: float
    counts: np.ndarray
    interval_energies: np.ndarray
    density_report: DensityReport
    energy_diag: SeriesDiagnostics
    shortness_diag: SeriesDiagnostics
    verdict: str
    window: Interval
    tolerances: Tolerances = DEFAULT_TOLERANCES
    energy_terms_nonnegative: bool = True
    notes: tuple[str, ...] = field(default=())

    @property
    def passed(self) -> bool:
        return self.verdict == PASS


def _side_trend(n: np.ndarray, dev: np.ndarray) -> float:
    """Linear trend of ``dev`` against ``|n|`` over the outer third, read at the end."""
    if len(n) == 0:
        return math.nan
    a = np.abs(n).astype(float)
    order = np.argsort(a, kind="stable")
    a, dev = a[order], dev[order]
    start = len(a) - max(1, math.ceil(len(a) / 3))
    a, dev = a[start:], dev[start:]
    if len(a) < 3:
        return float(np.mean(dev))
    slope, icpt = np.polyfit(a, dev, 1)
    return float(slope * a[-1] + icpt)


def density_report(counts, p: Partition, d: float, tol: Tolerances) -> DensityReport:
    dev = np.asarray(counts, dtype=float) / p.lengths - d
    n = p.index
    neg, pos = n < 0, n >= 0
    return DensityReport(dev, (_side_trend(n[neg], dev[neg]), _side_trend(n[pos], dev[pos])),
                         tol.density)


def certify_uniform(points, p: Partition, d: float,
                    tol: Tolerances = DEFAULT_TOLERANCES) -> UniformityCertificate:
    """Check the density and energy conditions of ``points`` on ``p`` at level ``d``."""
    if not d > 0:
        raise ValueError("d must be positive")
    lam = as_sequence(points)
    counts = interval_counts(lam, p)
    ends = np.concatenate([[0], np.cumsum(counts)])
    energies = np.array([pair_energy(SequenceSet(lam.points[a:b], lam.offsets[a:b]))
                         if b - a > 1 else 0.0 for a, b in zip(ends[:-1], ends[1:])])
    lengths = p.lengths
    terms = (counts.astype(float) ** 2 * np.log(lengths) - energies) / (1.0 + p.dist0 ** 2)
    nonneg = bool(np.all(terms[lengths >= 1] >= 0))
    energy = two_sided(terms, p.index, tol, trim_edges=True)
    short = shortness_series(p, tol)
    dens = density_report(counts, p, d, tol)

    notes = []
    if not nonneg:
        notes.append("negative energy term on an interval of length >= 1")
    if len(lam) == 0:
        notes.append("empty sequence")
    if dens.ok and short.verdict == CONVERGENT and energy.verdict == CONVERGENT:
        verdict = PASS
    elif not dens.ok or short.verdict == DIVERGENT or energy.verdict == DIVERGENT:
        verdict = FAIL
    else:
        verdict = INCONCLUSIVE
    return UniformityCertificate(lam, p, float(d), counts, energies, dens, energy, short,
                                 verdict, p.span, tol, nonneg, tuple(notes))


def d1_density(points, p_exponent: float = 1.5,
               tol: Tolerances = DEFAULT_TOLERANCES) -> float | None:
    """Estimated density on a default adapted partition, or ``None`` if the sides disagree.

    Each side's estimate is total count over total length on its outer
    third of intervals.
    """
    lam = as_sequence(points)
    if len(lam) < 2:
        return None
    p = adapted_partition(lam.points, p_exponent, offsets=lam.offsets)
    counts = interval_counts(lam, p)
    est = []
    for side in (p.index < 0, p.index >= 0):
        k = np.nonzero(side)[0]
        if len(k) == 0:
            return None
        k = k[np.argsort(np.abs(p.index[k]), kind="stable")]
        k = k[len(k) - max(1, math.ceil(len(k) / 3)):]
        est.append(counts[k].sum() / p.lengths[k].sum())
    mean = 0.5 * (est[0] + est[1])
    if abs(est[0] - est[1]) > tol.density * max(1.0, mean):
        return None
    return float(mean)


# --- merge and removal ------------------------------------------------------

def _check_separators(c: SequenceSet, separators: list[Interval], other: SequenceSet,
                      tol: Tolerances) -> SeriesDiagnostics:
    if len(separators) != len(c):
        raise HypothesisError("separators not centered", "need one separator per point")
    if len(c) < 2:
        raise HypothesisError("separators not centered", "need at least two centres")
    seps = sorted(separators, key=lambda i: (i.left, i.left_off))
    lh = np.array([i.left for i in seps]); ll = np.array([i.left_off for i in seps])
    rh = np.array([i.right for i in seps]); rl = np.array([i.right_off for i in seps])
    if np.any(~_dd.less(rh[:-1], rl[:-1], lh[1:], ll[1:])):
        raise HypothesisError("separators not disjoint")
    below = _dd.diff(c.points, c.offsets, lh, ll)
    above = _dd.diff(rh, rl, c.points, c.offsets)
    length = below + above
    if np.any(below < 0) or np.any(above < 0) or \
            np.any(np.abs(below - above) > 1e-9 * np.maximum(length, np.abs(c.points) * 1e-7)):
        raise HypothesisError("separators not centered")
    if not np.all(length > 0):
        raise HypothesisError("separator log-series divergent", "zero-length separator")
    n = c.origin_index()
    logs = two_sided(np.log(length) / (1.0 + n.astype(float) ** 2), n, tol)
    if logs.verdict == DIVERGENT:
        raise HypothesisError("separator log-series divergent")
    if logs.verdict != CONVERGENT:
        raise HypothesisError("separator log-series inconclusive")
    g = c.gaps()
    nearest = np.concatenate([[g[0]], np.minimum(g[:-1], g[1:]), [g[-1]]]) if len(g) > 1 else np.repeat(g, 2)
    if np.any(length > nearest / 3.0 * (1 + 1e-12)):
        raise HypothesisError("separator too long", "length must be at most a third of the gap")
    if len(other):
        k = _dd.searchsorted(rh, rl, other.points, other.offsets, "left")
        k = np.minimum(k, len(seps) - 1)
        inside = ~_dd.less(other.points, other.offsets, lh[k], ll[k]) & \
            ~_dd.less(rh[k], rl[k], other.points, other.offsets)
        if np.any(inside):
            x = float(other.points[inside][0])
            raise HypothesisError("separation violated", f"point {x!r} lies in a separator")
    return logs


def merge_certified(c_cert: UniformityCertificate, d_cert: UniformityCertificate,
                    separators, p_exponent: float = 1.5) -> UniformityCertificate:
    """Verify the merge hypotheses, then certify the union at ``c + d``.

    Raises :class:`HypothesisError` naming the first failed hypothesis.
    The returned verdict may still be ``fail``: only a uniform
    subsequence of the union is guaranteed, and none is searched for.
    """
    tol = c_cert.tolerances
    _check_separators(c_cert.lam, list(separators), d_cert.lam, tol)
    union = c_cert.lam.union(d_cert.lam)
    p = adapted_partition(union.points, p_exponent, offsets=union.offsets)
    return certify_uniform(union, p, c_cert.d + d_cert.d, tol)


def remove_subsequence(d_cert: UniformityCertificate, gamma, c: float,
                       p_exponent: float = 1.5) -> UniformityCertificate:
    """Certify ``lambda \\ gamma`` at ``d - c`` on a fresh adapted partition.

    A remainder with fewer than two points is certified on the original
    partition, since no adapted partition can be built from it.
    """
    gamma = as_sequence(gamma)
    if not c < d_cert.d:
        raise ValueError("c must be smaller than the certificate's d")
    lam = d_cert.lam
    inside = lam.members(gamma)
    if not np.all(inside):
        raise ValueError("gamma is not a subset of the certified sequence")
    drop = np.zeros(len(lam), dtype=bool)
    if len(gamma):
        drop[_dd.searchsorted(lam.points, lam.offsets, gamma.points, gamma.offsets, "left")] = True
    rest = lam.subset(~drop)
    if len(rest) >= 2:
        p = adapted_partition(rest.points, p_exponent, offsets=rest.offsets)
    else:
        p = d_cert.partition
    return certify_uniform(rest, p, d_cert.d - c, d_cert.tolerances)


__all__ = [
    "PASS", "FAIL", "INCONCLUSIVE", "HypothesisError", "SequenceSet", "as_sequence",
    "pair_energy", "interval_counts", "StarSystem", "star_intervals", "DensityReport",
    "UniformityCertificate", "density_report", "certify_uniform", "d1_density",
    "merge_certified", "remove_subsequence",
]
