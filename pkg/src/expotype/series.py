"""Truncated series with a convergence-trend verdict.

Every infinite sum the toolkit cares about (shortness, energy, star masses,
weights, nested-window integrals) is evaluated on a finite window.  A
:class:`SeriesDiagnostics` keeps the terms, their partial sums and a tail
trend so that downstream code can say "convergent", "divergent" or
"inconclusive" instead of pretending to know the limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

CONVERGENT = "convergent"
DIVERGENT = "divergent"
INCONCLUSIVE = "inconclusive"

# fewer tail points than this and the trend fit is not attempted
MIN_TAIL_POINTS = 4


@dataclass(frozen=True)
class Tolerances:
    """Declared heuristics for truncated limits."""

    conv: float = 0.05
    div: float = 0.5
    density: float = 0.05

    def __post_init__(self):
        for name in ("conv", "div", "density"):
            if not getattr(self, name) > 0:
                raise ValueError(f"tolerance {name} must be positive")
        if self.conv >= self.div:
            raise ValueError("tolerance conv must be smaller than div")


DEFAULT_TOLERANCES = Tolerances()


@dataclass(frozen=True)
class SeriesDiagnostics:
    index: np.ndarray
    terms: np.ndarray
    partial_sums: np.ndarray
    tail_slope: float
    verdict: str
    flags: tuple[str, ...] = field(default=())

    @property
    def total(self) -> float:
        return float(self.partial_sums[-1]) if len(self.partial_sums) else 0.0

    def __len__(self):
        return len(self.terms)

    def rows(self):
        """(n, term, partial_sum) triples in summation order."""
        return list(zip(self.index.tolist(), self.terms.tolist(), self.partial_sums.tolist()))


def tail_slope(partial_sums: np.ndarray) -> float:
    """Slope of the partial sums against log(k) over the last half.

    The fit carries a ``1/k`` nuisance column: a convergent tail with
    ``O(1/k^2)`` terms approaches its limit like ``S - A/k``, which a plain
    log-linear fit over a short window reads as a spurious positive slope.
    When every tail term has one sign the slope is clamped to that sign:
    monotone partial sums cannot trend the other way, so an opposite slope
    is the nuisance column overcorrecting.  Returns nan when the tail is
    too short to fit.
    """
    s = np.asarray(partial_sums, dtype=float)
    n = len(s)
    start = n // 2
    k = np.arange(start + 1, n + 1, dtype=float)
    if len(k) < MIN_TAIL_POINTS:
        return math.nan
    y = s[start:]
    design = np.column_stack([np.ones_like(k), np.log(k), 1.0 / k])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    slope = float(coef[1])
    steps = np.diff(y)
    if np.all(steps >= 0):
        slope = max(slope, 0.0)
    elif np.all(steps <= 0):
        slope = min(slope, 0.0)
    return slope


def classify(slope: float, tol: Tolerances = DEFAULT_TOLERANCES) -> str:
    if math.isnan(slope):
        return INCONCLUSIVE
    if abs(slope) < tol.conv:
        return CONVERGENT
    if abs(slope) > tol.div:
        return DIVERGENT
    return INCONCLUSIVE


def diagnose(terms, index=None, tol: Tolerances = DEFAULT_TOLERANCES,
             flags=(), fit_mask=None) -> SeriesDiagnostics:
    """Build diagnostics for ``terms`` given in summation order.

    ``index`` labels each term (for two-sided series the signed ``n``).
    ``fit_mask`` selects the terms whose partial sums enter the trend fit
    (all by default); reported terms and partial sums are never trimmed.
    Non-finite terms short-circuit to a divergent verdict with a flag.
    """
    terms = np.asarray(terms, dtype=float)
    if index is None:
        index = np.arange(len(terms))
    index = np.asarray(index)
    if len(index) != len(terms):
        raise ValueError("index and terms differ in length")
    flags = list(flags)
    if not np.all(np.isfinite(terms)):
        bad = index[~np.isfinite(terms)]
        flags.append(f"non-finite terms at n={bad[:5].tolist()}")
        partial = np.cumsum(terms)
        slope = -math.inf if np.any(terms == -np.inf) else math.inf
        return SeriesDiagnostics(index, terms, partial, slope, DIVERGENT, tuple(flags))
    partial = np.cumsum(terms)
    slope = tail_slope(partial if fit_mask is None else np.cumsum(terms[np.asarray(fit_mask, bool)]))
    return SeriesDiagnostics(index, terms, partial, slope, classify(slope, tol), tuple(flags))


def outward_order(n: np.ndarray) -> np.ndarray:
    """Permutation visiting two-sided indices as 0, 1, -1, 2, -2, ..."""
    n = np.asarray(n)
    return np.lexsort((-n, np.abs(n)))


def two_sided(terms, n, tol: Tolerances = DEFAULT_TOLERANCES, flags=(),
              trim_edges: bool = False) -> SeriesDiagnostics:
    """Diagnostics for a series indexed by signed ``n``, summed outward.

    With ``trim_edges`` the outermost term on each side is left out of the
    trend fit: on a truncated window those are the intervals cut by the
    window edge, and one atypical term there can tilt a short tail.
    """
    terms = np.asarray(terms, dtype=float)
    n = np.asarray(n)
    order = outward_order(n)
    mask = None
    if trim_edges and len(n) >= 2 * MIN_TAIL_POINTS:
        mask = np.ones(len(n), dtype=bool)
        mask[(n[order] == n.max()) | (n[order] == n.min())] = False
    return diagnose(terms[order], n[order], tol, flags, mask)
