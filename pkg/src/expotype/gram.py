"""Finite-dimensional completeness probe for exponential families.

A measure is replaced by finitely many weighted nodes, and the family
``{exp(isx) : s in [0, a]}`` by an even grid of frequencies.  The smallest
singular value of the resulting matrix, tracked as the node count doubles,
separates bandwidths where the family degenerates (``sigma_min`` decays)
from those where it stays well conditioned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measure import AtomicMeasure, Measure

CAVEAT = ("heuristic: any finite node set is spanned by enough exponentials, so completeness "
          "at desk scale is strictly a conditioning statement; no theorem links the decay of "
          "sigma_min to the type")


@dataclass(frozen=True, eq=False)
class DiscretizedMeasure:
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.nodes, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if x.shape != w.shape or x.ndim != 1:
            raise ValueError("nodes and weights must be equal-length vectors")
        if np.any(~(w > 0)):
            raise ValueError("node weights must be positive")
        order = np.argsort(x, kind="stable")
        object.__setattr__(self, "nodes", x[order])
        object.__setattr__(self, "weights", w[order])

    def __len__(self):
        return len(self.nodes)

    def total(self) -> float:
        return math.fsum(self.weights)

    def nearest(self, count: int, center: float | None = None) -> "DiscretizedMeasure":
        """The ``count`` nodes closest to ``center`` (the median node by default)."""
        if center is None:
            center = float(np.median(self.nodes)) if len(self) else 0.0
        k = np.argsort(np.abs(self.nodes - center), kind="stable")[:count]
        k.sort()
        return DiscretizedMeasure(self.nodes[k], self.weights[k])

    def shifted(self, t: float) -> "DiscretizedMeasure":
        return DiscretizedMeasure(self.nodes + t, self.weights)


def discretize(m: Measure, nodes_per_piece: int = 8) -> DiscretizedMeasure:
    """Atoms verbatim; each density piece becomes a midpoint rule."""
    if nodes_per_piece < 1:
        raise ValueError("nodes_per_piece must be at least 1")
    if isinstance(m, AtomicMeasure):
        return DiscretizedMeasure(m.positions + m.offsets, m.masses)
    keep = m.heights > 0
    k = nodes_per_piece
    left = m.lefts[keep] + m.left_offs[keep]
    w = m.widths[keep]
    frac = (np.arange(k) + 0.5) / k
    nodes = (left[:, None] + w[:, None] * frac[None, :]).ravel()
    weights = np.repeat(m.heights[keep] * w / k, k)
    return DiscretizedMeasure(nodes, weights)


def exponential_matrix(dm: DiscretizedMeasure, freqs) -> np.ndarray:
    """Rows are nodes, columns frequencies: ``sqrt(w_n) exp(i s_j x_n)``."""
    s = np.atleast_1d(np.asarray(freqs, dtype=float))
    if len(np.unique(s)) != len(s):
        raise ValueError("frequencies must be distinct")
    return np.sqrt(dm.weights)[:, None] * np.exp(1j * np.outer(dm.nodes, s))


def sigma_min(a: np.ndarray) -> float:
    """Smallest of the ``rows`` singular values; 0 when columns are too few."""
    n, m = a.shape
    if m < n:
        return 0.0
    return float(np.linalg.svd(a, compute_uv=False)[n - 1])


def freq_count(a: float, n: int, kappa: float) -> int:
    return max(2, math.ceil(kappa * a * n / (2.0 * math.pi)))


def frequency_grid(a: float, n: int, kappa: float) -> np.ndarray:
    return np.linspace(0.0, a, freq_count(a, n, kappa))


def _scan_sigma(dm: DiscretizedMeasure, a: float, kappa: float) -> float:
    s = frequency_grid(a, len(dm), kappa)
    # 1/sqrt(M) makes the Gram matrix an average over [0, a], comparable across M
    return sigma_min(exponential_matrix(dm, s)) / math.sqrt(len(s))


@dataclass(frozen=True)
class GramScanReport:
    a_grid: np.ndarray
    sigma_min: np.ndarray
    n_nodes: int
    kappa: float
    node_counts: tuple[int, ...]
    sigma_nested: np.ndarray      # shape (len(a_grid), len(node_counts))
    decay_slopes: np.ndarray      # d ln(sigma_min) / d log2(N) per a
    threshold: float
    transition_estimate: float | None
    freq_rule: str = "M = max(2, ceil(kappa*a*N/(2*pi))) evenly spaced in [0, a]; columns scaled by 1/sqrt(M)"
    caveat: str = CAVEAT

    def rows(self):
        return [(float(a), float(s), float(k)) for a, s, k in
                zip(self.a_grid, self.sigma_min, self.decay_slopes)]


def sigma_min_scan(dm: DiscretizedMeasure, a_grid, kappa: float = 4.0,
                   threshold: float = 0.02, center: float | None = None) -> GramScanReport:
    """``sigma_min`` over ``a_grid`` on nested node sets of sizes N/4, N/2, N."""
    a_grid = np.asarray(a_grid, dtype=float)
    if len(a_grid) == 0 or np.any(np.diff(a_grid) <= 0) or np.any(~(a_grid > 0)):
        raise ValueError("a_grid must be positive and ascending")
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    if len(dm) == 0:
        raise ValueError("no nodes")
    n = len(dm)
    counts = tuple(sorted({max(1, n // 4), max(1, n // 2), n}))
    subsets = [dm.nearest(c, center) for c in counts]
    nested = np.array([[_scan_sigma(sub, a, kappa) for sub in subsets] for a in a_grid])
    x = np.log2(np.array(counts, dtype=float))
    slopes = np.zeros(len(a_grid))
    if len(counts) > 1:
        with np.errstate(divide="ignore"):
            y = np.log(nested)
        for k in range(len(a_grid)):
            slopes[k] = np.polyfit(x, y[k], 1)[0] if np.all(np.isfinite(y[k])) else -np.inf
    ok = np.nonzero(np.abs(slopes) < threshold)[0]
    est = float(a_grid[ok[0]]) if len(ok) else None
    return GramScanReport(a_grid, nested[:, -1], n, float(kappa), counts, nested, slopes,
                          float(threshold), est)
