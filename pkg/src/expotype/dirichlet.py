"""Logarithmic energy of piecewise-linear profiles.

A profile on ``S`` rises by one across each ramp interval and falls at the
constant rate ``c`` everywhere on ``S``, so its derivative is piecewise
constant.  Its energy

    -(1/pi) * double integral of log|t - x| phi'(t) phi'(x)

is a finite sum of rectangle integrals of ``log|t - x|``, each available in
closed form, so no singular quadrature is involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measure import Interval
from .uniform import as_sequence, pair_energy


class ProfileError(ValueError):
    pass


def _F(u: np.ndarray) -> np.ndarray:
    """Second antiderivative of ``log|u|`` vanishing at 0."""
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = 0.5 * u * u * np.log(np.abs(u)) - 0.75 * u * u
    return np.where(u == 0.0, 0.0, val)


def log_rectangle(a1, a2, b1, b2) -> np.ndarray:
    """``int_{a1}^{a2} int_{b1}^{b2} log|t - x| dt dx`` (vectorised)."""
    return _F(np.subtract(b2, a1)) - _F(np.subtract(b2, a2)) - _F(np.subtract(b1, a1)) \
        + _F(np.subtract(b1, a2))


@dataclass(frozen=True)
class PiecewiseLinearProfile:
    support: Interval
    ramps: tuple[Interval, ...]
    c: float

    def cells(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell edges and the constant derivative on each cell."""
        s = self.support
        edges = [s.left]
        vals = []
        for r in self.ramps:
            if r.left > edges[-1]:
                edges.append(r.left)
                vals.append(-self.c)
            edges.append(r.right)
            vals.append(1.0 / r.length - self.c)
        if s.right > edges[-1]:
            edges.append(s.right)
            vals.append(-self.c)
        return np.array(edges), np.array(vals)

    def __call__(self, x) -> np.ndarray:
        """Profile values; zero outside the support."""
        edges, vals = self.cells()
        x = np.asarray(x, dtype=float)
        inc = vals * np.diff(edges)
        level = np.concatenate([[0.0], np.cumsum(inc)])
        j = np.clip(np.searchsorted(edges, x, "right") - 1, 0, len(vals) - 1)
        inside = (x >= edges[0]) & (x <= edges[-1])
        return np.where(inside, level[j] + vals[j] * (x - edges[j]), 0.0)

    def scaled(self, s: float) -> "PiecewiseLinearProfile":
        """The profile ``x -> phi(x/s)``."""
        sc = lambda i: Interval(i.left * s, i.right * s)
        return PiecewiseLinearProfile(sc(self.support), tuple(sc(r) for r in self.ramps), self.c / s)


def build_profile(S: Interval, ramp_intervals, c: float, rtol: float = 1e-9) -> PiecewiseLinearProfile:
    ramps = tuple(sorted(ramp_intervals, key=lambda r: (r.left, r.right)))
    for r in ramps:
        if not r.length > 0:
            raise ProfileError("ramps must have positive length")
        if r.left < S.left or r.right > S.right:
            raise ProfileError(f"ramp [{r.left}, {r.right}] leaves the support")
    for a, b in zip(ramps[:-1], ramps[1:]):
        if b.left < a.right:
            raise ProfileError(f"overlapping ramps at {b.left}")
    rise = c * S.length
    if abs(rise - len(ramps)) > rtol * max(1.0, len(ramps)):
        raise ProfileError(f"rise imbalance: c*|S| = {rise} but {len(ramps)} ramp(s)")
    return PiecewiseLinearProfile(S, ramps, float(c))


def dirichlet_norm(phi: PiecewiseLinearProfile) -> float:
    edges, v = phi.cells()
    if len(v) == 0 or not np.any(v):
        return 0.0
    a1, a2 = edges[:-1], edges[1:]
    G = log_rectangle(a1[:, None], a2[:, None], a1[None, :], a2[None, :])
    return -math.fsum((v[:, None] * v[None, :] * G).ravel()) / math.pi


@dataclass(frozen=True)
class ClaimCheck:
    scale: float
    lhs: float
    rhs: float
    residual_over_S2: float


def claim_residual(lam_in_S, ramps, c: float, S: Interval) -> ClaimCheck:
    """Compare the profile energy with its pair-energy expression.

    ``rhs = (c^2|S|^2 log|S| - E(lambda)) / pi - sum log|p_m|``.
    """
    lam = as_sequence(lam_in_S)
    ramps = list(ramps)
    if len(lam) != len(ramps):
        raise ProfileError("one ramp per point is required")
    x = lam.points + lam.offsets
    for p, xm in zip(sorted(ramps, key=lambda r: r.left), x):
        if abs(p.center - xm) > 1e-9 * max(1.0, abs(xm)):
            raise ProfileError(f"ramp [{p.left}, {p.right}] is not centred at {xm}")
    phi = build_profile(S, ramps, c)
    lhs = dirichlet_norm(phi)
    L = S.length
    main = c * c * L * L * math.log(L) if L > 0 and c != 0 else 0.0
    rhs = (main - pair_energy(lam)) / math.pi - math.fsum(math.log(p.length) for p in ramps)
    return ClaimCheck(L, lhs, rhs, (lhs - rhs) / (L * L))


def regular_configuration(N: int, ramp_length: float = 0.5):
    """Points ``m - 1/2`` in ``(0, N]``, ramps of the given length, ``c = 1``."""
    x = np.arange(1, N + 1) - 0.5
    h = ramp_length / 2
    return x, [Interval(float(t - h), float(t + h)) for t in x], 1.0, Interval(0.0, float(N), False, True)
