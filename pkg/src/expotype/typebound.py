"""Lower bounds for the exponential type and the constructions behind them.

A passing uniformity certificate at level ``d`` together with a convergent
star-mass series gives the lower bound ``2*pi*d``.  The module also hosts
the search for the largest certifiable ``d``, the Frostman doubling step,
the splitting of a measure into two measures of prescribed types, the
growth integral and weight diagnostics.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import _dd
from .measure import (AtomicMeasure, DensityMeasure, Interval, Measure, ess_sup_profile,
                      masses_of, nested_radii, remove, restrict, support_hull, _activation)
from .partition import Partition, adapted_partition
from .series import (CONVERGENT, DEFAULT_TOLERANCES, SeriesDiagnostics, Tolerances, diagnose,
                     two_sided)
from .uniform import (PASS, SequenceSet, StarSystem, UniformityCertificate, as_sequence,
                      certify_uniform, star_intervals)

TWO_PI = 2.0 * math.pi
# part indices must stay exact integers in float arithmetic
MAX_PARTS = 2.0 ** 53


@dataclass(frozen=True, eq=False)
class TypeEstimate:
    lower_bound: float
    certificate: UniformityCertificate | None
    star_mass_diag: SeriesDiagnostics
    window: Interval
    caveats: tuple[str, ...] = ()
    search_log: tuple[tuple[float, str, float], ...] = ()  # (d, verdict, bound)

    @property
    def d(self) -> float:
        return self.certificate.d if self.certificate is not None else 0.0


def _empty_diag(flag: str) -> SeriesDiagnostics:
    return diagnose(np.zeros(0), flags=(flag,))


# --- star masses and bounds ---------------------------------------------------

def star_masses(m: Measure, stars: StarSystem) -> np.ndarray:
    lh, ll, rh, rl = stars.bounds()
    return m.masses_of(lh, rh, True, True, ll, rl)


def star_mass_series(m: Measure, lam, tol: Tolerances = DEFAULT_TOLERANCES) -> SeriesDiagnostics:
    """Terms ``log m(star_n) / (1 + n^2)``, ``n = 0`` at the point nearest the origin."""
    lam = as_sequence(lam)
    if len(lam) < 2:
        return _empty_diag("fewer than two points: no stars")
    stars = star_intervals(lam)
    mu = star_masses(m, stars)
    n = stars.index.astype(float)
    flags = []
    if np.any(mu <= 0):
        flags.append(f"{int(np.sum(mu <= 0))} star(s) of zero mass")
    with np.errstate(divide="ignore"):
        terms = np.log(mu) / (1.0 + n ** 2)
    return two_sided(terms, stars.index, tol, flags)


def type_lower_bound(m: Measure, lam, p: Partition, d: float,
                     tol: Tolerances = DEFAULT_TOLERANCES) -> TypeEstimate:
    lam = as_sequence(lam)
    if len(lam) == 0:
        return TypeEstimate(0.0, None, _empty_diag("empty sequence"), p.span, ("empty sequence",))
    cert = certify_uniform(lam, p, d, tol)
    sm = star_mass_series(m, lam, tol)
    caveats = []
    if cert.verdict != PASS:
        caveats.append(f"uniformity certificate {cert.verdict}")
    if sm.verdict != CONVERGENT:
        caveats.append(f"star-mass series {sm.verdict}")
    bound = TWO_PI * cert.d if not caveats else 0.0
    return TypeEstimate(bound, cert, sm, p.span, tuple(caveats))


# --- site selection and search -------------------------------------------------

@dataclass(frozen=True)
class SearchParams:
    p_exponent: float = 1.5
    cells_per_unit: float = 8.0   # candidate cells per unit of the largest grid density
    pool_ratio: float = 0.5       # keep candidates with mass >= ratio * k-th heaviest
    seed: int = 0                 # the search is deterministic; kept for run records
    tol: Tolerances = DEFAULT_TOLERANCES


def candidate_sites(m: Measure, d_max: float, params: SearchParams = SearchParams()):
    """Candidate points ``(hi, lo, mass)``: atoms, or cells of density pieces.

    Density pieces are cut into cells of length at most ``1/(cells_per_unit*d_max)``
    and at least two cells each; a cell's site is its midpoint.
    """
    if isinstance(m, AtomicMeasure):
        return m.positions.copy(), m.offsets.copy(), m.masses.copy()
    h = 1.0 / (params.cells_per_unit * d_max)
    keep = m.heights > 0
    w = m.widths[keep]
    counts = np.maximum(2, np.ceil(w / h)).astype(int)
    piece = np.repeat(np.nonzero(keep)[0], counts)
    j = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    step = np.repeat(w / counts, counts)
    hi, lo = _dd.add(m.lefts[piece], m.left_offs[piece], (j + 0.5) * step)
    return hi, lo, m.heights[piece] * step


def _allocation(p: Partition, d: float) -> np.ndarray:
    """Points per interval: multiples of ``1/d`` in ``(a_n, a_{n+1}]``."""
    c = np.floor(d * p.breakpoints)
    return np.diff(c).astype(int)


def select_sites(m: Measure, d: float, p: Partition, params: SearchParams = SearchParams(),
                 d_max: float | None = None, candidates=None) -> SequenceSet:
    """Choose about ``d|I_n|`` mass-rich, well spread sites in each interval of ``p``.

    Each interval gets ``k_n`` evenly spaced slots; each slot takes the
    nearest unused candidate among the heavy pool (ties go left).  With
    fewer than ``k_n`` candidates all of them are taken.
    """
    return _select(m, d, p, params, d_max, candidates)[0]


def _select(m, d, p, params, d_max, candidates):
    """Sites plus the number of slots left unfilled."""
    if candidates is None:
        candidates = candidate_sites(m, d_max or d, params)
    hi, lo, w = candidates
    span = p.span
    inside = ~_dd.less(hi, lo, span.left, 0.0) & ~_dd.less(span.right, 0.0, hi, lo)
    hi, lo, w = hi[inside], lo[inside], w[inside]
    where = p.locate(hi, lo) if len(hi) else np.zeros(0, dtype=int)
    ends = np.concatenate([[0], np.cumsum(np.bincount(where, minlength=len(p)))])
    k_all = _allocation(p, d)
    short = int(np.sum(np.maximum(k_all - np.diff(ends), 0)))
    chosen = []
    for n in range(len(p)):
        a, b = ends[n], ends[n + 1]
        k = int(k_all[n])
        if k <= 0 or b == a:
            continue
        if b - a <= k:
            chosen.extend(range(a, b))
            continue
        ww = w[a:b]
        kth = np.sort(ww)[::-1][k - 1]
        pool = a + np.nonzero(ww >= params.pool_ratio * kth)[0]
        if len(pool) <= k:
            chosen.extend(pool.tolist())
            continue
        x = hi[pool] + lo[pool]
        left, right = p.breakpoints[n], p.breakpoints[n + 1]
        targets = left + (np.arange(k) + 0.5) * (right - left) / k
        used = np.zeros(len(pool), dtype=bool)
        for t in targets:
            j = int(np.searchsorted(x, t))
            lo_j, hi_j = j - 1, j
            while lo_j >= 0 and used[lo_j]:
                lo_j -= 1
            while hi_j < len(pool) and used[hi_j]:
                hi_j += 1
            if lo_j < 0:
                pick = hi_j
            elif hi_j >= len(pool):
                pick = lo_j
            else:
                pick = lo_j if t - x[lo_j] <= x[hi_j] - t else hi_j
            used[pick] = True
        chosen.extend(pool[used].tolist())
    chosen = np.array(sorted(chosen), dtype=int)
    return SequenceSet(hi[chosen], lo[chosen]), short


def search_partition(m: Measure, candidates, params: SearchParams = SearchParams()) -> Partition:
    hi, lo, _ = candidates
    # the outer ends go half a gap beyond the outermost sites, like the interior
    # breakpoints; the widest of the last few gaps skips cells of one narrow piece
    span = m.window
    if len(hi) >= 2:
        g = np.diff(hi)
        k = min(len(g), 8)
        span = Interval(float(hi[0] - 0.5 * g[:k].max()), float(hi[-1] + 0.5 * g[-k:].max()))
    return adapted_partition(hi, params.p_exponent, span=span, offsets=lo)


def default_d_grid(lo: float = 0.05, hi: float = 3.0, step: float = 0.05) -> np.ndarray:
    return np.round(np.arange(lo, hi + step / 2, step), 10)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("EXPOTYPE_THREADS", "1")))
    except ValueError:
        return 1


def _status(est: TypeEstimate) -> str:
    if est.lower_bound > 0:
        return PASS
    if any(c.startswith("selection short") for c in est.caveats):
        return "short"
    return est.certificate.verdict if est.certificate is not None else "fail"


def search_max_uniform(m: Measure, d_grid=None, params: SearchParams = SearchParams()) -> TypeEstimate:
    """Largest grid ``d`` whose selected sites certify a type bound ``2*pi*d``."""
    d_grid = default_d_grid() if d_grid is None else np.asarray(d_grid, dtype=float)
    if len(d_grid) == 0 or np.any(~(d_grid > 0)) or np.any(np.diff(d_grid) <= 0):
        raise ValueError("d_grid must be ascending and positive")
    hull = support_hull(m)
    if hull is None:
        return TypeEstimate(0.0, None, _empty_diag("zero measure"), m.window, ("zero measure",))
    cand = candidate_sites(m, float(d_grid[-1]), params)
    if len(cand[0]) < 2:
        return TypeEstimate(0.0, None, _empty_diag("fewer than two candidate sites"), m.window,
                            ("fewer than two candidate sites",))
    p = search_partition(m, cand, params)

    def run(d):
        lam, short = _select(m, float(d), p, params, None, cand)
        est = type_lower_bound(m, lam, p, float(d), params.tol)
        if short:
            # the measure cannot host d|I_n| sites somewhere: the level is not reached
            est = replace(est, lower_bound=0.0,
                          caveats=est.caveats + (f"selection short by {short} site(s)",))
        return est

    with ThreadPoolExecutor(max_workers=_threads()) as ex:
        results = list(ex.map(run, d_grid))
    log = tuple((float(d), _status(r), r.lower_bound) for d, r in zip(d_grid, results))
    passing = [r for r in results if r.lower_bound > 0]
    if not passing:
        best = results[0]
        return replace(best, caveats=best.caveats + ("no grid level passed",), search_log=log)
    best = passing[-1]
    caveats = list(best.caveats)
    if best is results[-1]:
        caveats.append("type possibly infinite: the top of the grid passed")
    return replace(best, caveats=tuple(caveats), search_log=log)


# --- Frostman doubling -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DoublingResult:
    gamma: SequenceSet
    estimate: TypeEstimate
    parts: np.ndarray          # M_n per star
    qualifying: np.ndarray     # number of parts with mass >= Delta_n/(2 M_n)
    part_lengths: np.ndarray
    separations: np.ndarray    # gap d_n between the two chosen parts
    separation_diag: SeriesDiagnostics
    flags: tuple[tuple[int, str], ...]   # (star label, reason)

    def __iter__(self):
        return iter((self.gamma, self.estimate))


@dataclass(frozen=True)
class _PartSummary:
    count: int        # parts with mass >= threshold
    first: int
    last: int
    max_mass: float


def _part_summary(m: Measure, left: float, left_off: float, ell: float, M: int,
                  thr: float) -> _PartSummary:
    """Qualifying parts of ``[left, left + M*ell)`` cut into ``M`` equal parts.

    Parts are never enumerated: for a density, parts lying inside one piece
    all carry ``height*ell`` and only the parts holding a piece endpoint are
    measured directly; for atoms, parts are grouped by the atoms they hold.
    """
    span = M * ell
    found: dict[int, float] = {}
    runs = []  # (first, last, mass) of equal-mass runs
    if isinstance(m, AtomicMeasure):
        rel = _dd.diff(m.positions, m.offsets, left, left_off)
        sel = (rel >= 0) & (rel < span)
        k = np.minimum(np.floor(rel[sel] / ell), M - 1).astype(np.int64)
        for kk, mass in zip(*_group_sum(k, m.masses[sel])):
            found[int(kk)] = float(mass)
    else:
        rel_l = _dd.diff(m.lefts, m.left_offs, left, left_off)
        rel_r = _dd.diff(m.rights, m.right_offs, left, left_off)
        sel = np.nonzero((rel_r > 0) & (rel_l < span) & (m.heights > 0))[0]
        edge_parts = set()
        for j in sel:
            a, b = max(rel_l[j], 0.0), min(rel_r[j], span)
            ka, kb = math.ceil(a / ell), math.floor(b / ell)
            if kb > ka:
                runs.append((ka, kb - 1, float(m.heights[j]) * ell))
            # endpoints are only known to float precision relative to the
            # part grid, so the neighbouring parts are measured as well
            for e in (a, b):
                k = int(math.floor(e / ell))
                edge_parts.update(x for x in (k - 1, k, k + 1) if 0 <= x < M)
        for k in sorted(edge_parts):
            lh, ll = _dd.add(left, left_off, k * ell)
            rh, rl = _dd.add(left, left_off, (k + 1) * ell)
            found[k] = float(m.masses_of([lh], [rh], True, False, [ll], [rl])[0])
    count, first, last, peak = 0, None, None, 0.0
    for ka, kb, mass in runs:
        peak = max(peak, mass)
        # edge parts inside a run are measured directly instead
        inner = [k for k in found if ka <= k <= kb]
        if mass >= thr:
            count += (kb - ka + 1) - len(inner)
            first = ka if first is None else min(first, ka)
            last = kb if last is None else max(last, kb)
    for k, mass in found.items():
        peak = max(peak, mass)
        if mass >= thr:
            count += 1
            first = k if first is None else min(first, k)
            last = k if last is None else max(last, k)
    return _PartSummary(count, -1 if first is None else first, -1 if last is None else last, peak)


def _group_sum(keys: np.ndarray, vals: np.ndarray):
    if len(keys) == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    u, inv = np.unique(keys, return_inverse=True)
    out = np.zeros(len(u))
    np.add.at(out, inv, vals)
    return u, out


def frostman_doubling_transform(m: Measure, est: TypeEstimate, alpha: float, C: float,
                                tol: Tolerances = DEFAULT_TOLERANCES) -> DoublingResult:
    """Two points per star, picked where the star's mass is spread out.

    ``(alpha, C)`` is a Frostman pair ``m(I) <= C |I|^alpha``; the measure
    is normalised by ``C``.  A star of normalised mass ``D`` is cut into
    ``M = ceil(|star| / (D/6)^(1/alpha))`` equal parts, and the two
    outermost parts holding at least ``D/(2M)`` become the new points.
    Stars failing a check are flagged and contribute no points.
    """
    if est.certificate is None or est.certificate.verdict != PASS:
        raise ValueError("the seed estimate must carry a passing certificate")
    if not (alpha > 0 and C > 0):
        raise ValueError("alpha and C must be positive")
    cert = est.certificate
    stars = star_intervals(cert.lam)
    lh, ll, rh, rl = stars.bounds()
    delta = star_masses(m, stars) / C
    length = stars.lengths
    n_st = len(stars)
    parts = np.zeros(n_st, dtype=np.int64)
    qual = np.zeros(n_st, dtype=np.int64)
    plen = np.zeros(n_st)
    sep = np.full(n_st, np.nan)
    g_hi, g_lo, flags = [], [], []
    for s in range(n_st):
        label = int(stars.index[s])
        if not delta[s] > 0:
            flags.append((label, "zero-mass star"))
            continue
        with np.errstate(over="ignore", divide="ignore"):
            M_real = length[s] / (delta[s] / 6.0) ** (1.0 / alpha)
        if not math.isfinite(M_real) or M_real > MAX_PARTS:
            flags.append((label, f"part count {M_real:.3g} beyond 2^53"))
            continue
        M = max(1, math.ceil(M_real))
        parts[s] = M
        ell = length[s] / M
        plen[s] = ell
        if M < 6:
            flags.append((label, f"M = {M} < 6"))
            continue
        # thresholds in unnormalised mass
        summ = _part_summary(m, lh[s], ll[s], ell, M, C * delta[s] / (2.0 * M) * (1 - 1e-12))
        if summ.max_mass > C * delta[s] / 6.0 * (1 + 1e-9):
            flags.append((label, "part mass exceeds D/6"))
        qual[s] = summ.count
        if summ.count < 3:
            flags.append((label, f"only {summ.count} qualifying part(s)"))
            continue
        k1, k2 = summ.first, summ.last
        sep[s] = (k2 - k1 - 1) * ell
        for k in (k1, k2):
            h, l = _dd.add(lh[s], ll[s], (k + 0.5) * ell)
            g_hi.append(h), g_lo.append(l)
    gamma = SequenceSet(np.array(g_hi), np.array(g_lo))
    ok = np.isfinite(sep)
    with np.errstate(divide="ignore"):
        sd = two_sided(np.log(sep[ok]) / (1.0 + stars.index[ok].astype(float) ** 2),
                       stars.index[ok], tol)
    est2 = type_lower_bound(m, gamma, cert.partition, 2.0 * cert.d, tol)
    if flags:
        est2 = replace(est2, caveats=est2.caveats + (f"{len(flags)} star(s) failed the mass checks",))
    return DoublingResult(gamma, est2, parts, qual, plen, sep, sd, tuple(flags))


# --- splitting ---------------------------------------------------------------------

def _spread_mask(labels: np.ndarray, ratio: float) -> np.ndarray:
    """Pick labels where ``floor(n r)`` steps: an evenly spread subset of density ``r``."""
    n = labels.astype(float)
    return np.floor(n * ratio + 1e-12) != np.floor((n - 1) * ratio + 1e-12)


@dataclass(frozen=True, eq=False)
class SplitResult:
    m1: Measure
    est1: TypeEstimate
    m2: Measure
    est2: TypeEstimate
    gamma: SequenceSet
    psi: SequenceSet

    def __iter__(self):
        return iter((self.m1, self.est1, self.m2, self.est2))


def _zero_estimate(p: Partition, why: str) -> TypeEstimate:
    return TypeEstimate(0.0, None, _empty_diag(why), p.span, (why,))


def split_measure(m: Measure, est: TypeEstimate, c1: float, c2: float,
                  tol: Tolerances = DEFAULT_TOLERANCES) -> SplitResult:
    """Split ``m`` into ``m1 + m2`` with certified levels ``c1`` and ``c2``.

    ``m1`` is ``m`` on the stars of an evenly spread subsequence of
    density ``c1``; ``m2`` is the rest, certified on the centres of the
    heavier half of each remaining star.
    """
    if est.certificate is None:
        raise ValueError("the estimate carries no certificate")
    cert = est.certificate
    d = cert.d
    if c1 < 0 or c2 < 0 or abs(c1 + c2 - d) > 1e-12 * max(1.0, d):
        raise ValueError(f"c1 + c2 must equal d = {d}")
    lam, p = cert.lam, cert.partition
    stars = star_intervals(lam)
    sel = _spread_mask(stars.index, c1 / d)
    gamma = lam.subset(sel)
    ivals = stars.intervals()
    X = [iv for iv, s in zip(ivals, sel) if s]
    m1 = restrict(m, X)
    m2 = remove(m, X)

    lh, ll, rh, rl = stars.bounds()
    rest = np.nonzero(~sel)[0]
    q = stars.radii[rest] / 2.0
    # halves [L, c) and [c, R]; heavier half wins, ties to the right
    left_mass = m2.masses_of(lh[rest], stars.centers[rest], True, False, ll[rest], stars.center_offs[rest])
    right_mass = m2.masses_of(stars.centers[rest], rh[rest], True, True, stars.center_offs[rest], rl[rest])
    shift = np.where(left_mass > right_mass, -q, q)
    ph, pl = _dd.add(stars.centers[rest], stars.center_offs[rest], shift)
    # a half centre beyond the window edge is replaced by the other half's
    out = (ph < p.breakpoints[0]) | (ph > p.breakpoints[-1])
    if np.any(out):
        fh, fl = _dd.add(stars.centers[rest], stars.center_offs[rest], -shift)
        ph, pl = np.where(out, fh, ph), np.where(out, fl, pl)
    psi = SequenceSet(ph, pl)

    est1 = type_lower_bound(m1, gamma, p, c1, tol) if c1 > 0 else _zero_estimate(p, "level 0")
    est2 = type_lower_bound(m2, psi, p, c2, tol) if c2 > 0 else _zero_estimate(p, "level 0")
    return SplitResult(m1, est1, m2, est2, gamma, psi)


# --- growth ---------------------------------------------------------------------------

def _growth_upto(m: DensityMeasure, r: np.ndarray) -> np.ndarray:
    """``int_0^r log(1 + M_f(x)) / (1 + x^2) dx`` for each radius, exactly for the step ``M_f``."""
    t, run = _activation(m)
    # M_f is constant run[k] on (t[k], t[k+1]]
    edges = np.concatenate([t, [np.inf]])
    out = np.empty(len(r))
    for j, rj in enumerate(r):
        a = np.minimum(edges[:-1], rj)
        b = np.minimum(edges[1:], rj)
        out[j] = math.fsum(np.log1p(run) * (np.arctan(b) - np.arctan(a)))
    return out


def growth_log_integral(m: DensityMeasure, windows: int = 64,
                        tol: Tolerances = DEFAULT_TOLERANCES) -> SeriesDiagnostics:
    """Truncated growth integral over nested windows ``[0, r_k]``.

    Divergence of the full integral is necessary for a finite positive type.
    """
    if not isinstance(m, DensityMeasure):
        raise TypeError("growth_log_integral needs a density measure")
    R = max(abs(m.window.left), abs(m.window.right))
    r = nested_radii(R, windows)
    vals = _growth_upto(m, r) if len(m) else np.zeros(len(r))
    return diagnose(np.diff(np.concatenate([[0.0], vals])), r, tol)


# --- weights --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WeightFn:
    """Piecewise-constant weight: ``values[k]`` on ``[knots[k], knots[k+1])``.

    Left of the first knot the first value applies; right of the last knot
    the last one.
    """

    knots: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        k = np.atleast_1d(np.asarray(self.knots, dtype=float))
        v = np.atleast_1d(np.asarray(self.values, dtype=float))
        if k.shape != v.shape or len(k) == 0:
            raise ValueError("knots and values must be nonempty and of equal length")
        if np.any(np.diff(k) <= 0):
            raise ValueError("knots must be strictly increasing")
        if np.any(~(v >= 1)):
            raise ValueError(f"weight below 1 at x = {k[~(v >= 1)][0]!r}")
        object.__setattr__(self, "knots", k)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, c: float = 1.0) -> "WeightFn":
        return cls([0.0], [c])

    @classmethod
    def sampled(cls, f, xs) -> "WeightFn":
        xs = np.asarray(xs, dtype=float)
        return cls(xs, np.array([f(x) for x in xs]))

    def __call__(self, x) -> np.ndarray:
        j = np.searchsorted(self.knots, np.asarray(x, dtype=float), "right") - 1
        return self.values[np.clip(j, 0, len(self.values) - 1)]


def _weighted_upto(m: Measure, w: WeightFn, r: np.ndarray) -> np.ndarray:
    if isinstance(m, AtomicMeasure):
        x = m.positions + m.offsets
        contrib = w(x) * m.masses
        order = np.argsort(np.abs(x), kind="stable")
        cw = np.concatenate([[0.0], np.cumsum(contrib[order])])
        return cw[np.searchsorted(np.abs(x)[order], r, "right")]
    out = np.empty(len(r))
    for j, rj in enumerate(r):
        cuts = np.unique(np.concatenate([[-rj, rj], w.knots[(w.knots > -rj) & (w.knots < rj)]]))
        a, b = cuts[:-1], cuts[1:]
        mass = m.masses_of(a, b, True, False)
        out[j] = math.fsum(w(a) * mass)
    return out


def weight_diagnostics(m: Measure, w: WeightFn, lam, windows: int = 64,
                       tol: Tolerances = DEFAULT_TOLERANCES):
    """``(mu_weight, log_series)``: nested ``int W dm`` and ``sum log W(x_n)/(1+x_n^2)``."""
    R = max(abs(m.window.left), abs(m.window.right))
    r = nested_radii(R, windows)
    vals = _weighted_upto(m, w, r)
    mu_weight = diagnose(np.diff(np.concatenate([[0.0], vals])), r, tol)
    lam = as_sequence(lam)
    x = lam.points + lam.offsets
    log_series = two_sided(np.log(w(x)) / (1.0 + x ** 2), lam.origin_index(), tol)
    return mu_weight, log_series


def adversarial_weight(m: Measure, w: WeightFn, lam) -> WeightFn:
    """``max(W(x_n), 1/m(star_n)) / (1 + n^2)`` on each star, ``W`` elsewhere.

    Values are clamped at 1 so the result is again a weight; stars of zero
    mass are skipped.
    """
    lam = as_sequence(lam)
    stars = star_intervals(lam)
    mu = star_masses(m, stars)
    lh, ll, rh, rl = stars.bounds()
    left, right = lh + ll, rh + rl
    n = stars.index.astype(float)
    with np.errstate(divide="ignore"):
        star_val = np.maximum(1.0, np.maximum(w(stars.centers + stars.center_offs), 1.0 / mu) / (1.0 + n ** 2))
    ok = mu > 0
    knots = np.unique(np.concatenate([w.knots, left[ok], right[ok]]))
    vals = w(knots)
    k = np.searchsorted(left[ok], knots, "right") - 1
    kk = np.clip(k, 0, max(int(ok.sum()) - 1, 0))
    inside = (k >= 0) & (knots < right[ok][kk]) if ok.any() else np.zeros(len(knots), dtype=bool)
    vals = np.where(inside, star_val[ok][kk] if ok.any() else vals, vals)
    return WeightFn(knots, vals)
