"""The thirteen acceptance criteria, one test each.

Every test records its outcome under its criterion number; the terminal
summary prints one PASS/FAIL line per criterion.
"""

import contextlib
import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import CRITERIA
from expotype.dirichlet import build_profile, claim_residual, dirichlet_norm, regular_configuration
from expotype.gram import discretize, exponential_matrix, sigma_min, sigma_min_scan
from expotype.measure import Interval, frostman_scan, generate, mass
from expotype.partition import dyadic_partition, power_partition, shortness_series
from expotype.series import CONVERGENT, DIVERGENT
from expotype.typebound import (TWO_PI, frostman_doubling_transform, growth_log_integral,
                                search_max_uniform, split_measure, star_mass_series, type_lower_bound)
from expotype.uniform import (PASS, HypothesisError, SequenceSet, adapted_partition, certify_uniform,
                              merge_certified, pair_energy)

import oracles


@contextlib.contextmanager
def criterion(n):
    notes = []
    try:
        yield notes
    except BaseException:
        CRITERIA[n] = (False, "; ".join(notes))
        raise
    CRITERIA[n] = (True, "; ".join(notes))


def _spike_terms(k):
    k = np.asarray(k, dtype=float)
    return -np.log1p(k * k) / (1 + k * k)


def test_criterion_01_energy_oracle():
    with criterion(1) as notes:
        rng = np.random.default_rng(2024)
        sets = [rng.uniform(-1e3, 1e3, int(rng.integers(2, 501))) for _ in range(100)]
        t0 = time.perf_counter()
        got = [pair_energy(x) for x in sets]
        elapsed = time.perf_counter() - t0
        notes.append(f"{elapsed:.2f} s")
        assert all(g == oracles.naive_pair_energy(x) for g, x in zip(got, sets))
        assert elapsed < 1.0


def test_criterion_02_comb_type():
    with criterion(2) as notes:
        t0 = time.perf_counter()
        N = 10_000
        lam = np.arange(-N, N + 1, dtype=float)
        m = generate("comb", N)
        p = power_partition(1.5, N + 0.5)
        est = type_lower_bound(m, lam, p, 1.0)
        assert est.certificate.verdict == PASS
        assert np.all(est.star_mass_diag.terms == 0)
        assert abs(est.lower_bound - TWO_PI) <= 1e-9
        assert certify_uniform(lam, p, 1.2).verdict != PASS
        elapsed = time.perf_counter() - t0
        notes.append(f"bound {est.lower_bound:.12f}, {elapsed:.2f} s")
        assert elapsed < 10.0


def test_criterion_03_spike_measure():
    with criterion(3) as notes:
        est = search_max_uniform(generate("spike", 200))
        notes.append(f"d = {est.d}, bound {est.lower_bound:.6f}")
        assert 0.95 <= est.d <= 1.05
        assert est.lower_bound == pytest.approx(TWO_PI * est.d)
        assert est.lower_bound == pytest.approx(TWO_PI, rel=0.05)
        diag = est.star_mass_diag
        assert diag.verdict == CONVERGENT
        # a star holds exactly one whole spike once |n| >= 2
        far = np.abs(diag.index) >= 2
        assert np.all(np.abs(diag.terms[far] - _spike_terms(diag.index[far])) <= 1e-6)
        want = [math.log(oracles.star_mass_spike(int(k))) / (1 + k * k) for k in diag.index[far]]
        assert np.all(np.abs(diag.terms[far] - want) <= 1e-6)


def test_criterion_04_half_line():
    with criterion(4) as notes:
        est = search_max_uniform(generate("lebesgue_halfline", 500))
        assert est.lower_bound == 0.0
        assert len(est.search_log) == 60 and all(b == 0.0 for _, _, b in est.search_log)
        lam = np.arange(0.5, 500, 1.0)
        c = certify_uniform(lam, power_partition(1.5, 500.5), 1.0)
        assert c.verdict != PASS and not c.density_report.ok
        assert c.density_report.side_trend[0] == pytest.approx(-1.0)
        notes.append("all 60 grid levels give 0")


def test_criterion_05_non_additivity():
    with criterion(5) as notes:
        R = 200
        m = generate("comb_plus_shifted", R)
        p = power_partition(1.5, R + 0.5)
        both = type_lower_bound(m, SequenceSet.of_measure(m), p, 2.0)
        assert both.certificate.verdict != PASS
        assert both.certificate.energy_diag.verdict == DIVERGENT
        ones = type_lower_bound(m, np.arange(-R, R + 1, dtype=float), p, 1.0)
        assert ones.certificate.verdict == PASS
        assert ones.lower_bound == pytest.approx(TWO_PI)
        notes.append("d = 2 energy divergent, d = 1 bound 2*pi")


def test_criterion_06_frostman_doubling():
    with criterion(6) as notes:
        m = generate("lebesgue", 2000)
        fs = frostman_scan(m, [1.0, 0.1, 0.01, 0.001])
        for d in (0.25, 0.5):
            seed = search_max_uniform(m, [d])
            assert seed.certificate.verdict == PASS
            r = frostman_doubling_transform(m, seed, fs.alpha_hat, fs.c_hat)
            assert not r.flags
            assert r.estimate.certificate.verdict == PASS
            assert r.estimate.d == pytest.approx(2 * d)
            assert r.estimate.window == seed.window
            assert np.all(r.qualifying >= 3)
            notes.append(f"d = {d}: bound {r.estimate.lower_bound:.4f}, min qualifying {r.qualifying.min()}")
        spike = generate("spike", 200)
        seed = search_max_uniform(spike)
        fs = frostman_scan(spike, [1.0, 0.1, 0.01, 0.001])
        r = frostman_doubling_transform(spike, seed, fs.alpha_hat, fs.c_hat)
        reasons = {why for _, why in r.flags}
        assert "part mass exceeds D/6" in reasons
        notes.append(f"spike: {len(r.flags)} flags")


def test_criterion_07_splitting():
    with criterion(7) as notes:
        R = 1000
        m = generate("comb", R)
        est = type_lower_bound(m, SequenceSet.of_measure(m), power_partition(1.5, R + 0.5), 1.0)
        r = split_measure(m, est, 0.5, 0.5)
        for e in (r.est1, r.est2):
            assert e.certificate.verdict == PASS
            assert e.lower_bound == pytest.approx(math.pi, abs=1e-9)
        rng = np.random.default_rng(77)
        lefts = rng.uniform(-R, R, 1000)
        widths = rng.exponential(20.0, 1000)
        closed = rng.integers(0, 2, (1000, 2)).astype(bool)
        for a, w, (cl, cr) in zip(lefts, widths, closed):
            i = Interval(a, a + w, bool(cl), bool(cr))
            assert mass(r.m1, i) + mass(r.m2, i) == mass(m, i)
        notes.append("bounds pi and pi; 1000 probes exact")


def test_criterion_08_merge():
    with criterion(8) as notes:
        M = 2000
        z = np.arange(-M, M + 1, dtype=float)
        h = np.arange(-M, M, dtype=float) + 0.5
        cz = certify_uniform(z, adapted_partition(z, 1.5), 1.0)
        ch = certify_uniform(h, adapted_partition(h, 1.5), 1.0)
        seps = [Interval(float(v - 1 / 6), float(v + 1 / 6)) for v in z]
        u = merge_certified(cz, ch, seps)
        assert u.verdict == PASS and u.d == 2.0
        bad = np.sort(np.concatenate([h, [0.1]]))
        cb = certify_uniform(bad, adapted_partition(bad, 1.5), 1.0)
        with pytest.raises(HypothesisError) as exc:
            merge_certified(cz, cb, seps)
        assert exc.value.hypothesis == "separation violated"
        notes.append(f"union passes at 2; bad input: {exc.value.hypothesis}")


def test_criterion_09_growth():
    with criterion(9) as notes:
        g = growth_log_integral(generate("lebesgue", 1e5))
        assert abs(g.total - math.pi / 2 * math.log(2)) <= 1e-4
        assert growth_log_integral(generate("spike", 200)).verdict == DIVERGENT
        assert growth_log_integral(generate("sharpness", 200)).verdict == DIVERGENT
        est = search_max_uniform(generate("sharpness", 200))
        assert est.lower_bound == pytest.approx(TWO_PI, rel=0.05)
        notes.append(f"f = 1: {g.total:.8f}; sharpness bound {est.lower_bound:.6f}")


def test_criterion_10_gram():
    with criterion(10) as notes:
        t0 = time.perf_counter()
        dm = discretize(generate("comb", 64), 1).nearest(128, 0.0)
        assert len(dm) == 128
        rep = sigma_min_scan(dm, np.linspace(math.pi, 3 * math.pi, 33))
        assert rep.transition_estimate is not None
        assert abs(rep.transition_estimate - TWO_PI) <= 0.15 * TWO_PI
        # nested grids: multiples of one step, growing in a
        step = 3 * math.pi / 384
        vals = [sigma_min(exponential_matrix(dm, step * np.arange(k))) for k in range(128, 385, 32)]
        assert all(b >= a - 1e-10 for a, b in zip(vals, vals[1:]))
        s = np.linspace(0, 3 * math.pi, 300)
        base = sigma_min(exponential_matrix(dm, s))
        for t in (0.3, -7.25, 100.0):
            assert abs(sigma_min(exponential_matrix(dm.shifted(t), s)) - base) <= 1e-10
        shifted = sigma_min_scan(dm.shifted(0.3), rep.a_grid, center=0.3)
        assert np.all(np.abs(shifted.sigma_min - rep.sigma_min) <= 1e-10)
        elapsed = time.perf_counter() - t0
        notes.append(f"transition {rep.transition_estimate:.4f}, {elapsed:.1f} s")
        assert elapsed < 60.0


def test_criterion_11_dirichlet():
    with criterion(11) as notes:
        res = []
        for N in (25, 50, 100, 200):
            res.append(claim_residual(*regular_configuration(N)).residual_over_S2)
        assert all(1 / 3 <= b / a <= 3 for a, b in zip(res, res[1:]))
        rng = np.random.default_rng(11)
        worst = 0.0
        for _ in range(20):
            k = int(rng.integers(1, 4))
            L = float(rng.uniform(2, 10))
            cuts = np.sort(rng.uniform(0, L, 2 * k))
            ramps = [Interval(float(a), float(b)) for a, b in zip(cuts[::2], cuts[1::2])]
            phi = build_profile(Interval(0.0, L, False, True), ramps, k / L)
            edges, vals = phi.cells()
            worst = max(worst, abs(dirichlet_norm(phi) - oracles.profile_energy_quad(edges, vals)))
        assert worst <= 1e-6
        notes.append("residuals " + ", ".join(f"{r:.4f}" for r in res) + f"; worst quad gap {worst:.1e}")


def test_criterion_12_shortness():
    with criterion(12) as notes:
        R = 1e4
        assert shortness_series(dyadic_partition(R)).verdict == DIVERGENT
        for pexp in (1.2, 1.5, 2.0):
            assert shortness_series(power_partition(pexp, R)).verdict == CONVERGENT
        notes.append("dyadic divergent; p = 1.2, 1.5, 2 convergent")


PIPELINES = [
    ["gen", "--example", "comb", "--R", "1000"],
    ["gen", "--sequence", "0:500:1"],
    ["certify", "--example", "comb", "--R", "500", "--d", "1", "--partition", "power"],
    ["type-bound", "--example", "spike", "--R", "100", "--d", "1"],
    ["search", "--example", "spike", "--R", "200"],
    ["split", "--example", "comb", "--R", "300", "--d", "1", "--c1", "0.5"],
    ["frostman-double", "--example", "lebesgue", "--R", "500", "--d", "0.5"],
    ["growth", "--example", "spike", "--R", "200"],
    ["weights", "--example", "poisson", "--R", "200", "--d", "1", "--weight", "adversarial"],
    ["gram-scan", "--example", "comb", "--R", "64", "--nodes", "128"],
    ["dirichlet-check"],
    ["search", "--example", "sharpness", "--R", "100", "--format", "csv"],
]


def _run(argv, out):
    cmd = [sys.executable, "-m", "expotype.cli", *argv, "--out", str(out)]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    assert proc.returncode in (0, 2), proc.stderr
    data = out.read_bytes()
    if argv[-1] != "csv":
        json.loads(data)
    # both runs carry the same version header, so raw bytes are compared
    return data


def test_criterion_13_determinism(tmp_path):
    with criterion(13) as notes:
        for k, argv in enumerate(PIPELINES):
            first = _run(argv, tmp_path / f"a{k}")
            second = _run(argv, tmp_path / f"b{k}")
            assert first == second, argv[0]
        est, gram = tmp_path / "est.json", tmp_path / "gram.json"
        _run(PIPELINES[4], est)
        _run(PIPELINES[9], gram)
        cmp = ["compare", "--estimate", str(est), "--gram", str(gram)]
        assert _run(cmp, tmp_path / "c1") == _run(cmp, tmp_path / "c2")
        notes.append(f"{len(PIPELINES) + 1} pipelines byte-identical")
