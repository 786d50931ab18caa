import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from expotype import artifacts as art
from expotype.measure import (EXAMPLES, AtomicMeasure, DensityMeasure, Interval, add, closed,
                              doubling_scan, ess_sup_profile, frostman_scan, generate, mass,
                              masses_of, poisson_functional, remove, restrict, scaled)

import oracles

# frozen from oracles.spike_poisson(50) (per-piece scipy quad in the local variable)
SPIKE_POISSON_50 = 1.410085608060599


def test_interval_rejects_reversed_endpoints():
    with pytest.raises(ValueError):
        Interval(1.0, 0.0)
    assert Interval(2.0, 2.0).length == 0.0


def test_spike_unit_piece_mass():
    m = generate("spike", 5)
    assert mass(m, Interval(0.0, 1.0, True, False)) == 1.0


def test_atom_captured_once():
    m = AtomicMeasure([0.0, 1.0], [1.0, 2.0], closed(-1, 2))
    assert mass(m, closed(0.0, 0.5)) == 1.0
    assert mass(m, Interval(0.0, 1.0, False, True)) == 2.0
    assert mass(m, Interval(0.0, 1.0, False, False)) == 0.0


def test_random_density_matches_midpoint_rule():
    # endpoints on a 0.01 grid; up to 1e6 midpoint nodes over [0, 100]
    rng = np.random.default_rng(7)
    cuts = np.sort(rng.choice(np.arange(1, 10000), 199, replace=False)) / 100.0
    edges = np.concatenate([[0.0], cuts, [100.0]])
    l, r = edges[:-1:2], edges[1::2]
    h = rng.uniform(0.1, 5.0, len(l))
    m = DensityMeasure(l, r, h, closed(0, 100))
    assert len(m) == 100
    for _ in range(5):
        a, b = np.sort(rng.choice(np.arange(0, 10001), 2, replace=False)) / 100.0
        # node spacing 1e-4 divides the 0.01 grid, so no node straddles an endpoint
        want = oracles.midpoint_mass(l, r, h, a, b, nodes=int(round((b - a) * 1e4)))
        assert mass(m, closed(a, b)) == pytest.approx(want, rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.floats(-20, 20), st.floats(0, 1), st.floats(0, 20))
def test_mass_additive_on_splits(a, frac, width):
    b = a + width
    c = a + frac * width
    comb = generate("comb", 25)
    whole = mass(comb, Interval(a, b, True, False))
    parts = mass(comb, Interval(a, c, True, False)) + mass(comb, Interval(c, b, True, False))
    assert whole == parts
    spike = generate("spike", 25)
    whole = mass(spike, Interval(a, b))
    parts = mass(spike, Interval(a, c)) + mass(spike, Interval(c, b))
    assert whole == pytest.approx(parts, rel=1e-13, abs=1e-300)


def test_masses_of_matches_scalar_mass():
    m = generate("sharpness", 12)
    ivs = [Interval(a, a + 0.7, cl, cr) for a in np.arange(-12, 11, 0.9)
           for cl, cr in ((True, False), (False, True))]
    np.testing.assert_allclose(masses_of(m, ivs), [mass(m, i) for i in ivs], rtol=1e-13, atol=1e-12)


def test_poisson_delta_and_lebesgue():
    d0 = AtomicMeasure([0.0], [1.0], closed(-1, 1))
    assert poisson_functional(d0).total == 1.0
    R = 40.0
    assert poisson_functional(generate("lebesgue", R)).total == pytest.approx(2 * math.atan(R), rel=1e-14)


def test_spike_poisson_matches_quadrature():
    got = poisson_functional(generate("spike", 50)).total
    assert got == pytest.approx(SPIKE_POISSON_50, rel=1e-6)


@pytest.mark.parametrize("name", EXAMPLES)
def test_poisson_matches_quadrature_on_every_generator(name):
    from scipy import integrate
    m = generate(name, 20)
    if isinstance(m, AtomicMeasure):
        x = m.positions + m.offsets
        want = math.fsum(m.masses / (1 + x * x))
    else:
        parts = []
        for l, w, h in zip(m.lefts, m.widths, m.heights):
            v, _ = integrate.quad(lambda t: h / (1 + (l + t) ** 2), 0, w, epsabs=0, epsrel=1e-12)
            parts.append(v)
        want = math.fsum(parts)
    assert poisson_functional(m).total == pytest.approx(want, rel=1e-6)


def test_poisson_partial_sums_nested():
    d = poisson_functional(generate("poisson", 30))
    np.testing.assert_allclose(d.partial_sums, np.cumsum(d.terms))
    assert np.all(d.terms >= 0)


def test_frostman_lebesgue():
    fs = frostman_scan(generate("lebesgue", 10), [1.0, 0.1, 0.01, 0.001])
    assert fs.alpha_hat >= 0.99
    assert fs.c_hat == pytest.approx(2.0, rel=1e-9)
    assert fs.status == "sampled"


def test_frostman_spike_exponent_collapses():
    # spike n carries 1/(1+n^2) on width e^-|n|: at scale e the exponent is about 2/log(1/e)
    m = generate("spike", 200)
    alphas = [frostman_scan(m, [10.0 ** -(k + j) for j in range(5)]).alpha_hat for k in (0, 4, 8)]
    assert alphas[0] > alphas[1] > alphas[2]
    assert alphas[2] <= 0.1


def test_frostman_flags_unresolvable_scales():
    fs = frostman_scan(generate("spike", 200), [1e-14, 1e-16])
    assert any("float resolution" in f for f in fs.flags)


def test_frostman_cantor_dimension():
    m = generate("cantor_periodic", 3)
    fs = frostman_scan(m, [3.0 ** -k for k in range(1, 9)])
    assert fs.alpha_hat == pytest.approx(math.log(2) / math.log(3), abs=0.05)


def test_frostman_empty_flag():
    m = DensityMeasure([], [], [], closed(-1, 1))
    fs = frostman_scan(m, [0.1, 0.01])
    assert fs.alpha_hat is None and fs.flags
    with pytest.raises(ValueError):
        frostman_scan(m, [])


def test_doubling_constants():
    assert doubling_scan(generate("lebesgue", 10), None, [0.5, 1.0]).c_hat == pytest.approx(2.0, rel=1e-12)
    d0 = AtomicMeasure([0.0], [1.0], closed(-1, 1))
    assert doubling_scan(d0, [0.0], [0.1, 0.3]).c_hat == 1.0


def test_doubling_cantor_stable_across_scales():
    m = generate("cantor_periodic", 3)
    c = [doubling_scan(m, None, [3.0 ** -k]).c_hat for k in range(3, 7)]
    assert all(np.isfinite(c))
    assert max(c) <= 1.1 * min(c)


def test_doubling_undefined_flag():
    d0 = AtomicMeasure([0.0], [1.0], closed(-5, 5))
    s = doubling_scan(d0, [3.0], [0.5])
    assert s.c_hat is None and s.flags


def test_ess_sup_profiles():
    assert [v for _, v in ess_sup_profile(generate("lebesgue", 10), [0.5, 3, 9])] == [1.0, 1.0, 1.0]
    spike = generate("spike", 12)
    for n in range(1, 10):
        (_, v), = ess_sup_profile(spike, [n + 0.5])
        assert v == pytest.approx(math.exp(n) / (1 + n * n), rel=1e-15)
    sharp = generate("sharpness", 12)
    for n in range(1, 10):
        (_, v), = ess_sup_profile(sharp, [n + 0.5])
        assert v == pytest.approx(math.exp(n), rel=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0, 30), min_size=2, max_size=20))
def test_ess_sup_nondecreasing(xs):
    xs = sorted(xs)
    vals = [v for _, v in ess_sup_profile(generate("spike", 30), xs)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_generate_comb_and_shifted():
    comb = generate("comb", 3)
    assert comb.positions.tolist() == [-3, -2, -1, 0, 1, 2, 3]
    assert np.all(comb.masses == 1)
    sc = generate("shifted_comb", 2)
    n = np.arange(-2, 2)
    np.testing.assert_array_equal(sc.positions, n + np.exp(-np.abs(n)))


def test_generate_spike_small():
    m = generate("spike", 2)
    n = np.arange(-2, 2)
    np.testing.assert_array_equal(m.lefts, n)
    np.testing.assert_allclose(m.widths, np.exp(-np.abs(n)), rtol=1e-15)
    np.testing.assert_allclose(m.heights, np.exp(np.abs(n)) / (1 + n * n), rtol=1e-15)


def test_spike_narrow_pieces_keep_mass():
    # spikes of width exp(-200) vanish in float64 unless endpoint offsets are kept
    m = generate("spike", 200)
    assert len(m) == 400
    n = m.lefts
    np.testing.assert_allclose(m.piece_masses, 1 / (1 + n * n), rtol=1e-12)


def test_generate_errors():
    with pytest.raises(ValueError):
        generate("nope", 3)
    with pytest.raises(ValueError):
        generate("comb", -1)
    with pytest.raises(ValueError):
        generate("cantor_periodic", 3, depth=0)
    with pytest.raises(ValueError, match="underflow"):
        generate("shifted_comb", 800)


@pytest.mark.parametrize("name", EXAMPLES)
def test_generate_deterministic(name):
    a = art.dumps(art.measure_doc(generate(name, 15)))
    b = art.dumps(art.measure_doc(generate(name, 15)))
    assert a == b


@pytest.mark.parametrize("name", EXAMPLES)
def test_measure_round_trip(name, tmp_path):
    m = generate(name, 15)
    f = tmp_path / "m.json"
    f.write_text(art.dumps(art.measure_doc(m)))
    back = art.measure_from(art.load(str(f), "measure"))
    assert art.dumps(art.measure_doc(back)) == f.read_text()


def test_restrict_remove_add_conserve_mass():
    m = generate("spike", 30)
    ivs = [Interval(k - 0.3, k + 0.3) for k in range(-30, 30, 2)]
    m1, m2 = restrict(m, ivs), remove(m, ivs)
    rng = np.random.default_rng(3)
    for a in rng.uniform(-30, 29, 200):
        i = Interval(a, a + rng.uniform(0, 3))
        assert mass(m1, i) + mass(m2, i) == pytest.approx(mass(m, i), rel=1e-13, abs=1e-300)
    both = add(m1, m2)
    assert both.total_mass() == pytest.approx(m.total_mass(), rel=1e-13)


def test_scaled_measure():
    m = scaled(generate("comb", 4), 3.0)
    assert m.total_mass() == 27.0
    with pytest.raises(ValueError):
        scaled(m, 0.0)
