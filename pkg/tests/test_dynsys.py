import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ergocycle.dynsys import (BernoulliSystem, CircleSystem, Cylinder, MatCylinderFunction,
                              MatStepFunction, count_cd, integrate, mixing_gap, shift_apply,
                              special_cylinder_s, special_pattern)
from ergocycle.numtheory import Theta

TH = Theta.parse("sqrt2m1")
E11 = np.diag([1, 0]).astype(complex)


def test_bernoulli_validation():
    with pytest.raises(ValueError):
        BernoulliSystem((0, 1), ("1/2", "1/2"), {0, 1})
    with pytest.raises(ValueError):
        BernoulliSystem((0, 1), ("1/3", "1/3"), {1})
    with pytest.raises(ValueError):
        BernoulliSystem((0, 1), (1, 0), {1})
    with pytest.raises(ValueError):
        BernoulliSystem((0,), (1,), {0})


def test_seeded_points_are_reproducible():
    sys = BernoulliSystem.fair()
    a, b = sys.point(seed=5), sys.point(seed=5)
    assert [a[i] for i in range(-50, 50)] == [b[i] for i in range(-50, 50)]
    assert list(a.indices(-3, 4097)) == [a.index_at(i) for i in range(-3, 4097)]
    y = sys.backward(a, 7)
    assert all(y[i] == a[i + 7] for i in range(-20, 20))


def test_fixed_coordinates():
    sys = BernoulliSystem.fair()
    x = sys.point(seed=1, fixed={0: 1, 1: 0, 2: 1})
    assert (x[0], x[1], x[2]) == (1, 0, 1)
    assert count_cd(sys, x, 3) == (2, 1)


def test_count_cd_examples():
    circ = CircleSystem(TH)
    assert count_cd(circ, 0.2, 0) == (0, 0)
    assert count_cd(circ, 0.2, 2) == (1, 1)
    assert count_cd(circ, Fraction(1, 5), 2) == (1, 1)
    with pytest.raises(ValueError):
        count_cd(circ, 0.2, -1)


@given(st.floats(0, 1, exclude_max=True), st.integers(0, 300))
@settings(max_examples=100)
def test_count_cd_sums_to_k(x, k):
    c, d = count_cd(CircleSystem(TH), x, k)
    assert c + d == k and c >= 0 and d >= 0
    ref = sum(((x - i * TH.value) % 1.0) < TH.value for i in range(k))
    assert c == ref


def test_shift_zero_and_translation():
    f = MatStepFunction.indicator(TH, 0, TH.one, np.eye(1))
    assert shift_apply(CircleSystem(TH), f, 0) is f
    g = f.shift(1)
    ref = MatStepFunction.indicator(TH, TH.one, TH.one * 2, np.eye(1))
    for x in np.linspace(0, 1, 97, endpoint=False):
        assert np.allclose(g.evaluate(x), ref.evaluate(x))


def test_bernoulli_shift_reindexes():
    sys = BernoulliSystem.fair()
    f = MatCylinderFunction.from_coordinate(sys, 0, {0: E11, 1: np.eye(2)})
    g = f.shift(1)
    assert g.lo == 1 and np.allclose(g.table, f.table)
    x = sys.point(seed=3)
    assert np.allclose(g.evaluate(x), f.evaluate(sys.backward(x, 1)))


def test_integrate_examples():
    circ = CircleSystem(TH)
    one = MatStepFunction.constant(TH, np.eye(2))
    assert np.allclose(integrate(circ, one), np.eye(2))
    chi = MatStepFunction.indicator(TH, 0, TH.one, np.eye(2))
    assert np.allclose(chi.integrate(), TH.value * np.eye(2), atol=1e-15)
    sys = BernoulliSystem.fair()
    f = MatCylinderFunction.indicator(sys, Cylinder.of({0: {0}}), E11)
    assert np.allclose(integrate(sys, f), 0.5 * E11)


def brute_integral(sys, f):
    """Oracle: exact Fraction sum over all words of the window."""
    total = np.zeros(f.shape, dtype=complex)
    w = dict(zip(sys.alphabet, sys.weights))
    for word in itertools.product(sys.alphabet, repeat=f.width):
        pr = math.prod((w[s] for s in word), start=Fraction(1))
        idx = 0
        for s in word:
            idx = idx * sys.size + sys.index(s)
        total += float(pr) * f.table[idx]
    return total


@given(st.integers(0, 2**31), st.integers(-5, 5), st.integers(1, 4))
@settings(max_examples=40, deadline=None)
def test_bernoulli_integral_invariant(seed, k, width):
    sys = BernoulliSystem((0, 1, 2), ("1/2", "1/3", "1/6"), {2})
    rng = np.random.default_rng(seed)
    f = MatCylinderFunction(sys, int(rng.integers(-3, 3)), rng.normal(size=(3 ** width, 2, 2)))
    ref = brute_integral(sys, f)
    assert np.allclose(f.integrate(), ref, atol=1e-12)
    assert np.allclose(f.shift(k).integrate(), ref, atol=1e-12)


@given(st.integers(0, 2**31), st.integers(-40, 40))
@settings(max_examples=40, deadline=None)
def test_circle_integral_invariant(seed, k):
    rng = np.random.default_rng(seed)
    a, b = sorted(rng.integers(-5, 6, size=2).tolist())
    lo = TH.q(Fraction(int(rng.integers(0, 7)), 7), a)
    f = MatStepFunction.indicator(TH, lo, lo + TH.q(Fraction(1, 3)), rng.normal(size=(2, 2)))
    f = f + MatStepFunction.indicator(TH, TH.q(0, b), TH.q(0, b + 1), np.eye(2))
    assert np.allclose(f.shift(k).integrate(), f.integrate(), atol=1e-12)


def test_step_integral_against_quadrature():
    f = MatStepFunction.indicator(TH, TH.q(0, 3), TH.q(Fraction(1, 2), 3), np.eye(1)) \
        @ MatStepFunction.indicator(TH, 0, TH.q(0, 2), 2 * np.eye(1))
    xs = (np.arange(200000) + 0.5) / 200000
    ref = np.mean([f.evaluate(x)[0, 0].real for x in xs[::50]])
    assert float(f.integrate()[0, 0].real) == pytest.approx(ref, abs=2e-3)


def test_integral_positivity():
    rng = np.random.default_rng(0)
    f = MatStepFunction.indicator(TH, 0, TH.one, np.diag(rng.random(3)))
    f = f + MatStepFunction.indicator(TH, TH.one, TH.q(Fraction(2, 3)), np.diag(rng.random(3)))
    assert (np.diag(f.integrate()).real >= 0).all()


def test_product_breakpoints_within_union():
    f = MatStepFunction.indicator(TH, 0, TH.one, np.eye(1))
    g = MatStepFunction.indicator(TH, TH.q(Fraction(1, 4)), TH.q(Fraction(3, 4)), np.eye(1))
    h = f @ g
    assert set(h.breaks) <= set(f.breaks) | set(g.breaks)


def test_independent_windows_factorize():
    sys = BernoulliSystem((0, 1), ("1/3", "2/3"), {1})
    f = MatCylinderFunction.from_coordinate(sys, 0, {0: [[2.0]], 1: [[5.0]]})
    g = MatCylinderFunction.from_coordinate(sys, 3, {0: [[-1.0]], 1: [[7.0]]})
    assert (f @ g).integrate()[0, 0] == pytest.approx(f.integrate()[0, 0] * g.integrate()[0, 0])


def test_mixing_gap_examples():
    sys = BernoulliSystem.fair()
    a = Cylinder.of({0: {0}})
    b = Cylinder.of({0: {1}})
    assert mixing_gap(sys, a, b, 1) == 0
    assert mixing_gap(sys, a, b, 0) == Fraction(1, 4)
    assert mixing_gap(sys, a, a, 0) == Fraction(1, 4)


@given(st.integers(0, 2**31), st.integers(-8, 8))
@settings(max_examples=60)
def test_mixing_gap_disjoint_windows(seed, k):
    sys = BernoulliSystem((0, 1, 2), ("1/5", "1/5", "3/5"), {0})
    rng = np.random.default_rng(seed)
    def rand_cyl():
        idx = rng.choice(np.arange(-2, 3), size=int(rng.integers(1, 4)), replace=False)
        return Cylinder.of({int(i): {int(s) for s in rng.choice(3, size=2, replace=False)}
                            for i in idx})
    a, b = rand_cyl(), rand_cyl()
    la, ha = a.window
    lb, hb = b.shift(k).window
    if ha <= lb or hb <= la:
        assert mixing_gap(sys, a, b, k) == 0


def test_cylinder_contains():
    sys = BernoulliSystem.fair()
    x = sys.point(seed=2, fixed={0: 1, 2: 0})
    assert Cylinder.of({0: {1}, 2: {0}}).contains(x)
    assert not Cylinder.of({0: {0}}).contains(x)


def test_special_pattern_n2():
    sys = BernoulliSystem.fair()
    cert = special_cylinder_s(2, sys)
    assert cert["pattern"] == [1, 1, 0, 1]
    assert cert["exhausted"] and cert["pairs_seen"] == 4
    assert cert["k_max_needed"] == 4


def brute_pairs(pattern, n):
    """Oracle: first k at which each residue pair of (c, d) appears."""
    seen = {}
    for k in range(len(pattern) + 1):
        c = sum(pattern[:k])
        seen.setdefault((c % n, (k - c) % n), k)
    return seen


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_special_cylinder_certificate(n):
    sys = BernoulliSystem.fair(3, c1=(1, 2))
    cert = special_cylinder_s(n, sys)
    assert cert["pairs_seen"] == n * n
    ref = brute_pairs(special_pattern(n), n)
    assert len(ref) == n * n
    assert cert["k_max_needed"] == max(ref.values())
    x = sys.point(seed=0, fixed={i: s for i, s in enumerate(cert["pattern"])})
    assert cert["cylinder"].contains(x)
    got = {(c % n, d % n) for c, d in (count_cd(sys, x, k) for k in range(n * n + 1))}
    assert len(got) == n * n
