from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import unitary_group

from ergocycle.clockshift import ad, adjoint, is_unitary, opnorm
from ergocycle.cocycle import (BetaPower, Cocycle, beta_apply, birkhoff_exact_sup,
                               birkhoff_test, sample_points, standard_observables, tau,
                               trivialization_residuals, trivialize_aperiodic,
                               trivialize_periodic, w_iterate, w_word)
from ergocycle.dynsys import (BernoulliSystem, CircleSystem, MatCylinderFunction,
                              MatStepFunction, count_cd)
from ergocycle.numtheory import Theta

TH = Theta.parse("sqrt2m1")
CIRCLE = CircleSystem(TH)
BERN = BernoulliSystem.fair()


def cocycles(n):
    ph = (np.exp(0.7j), np.exp(-2.1j))
    return [Cocycle.make(CIRCLE, n, ph), Cocycle.make(BERN, n, ph)]


def points(sys, count, seed):
    return sample_points(sys, count, seed)


def test_phases_must_be_unimodular():
    with pytest.raises(ValueError):
        Cocycle.make(CIRCLE, 2, (2.0, 1.0))


def test_w_iterate_examples():
    c = Cocycle.make(CIRCLE, 2)
    assert np.allclose(w_iterate(c, 0.2, 0), np.eye(2))
    u, v = c.pair.u, c.pair.v
    assert np.allclose(w_iterate(c, 0.2, 2), adjoint(u) @ adjoint(v))


@pytest.mark.parametrize("n", [2, 3])
def test_cocycle_identity(n):
    rng = np.random.default_rng(n)
    for c in cocycles(n):
        for x in points(c.system, 30, n):
            j, k = (int(t) for t in rng.integers(-20, 21, size=2))
            lhs = w_iterate(c, x, j + k)
            rhs = w_iterate(c, x, j) @ w_iterate(c, c.system.backward(x, j), k)
            assert opnorm(lhs - rhs) <= 1e-10
            assert is_unitary(lhs)


@pytest.mark.parametrize("n", [2, 3])
def test_word_form_matches_counts(n):
    rng = np.random.default_rng(10 + n)
    for c in cocycles(n):
        for x in points(c.system, 20, n):
            k = int(rng.integers(0, 30))
            phase, a, b = w_word(c, x, k)
            cc, dd = count_cd(c.system, x, k)
            assert (a, b) == (-cc, -dd)
            wk = w_iterate(c, x, k)
            assert opnorm(wk - phase * c.pair.word(a, b)) <= 1e-10
            t = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            assert opnorm(ad(wk, t) - ad(c.pair.word(-cc, -dd), t)) <= 1e-10
            k = -int(rng.integers(1, 30))
            phase, a, b = w_word(c, x, k)
            assert opnorm(w_iterate(c, x, k) - phase * c.pair.word(a, b)) <= 1e-10


def test_beta_scalar_is_translation():
    c = Cocycle.make(CIRCLE, 2, (1j, -1))
    g = MatStepFunction.indicator(TH, 0, Fraction(1, 3), np.eye(2))
    bf = beta_apply(c, g)
    gs = g.shift(1)
    for x in np.linspace(0, 1, 50, endpoint=False):
        assert np.allclose(bf.evaluate(x), gs.evaluate(x))


def test_beta_degenerate_is_identity():
    c = Cocycle.make(CIRCLE, 3, degenerate=True)
    t = np.arange(9).reshape(3, 3) + 0j
    f = MatStepFunction.constant(TH, t)
    assert np.allclose(beta_apply(c, f).evaluate(0.4), t)


def test_beta_on_half_arc_indicator():
    c = Cocycle.make(CIRCLE, 2)
    f = standard_observables(c)["chi_half_E11"]
    bf = beta_apply(c, f)
    # on C the preimage x - theta lands in [1 - theta, 1), outside [0, 1/2)
    for x in (0.0, 0.2, 0.41):
        assert np.allclose(bf.evaluate(x), np.zeros((2, 2)))
    # on D with x - theta in [0, 1/2): v E11 v* = E22
    assert np.allclose(bf.evaluate(0.6), np.diag([0, 1]))


@pytest.mark.parametrize("c", cocycles(2) + cocycles(3), ids=lambda c: type(c.system).__name__)
def test_beta_pointwise_definition(c):
    obs = list(standard_observables(c).values())
    for f in obs:
        bf = beta_apply(c, f, 3)
        for x in points(c.system, 10, 4):
            ref = ad(w_iterate(c, x, 3), f.evaluate(c.system.backward(x, 3)))
            assert opnorm(bf.evaluate(x) - ref) <= 1e-10
            assert opnorm(BetaPower(c, f, 3).evaluate(x) - ref) <= 1e-10


@pytest.mark.parametrize("c", cocycles(2) + cocycles(3), ids=lambda c: type(c.system).__name__)
def test_beta_is_star_homomorphism(c):
    a, b = list(standard_observables(c).values())[:2]
    ba, bb = beta_apply(c, a), beta_apply(c, b)
    prod = beta_apply(c, a @ b)
    star = beta_apply(c, a.adjoint())
    for x in points(c.system, 10, 5):
        assert opnorm(prod.evaluate(x) - ba.evaluate(x) @ bb.evaluate(x)) <= 1e-10
        assert opnorm(star.evaluate(x) - adjoint(ba.evaluate(x))) <= 1e-10
    assert beta_apply(c, a).sup_norm() == pytest.approx(a.sup_norm())


@given(st.integers(0, 2**31), st.integers(1, 4))
@settings(max_examples=30, deadline=None)
def test_beta_preserves_trace_of_integral(seed, power):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 4))
    c = Cocycle.make(CIRCLE, n, tuple(np.exp(2j * np.pi * rng.random(2))))
    lo = TH.q(Fraction(int(rng.integers(0, 9)), 9))
    f = MatStepFunction.indicator(TH, lo, lo + TH.q(Fraction(1, 4)), rng.normal(size=(n, n)))
    assert abs(tau(beta_apply(c, f, power)) - tau(f)) <= 1e-10
    d = BernoulliSystem.fair()
    cb = Cocycle.make(d, n)
    g = MatCylinderFunction(d, 0, rng.normal(size=(4, n, n)))
    assert abs(tau(beta_apply(cb, g, power)) - tau(g)) <= 1e-10


def test_beta_preserves_integral_of_central_observables():
    c = Cocycle.make(CIRCLE, 3, (1j, 1))
    f = MatStepFunction.indicator(TH, Fraction(1, 5), Fraction(4, 5), 2.5 * np.eye(3))
    assert opnorm(beta_apply(c, f, 4).integrate() - f.integrate()) <= 1e-10


def test_full_matrix_integral_is_not_preserved():
    # Ad(v*) moves E11 to E22, so only the trace of the integral survives
    c = Cocycle.make(CIRCLE, 2)
    f = MatStepFunction.constant(TH, np.diag([1, 0]))
    m = beta_apply(c, f).integrate()
    assert abs(np.trace(m) - 1) <= 1e-12
    assert opnorm(m - f.integrate()) > 0.1


def test_birkhoff_identity_has_zero_deviation():
    c = Cocycle.make(CIRCLE, 2)
    f = MatStepFunction.constant(TH, np.eye(2))
    rep = birkhoff_test(c, f, 1000, points(CIRCLE, 3, 0))
    assert rep.deviation == pytest.approx(0, abs=1e-12) and rep.ok


def test_birkhoff_matches_direct_sum():
    for c in cocycles(2):
        for f in standard_observables(c).values():
            for x in points(c.system, 2, 9):
                rep = birkhoff_test(c, f, 300, [x], tol=1.0)
                direct = sum(ad(w_iterate(c, x, j), f.evaluate(c.system.backward(x, j)))
                             for j in range(300)) / 300
                assert rep.per_sample[0] == pytest.approx(
                    opnorm(direct - tau(f) * np.eye(2)), abs=1e-9)


def test_circle_positive_control():
    c = Cocycle.make(CIRCLE, 2)
    f = standard_observables(c)["chi_half_E11"]
    assert tau(f).real == pytest.approx(0.25)
    rep = birkhoff_test(c, f, 10**5, points(CIRCLE, 8, 0))
    assert rep.deviation <= 0.05 and rep.ok


def test_negative_control():
    c = Cocycle.make(CIRCLE, 2, degenerate=True)
    f = standard_observables(c)["one_E11"]
    rep = birkhoff_test(c, f, 10**5, points(CIRCLE, 4, 0))
    assert rep.deviation == pytest.approx(0.5) and not rep.ok


def test_exact_sup_small_n():
    c = Cocycle.make(CIRCLE, 2)
    f = standard_observables(c)["chi_half_E11"]
    sup = birkhoff_exact_sup(c, f, 200)
    sampled = birkhoff_test(c, f, 200, points(CIRCLE, 20, 1), tol=1.0).deviation
    assert sampled <= sup + 1e-12


def test_trivialize_periodic_examples():
    c = Cocycle.make(CIRCLE, 2)
    u = c.pair.u
    zetas, Z, lam = trivialize_periodic([u, u])
    assert np.allclose(Z, np.eye(2))
    assert np.allclose(zetas[1], adjoint(u))
    w0 = unitary_group.rvs(3, random_state=1)
    zetas, Z, lam = trivialize_periodic([w0])
    assert np.allclose(Z, w0) and len(zetas) == 1


@given(st.integers(1, 8), st.integers(1, 4), st.integers(0, 2**31))
@settings(max_examples=60, deadline=None)
def test_trivialize_periodic_property(k, n, seed):
    ws = [unitary_group.rvs(n, random_state=seed + i) if n > 1 else
          np.exp(2j * np.pi * np.array([[(seed + i) * 0.37]])) for i in range(k)]
    zetas, Z, lam = trivialize_periodic(ws)
    for i in range(1, k + 1):
        assert opnorm(zetas[i % k] @ ws[i % k] @ adjoint(zetas[i - 1]) - Z) <= 1e-10
    ang = np.mod(np.angle(lam), 2 * np.pi)
    assert (ang < 2 * np.pi / k + 1e-12).all()
    for l in lam:
        # each normalized lambda is a k-th root of an eigenvalue of Z^k
        ev = np.linalg.eigvals(np.linalg.matrix_power(Z, k))
        assert np.min(np.abs(ev - l ** k)) <= 1e-9


def test_trivialize_aperiodic_examples():
    eye = np.eye(2, dtype=complex)
    z = trivialize_aperiodic({i: eye for i in range(-3, 4)})
    assert all(np.allclose(m, eye) for m in z.values())
    v = Cocycle.make(CIRCLE, 2).pair.v
    ws = {i: eye for i in range(-2, 4)}
    ws[1] = v
    z = trivialize_aperiodic(ws)
    for i in range(1, 4):
        assert np.allclose(z[i], adjoint(v))


def test_trivialize_aperiodic_random():
    ws = {i: unitary_group.rvs(3, random_state=100 + i) for i in range(-5, 6)}
    z = trivialize_aperiodic(ws)
    res = trivialization_residuals(z, ws)
    assert len(res) == 10 and max(res.values()) <= 1e-10


def test_trivialize_rejects_bad_input():
    with pytest.raises(ValueError):
        trivialize_periodic([2 * np.eye(2)])
    with pytest.raises(ValueError):
        trivialize_aperiodic({1: np.eye(2), 2: np.eye(2)})
