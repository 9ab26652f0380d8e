import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ergocycle.cocycle import Cocycle, w_iterate
from ergocycle.dynsys import BernoulliSystem, CircleSystem, Cylinder, MatStepFunction
from ergocycle.l1gap import (L1Element, apply_rep, atomic_obstruction, constant_vector,
                             contractivity_check, harmonic, indicator, interval_demo,
                             interval_instance, l1_norm, l2_norm, lower_bound_check,
                             w_power_observable)
from ergocycle.numtheory import Theta

TH = Theta.parse("sqrt2m1")
CIRCLE = CircleSystem(TH)


def scalar(value):
    return MatStepFunction.constant(TH, np.array([[value]]))


def test_l1_norm_examples():
    assert l1_norm(L1Element({0: scalar(1)})) == 1
    s = L1Element({k: scalar(1 / k) for k in (1, 2, 3)})
    assert l1_norm(s) == pytest.approx(11 / 6)
    chi = MatStepFunction.indicator(TH, 0, TH.one, np.eye(1))
    assert l1_norm(L1Element({0: chi})) == 1


def test_apply_rep_examples():
    c = Cocycle.make(CIRCLE, 2, degenerate=True)
    eta = np.array([0.6, 0.8])
    xi = MatStepFunction.indicator(TH, 0, Fraction(1, 3), eta.reshape(2, 1))
    assert l2_norm(apply_rep(L1Element({0: scalar(1)}), c, xi) - xi) == 0
    out = apply_rep(L1Element({1: scalar(1)}), c, xi)
    assert l2_norm(out - xi.shift(1)) == 0
    f = MatStepFunction.indicator(TH, TH.one, Fraction(3, 4), np.eye(1)) * 2
    one = constant_vector(CIRCLE, eta)
    out = apply_rep(L1Element({0: f}), c, one)
    ref = MatStepFunction.indicator(TH, TH.one, Fraction(3, 4), 2 * eta.reshape(2, 1))
    assert l2_norm(out - ref) <= 1e-14


@pytest.mark.parametrize("k", [-4, -1, 0, 1, 3])
def test_w_power_observable_matches_pointwise(k):
    c = Cocycle.make(CIRCLE, 3, (np.exp(1j), np.exp(-0.4j)))
    wk = w_power_observable(c, k)
    for x in np.random.default_rng(k + 10).random(40):
        assert np.allclose(wk.evaluate(x), w_iterate(c, x, k))


def test_apply_rep_pointwise_oracle():
    # oracle: sum_k a_k(x) W_k(x) phi(sigma^{-k} x) evaluated point by point
    rng = np.random.default_rng(0)
    c = Cocycle.make(CIRCLE, 2, (1j, np.exp(0.3j)))
    s = L1Element({k: MatStepFunction.indicator(TH, Fraction(1, 5), Fraction(7, 8), np.eye(1))
                   * complex(rng.normal()) for k in (-2, 0, 1, 3)})
    phi = MatStepFunction.indicator(TH, 0, Fraction(1, 2), rng.normal(size=(2, 1)))
    out = apply_rep(s, c, phi)
    for x in rng.random(50):
        ref = sum(a.evaluate(x)[0, 0] * w_iterate(c, x, k) @ phi.evaluate(CIRCLE.backward(x, k))
                  for k, a in s.coeffs.items())
        assert np.allclose(out.evaluate(x), ref)


@given(st.integers(0, 2**31))
@settings(max_examples=30, deadline=None)
def test_apply_rep_linear_and_contractive(seed):
    rng = np.random.default_rng(seed)
    c = Cocycle.make(CIRCLE, 2, tuple(np.exp(2j * np.pi * rng.random(2))))
    def rand_s():
        lo = Fraction(int(rng.integers(0, 5)), 5)
        return L1Element({int(k): MatStepFunction.indicator(
            TH, lo, lo + Fraction(int(rng.integers(1, 10)), 10), np.eye(1))
            * complex(rng.normal(), rng.normal())
            for k in rng.choice(np.arange(-4, 5), size=2, replace=False)})
    s, t = rand_s(), rand_s()
    phi = MatStepFunction.indicator(TH, TH.q(0, 2), TH.q(Fraction(1, 2), 2), rng.normal(size=(2, 1)))
    psi = constant_vector(CIRCLE, rng.normal(size=2))
    lhs = apply_rep(s, c, phi + psi * 2)
    rhs = apply_rep(s, c, phi) + apply_rep(s, c, psi) * 2
    assert l2_norm(lhs - rhs) <= 1e-10
    both = L1Element(dict(s.coeffs))
    for k, a in t.coeffs.items():
        both.coeffs[k] = both.coeffs[k] + a if k in both.coeffs else a
    assert l2_norm(apply_rep(both, c, phi) - apply_rep(s, c, phi) - apply_rep(t, c, phi)) <= 1e-10
    got, bound = contractivity_check(s, c, phi)
    assert got <= bound + 1e-12


def test_lower_bound_whole_space():
    c = Cocycle.make(CIRCLE, 1)
    rep = lower_bound_check(L1Element({0: scalar(1)}), c, (0, 1), [1.0])
    assert rep["applicable"] and rep["ok"]
    assert rep["bound"] == pytest.approx(1) and rep["l1_norm"] == 1


def test_lower_bound_not_applicable():
    c = Cocycle.make(CIRCLE, 1)
    rep = lower_bound_check(L1Element({0: scalar(1)}), c, (0, Fraction(1, 2)), [1.0])
    assert not rep["applicable"]
    with pytest.raises(ValueError):
        lower_bound_check(L1Element({0: scalar(1)}), c, (0, 1), [2.0])


def test_lower_bound_on_bernoulli_cylinder():
    sys = BernoulliSystem.fair()
    c = Cocycle.make(sys, 2, degenerate=True)
    cyl = Cylinder.of({0: {1}, 1: {0}})
    chi = indicator(sys, cyl, np.eye(1))
    s = L1Element({0: chi * 2})  # mu(A) = 1/4
    rep = lower_bound_check(s, c, cyl, [1.0, 0.0])
    assert rep["applicable"] and rep["ok"]
    assert rep["bound"] == pytest.approx(2) and rep["l1_norm"] == pytest.approx(2)


@pytest.mark.parametrize("eps", [Fraction(1, 4), Fraction(1, 16), Fraction(1, 64)])
def test_interval_instances(eps):
    rng = np.random.default_rng(int(eps.denominator))
    for i in range(12):
        s, c, a_set, eta = interval_instance(TH, eps, rng, n=1 + i % 2, positive=i % 3 == 0)
        rep = lower_bound_check(s, c, a_set, eta)
        assert rep["applicable"] and rep["ok"]
        assert rep["sup_mu"] == pytest.approx(float(eps), abs=1e-12)
        assert rep["l1_norm"] >= 1 / math.sqrt(eps) - 1e-9
        if i % 3 == 0:
            assert rep["l1_norm"] == pytest.approx(1 / math.sqrt(eps))


def test_interval_demo_monotone():
    bounds = [interval_demo(TH, e, count=6)["bound"] for e in ("1/4", "1/16", "1/64")]
    assert bounds == [2, 4, 8]
    rep = interval_demo(TH, "1/16", count=6)
    assert rep["ok"] and rep["min_l1_norm"] == pytest.approx(4)


def test_harmonic_numbers():
    assert harmonic(1) == 1
    assert harmonic(3) == Fraction(11, 6)
    assert float(harmonic(50)) == pytest.approx(4.499205338329425, abs=1e-15)


@pytest.mark.parametrize("K", [1, 3, 50])
def test_atomic_obstruction(K):
    rep = atomic_obstruction(K)
    ref = sum(Fraction(1, k) for k in range(1, K + 1))
    assert rep["bound"] == ref and rep["attained"]
    assert rep["bound_float"] >= rep["log_lower"]
    with pytest.raises(ValueError):
        atomic_obstruction(0)
