"""Norm lower bounds for elements of ``l^1(Z, C(X))`` acting through the
covariant representation ``pi(a delta_k) = (a (x) 1) W_k (V^k (x) 1)``.

Only measure-preserving bases are wired in, so ``V xi = xi o sigma^{-1}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .cocycle import Cocycle
from .dynsys import CircleSystem, MatCylinderFunction, MatStepFunction
from .numtheory import Theta


@dataclass
class L1Element:
    """Finite sum ``S = sum_k a_k delta_k`` with scalar observables ``a_k``."""

    coeffs: dict = field(default_factory=dict)

    @property
    def support(self) -> list[int]:
        return sorted(self.coeffs)


def l1_norm(s: L1Element) -> float:
    return float(sum(a.sup_norm() for a in s.coeffs.values()))


def _lift(a, n: int):
    """Scalar function ``a`` as ``a (x) 1_n``."""
    eye = np.eye(n, dtype=complex)
    if isinstance(a, MatStepFunction):
        return MatStepFunction(a.theta, a.breaks, a.values[:, :1, :1] * eye)
    return MatCylinderFunction(a.system, a.lo, a.table[:, :1, :1] * eye)


def w_power_observable(c: Cocycle, k: int):
    """``W_k`` as an exact observable (``W_0 = 1``)."""
    w = c.as_observable()
    one = w @ w.adjoint()
    out = one
    if k > 0:
        for _ in range(k):
            out = w @ out.shift(1)
    elif k < 0:
        # W_k(x) = W(sigma x)* W_{k+1}(sigma x)
        for _ in range(-k):
            out = (w.adjoint() @ out).shift(-1)
    return out


def apply_rep(s: L1Element, c: Cocycle, phi):
    """``pi(S) phi = sum_k (a_k (x) 1) W_k (phi o sigma^{-k})`` for a vector
    observable ``phi`` with values of shape (n, 1)."""
    out = None
    for k, a in sorted(s.coeffs.items()):
        term = _lift(a, c.n) @ w_power_observable(c, k) @ phi.shift(k)
        out = term if out is None else out + term
    if out is None:
        return phi * 0
    return out


def l2_norm(phi) -> float:
    """``(integral |phi(x)|^2 d mu)^{1/2}``."""
    if isinstance(phi, MatStepFunction):
        return phi.l2_norm()
    sq = (np.abs(phi.table) ** 2).reshape(len(phi.table), -1).sum(axis=1)
    return float(np.sqrt(phi.word_probs() @ sq))


def constant_vector(system, eta):
    eta = np.asarray(eta, dtype=complex).reshape(-1, 1)
    if isinstance(system, CircleSystem):
        return MatStepFunction.constant(system.theta, eta)
    return MatCylinderFunction.constant(system, eta)


def indicator(system, a_set, mat):
    """``chi_A (x) mat`` for an arc ``(a, b)`` on the circle or a cylinder."""
    if isinstance(system, CircleSystem):
        lo, hi = a_set
        return MatStepFunction.indicator(system.theta, lo, hi, mat)
    return MatCylinderFunction.indicator(system, a_set, mat)


def set_measure(system, a_set) -> float:
    f = indicator(system, a_set, np.ones((1, 1)))
    return float(f.integrate()[0, 0].real)


def lower_bound_check(s: L1Element, c: Cocycle, a_set, eta, tol: float = 1e-8) -> dict:
    """Check ``1 <= sum_k |a_k| mu(sigma^{-k} A)^{1/2} <= |S|_1 sup_k mu(sigma^k A)^{1/2}``
    for an ``S`` with ``pi(S)(1 (x) eta) = chi_A / mu(A)^{1/2} (x) eta``."""
    sys = c.system
    eta = np.asarray(eta, dtype=complex).reshape(-1, 1)
    if abs(np.linalg.norm(eta) - 1) > 1e-12:
        raise ValueError("eta must be a unit vector")
    chi = indicator(sys, a_set, np.ones((1, 1)))
    mu_a = float(chi.integrate()[0, 0].real)
    if mu_a <= 0:
        return {"applicable": False, "reason": "mu(A) = 0"}
    target = _lift(chi, c.n) @ constant_vector(sys, eta) * (1 / math.sqrt(mu_a))
    image = apply_rep(s, c, constant_vector(sys, eta))
    residual = l2_norm(image - target)
    if residual > tol:
        return {"applicable": False, "reason": "pi(S)(1 (x) eta) does not hit the target",
                "residual": residual}
    norm1 = l1_norm(s)
    mid = 0.0
    sup_mu = 0.0
    for k, a in s.coeffs.items():
        mu_back = float(chi.shift(k).integrate()[0, 0].real)   # mu(sigma^{-k} A)
        mu_fwd = float(chi.shift(-k).integrate()[0, 0].real)   # mu(sigma^{k} A)
        mid += a.sup_norm() * math.sqrt(mu_back)
        sup_mu = max(sup_mu, mu_fwd, mu_back)
    upper = norm1 * math.sqrt(sup_mu)
    bound = 1 / math.sqrt(sup_mu)
    slack = 1e-12
    return {"applicable": True, "residual": residual, "mu_A": mu_a,
            "l1_norm": norm1, "middle": mid, "upper": upper,
            "sup_mu": sup_mu, "bound": bound,
            "ok": bool(1 - slack <= mid <= upper + slack and norm1 >= bound - slack)}


def interval_instance(theta, eps: Fraction, rng: np.random.Generator,
                      support: int = 3, n: int = 1, phases=None, positive: bool = False):
    """A random ``(S, cocycle, A, eta)`` with ``pi(S)(1 (x) eta) = chi_A/eps^{1/2} (x) eta``.

    For ``n = 1`` the cocycle is the phase cocycle and ``a_k`` absorbs the
    conjugate of ``W_k``; for ``n > 1`` the degenerate cocycle is used.
    With ``positive`` the weights ``t_k`` are non-negative and ``|S|_1`` equals
    ``eps^{-1/2}`` exactly.
    """
    th = Theta.parse(theta)
    sys = CircleSystem(th)
    eps = Fraction(eps)
    if n == 1:
        if phases is None:
            phases = tuple(np.exp(2j * np.pi * rng.random(2)))
        c = Cocycle.make(sys, 1, phases)
    else:
        c = Cocycle.make(sys, n, degenerate=True)
    x0 = Fraction(int(rng.integers(0, 1000)), 1000)
    a_set = (th.q(x0), th.q(x0 + eps))
    ks = sorted(rng.choice(np.arange(-6, 7), size=support, replace=False).tolist())
    if positive:
        t = rng.dirichlet(np.ones(support)).astype(complex)
    else:
        t = rng.normal(size=support) + 1j * rng.normal(size=support)
        t = t - (t.sum() - 1) / support  # sum t_k = 1
    chi = indicator(sys, a_set, np.ones((1, 1))) * (1 / math.sqrt(eps))
    coeffs = {}
    for k, tk in zip(ks, t):
        wk = w_power_observable(c, int(k))
        conj = wk.adjoint() if n == 1 else MatStepFunction.constant(th, np.ones((1, 1)))
        coeffs[int(k)] = (chi @ conj) * tk
    eta = np.zeros(n, dtype=complex)
    eta[0] = 1
    if n > 1:
        v = rng.normal(size=n) + 1j * rng.normal(size=n)
        eta = v / np.linalg.norm(v)
    return L1Element(coeffs), c, a_set, eta


def interval_demo(theta, eps, count: int = 20, seed: int = 0, support: int = 3) -> dict:
    rng = np.random.default_rng([seed, int(Fraction(eps).denominator)])
    rows = []
    for i in range(count):
        s, c, a_set, eta = interval_instance(theta, eps, rng, support=support,
                                             n=int(rng.integers(1, 3)), positive=i % 2 == 0)
        rows.append(lower_bound_check(s, c, a_set, eta))
    bound = 1 / math.sqrt(float(Fraction(eps)))
    return {"mode": "interval", "eps": str(Fraction(eps)), "bound": bound,
            "instances": len(rows),
            "min_l1_norm": min(r["l1_norm"] for r in rows),
            "ok": all(r.get("applicable") and r["ok"] and r["bound"] >= bound - 1e-9 for r in rows)}


def harmonic(k: int) -> Fraction:
    return sum((Fraction(1, j) for j in range(1, k + 1)), Fraction(0))


def atomic_obstruction(k_max: int) -> dict:
    """Shift model on ``l^2(Z)``: ``pi(a delta_k) xi_j = a(j + k) xi_{j+k}``.

    Reaching ``sum_{k<=K} xi_k / k`` from ``xi_0`` forces ``a_k(k) = 1/k`` on
    coordinate ``k``, so ``|S|_1 >= H_K``; the constant choice ``a_k = 1/k``
    attains it.
    """
    if k_max < 1:
        raise ValueError("K must be >= 1")
    forced = {k: Fraction(1, k) for k in range(1, k_max + 1)}
    image = {k: forced[k] for k in forced}  # pi(S) xi_0 with a_k = 1/k
    target = {k: Fraction(1, k) for k in range(1, k_max + 1)}
    h = harmonic(k_max)
    return {"mode": "atomic", "K": k_max, "bound": h, "bound_float": float(h),
            "attained": image == target and sum(forced.values()) == h,
            "forcing": {str(k): str(v) for k, v in forced.items()} if k_max <= 10 else None,
            "log_lower": math.log(k_max + 1)}


def contractivity_check(s: L1Element, c: Cocycle, phi) -> tuple[float, float]:
    """``(|pi(S) phi|_2, |S|_1 |phi|_2)``."""
    return l2_norm(apply_rep(s, c, phi)), l1_norm(s) * l2_norm(phi)
