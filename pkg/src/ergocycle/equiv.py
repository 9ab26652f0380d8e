"""Exact unitary-equivalence deciders for the phase-twisted cocycles.

Phases ``e^{2 pi i r}`` carry exponents ``r = p + q theta`` with rational
``p, q``.  Decisions treat ``1, theta, theta^2`` as linearly independent over Q.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .clockshift import MAT_TOL, adjoint, make_clock_pair, opnorm


class UndecidableInModel(ValueError):
    """The answer would depend on an algebraic relation satisfied by theta."""


@dataclass(frozen=True)
class PhaseExp:
    """Exponent ``r = p + q theta`` of the phase ``e^{2 pi i r}``."""

    p: Fraction = Fraction(0)
    q: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "p", Fraction(self.p))
        object.__setattr__(self, "q", Fraction(self.q))

    @classmethod
    def parse(cls, obj) -> "PhaseExp":
        if isinstance(obj, PhaseExp):
            return obj
        if isinstance(obj, dict):
            unknown = set(obj) - {"p", "q"}
            if unknown:
                raise ValueError(f"unknown phase fields {sorted(unknown)}")
            return cls(Fraction(str(obj.get("p", 0))), Fraction(str(obj.get("q", 0))))
        return cls(Fraction(str(obj)))

    def __add__(self, other):
        return PhaseExp(self.p + other.p, self.q + other.q)

    def __sub__(self, other):
        return PhaseExp(self.p - other.p, self.q - other.q)

    def __mul__(self, c):
        return PhaseExp(self.p * c, self.q * c)

    __rmul__ = __mul__

    def is_integer(self) -> bool:
        return self.q == 0 and self.p.denominator == 1

    def same_phase(self, other: "PhaseExp") -> bool:
        return (self - other).is_integer()

    def value(self, theta: float) -> complex:
        return complex(np.exp(2j * np.pi * (float(self.p) + float(self.q) * theta)))

    def to_json(self) -> dict:
        return {"p": str(self.p), "q": str(self.q)}


@dataclass(frozen=True)
class Verdict:
    answer: str          # "yes" | "no"
    witness: dict | None = None

    @property
    def yes(self) -> bool:
        return self.answer == "yes"

    def to_json(self) -> dict:
        out = {"answer": self.answer}
        if self.witness is not None:
            out["witness"] = self.witness
        return out


def _int(x: Fraction) -> bool:
    return x.denominator == 1


def decide_equiv0(eta) -> Verdict:
    """``e^{2 pi i eta} = e^{2 pi i m theta}`` for an integer ``m``?"""
    eta = PhaseExp.parse(eta)
    if _int(eta.q) and _int(eta.p):
        m = int(eta.q)
        assert (eta - PhaseExp(0, m)).is_integer()
        return Verdict("yes", {"m": m})
    return Verdict("no")


def decide_bernoulli_phases(l1, l2, l1p, l2p, n: int) -> Verdict:
    """``l1^n = l1'^n`` and ``l2^n = l2'^n``; the witness ``(k, l)`` gives
    ``l1 = w^k l1'`` and ``l2 = w^l l2'``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    d1 = PhaseExp.parse(l1) - PhaseExp.parse(l1p)
    d2 = PhaseExp.parse(l2) - PhaseExp.parse(l2p)
    if not ((d1 * n).is_integer() and (d2 * n).is_integer()):
        return Verdict("no")
    k, l = int(d1.p * n) % n, int(d2.p * n) % n
    assert (d1 - PhaseExp(Fraction(k, n))).is_integer()
    assert (d2 - PhaseExp(Fraction(l, n))).is_integer()
    return Verdict("yes", {"k": k, "l": l})


def bernoulli_conjugator(n: int, k: int, l: int, tol: float = MAT_TOL) -> np.ndarray:
    """A constant unitary ``z`` with ``z (l1' u*) z* = w^k l1' u*`` and
    ``z (l2' v*) z* = w^l l2' v*`` (searched among ``u^a v^b``)."""
    pair = make_clock_pair(n)
    w = pair.omega
    us, vs = adjoint(pair.u), adjoint(pair.v)
    for a in range(n):
        for b in range(n):
            z = pair.word(a, b)
            if opnorm(z @ us @ adjoint(z) - w ** k * us) <= tol and \
                    opnorm(z @ vs @ adjoint(z) - w ** l * vs) <= tol:
                return z
    raise ArithmeticError("no conjugating word found")


def decide_bernoulli_w(c1, c1p, n: int, alphabet) -> Verdict:
    """``W`` and ``W'`` built on ``C_1 != C_1'``: equivalent iff ``n = 2`` and
    ``C_1' = Lambda \\ C_1``."""
    alphabet = frozenset(alphabet)
    c1, c1p = frozenset(c1), frozenset(c1p)
    for name, s in (("c1", c1), ("c1p", c1p)):
        if not s or not s < alphabet:
            raise ValueError(f"{name} must be a non-empty proper subset of the alphabet")
    if c1 == c1p:
        raise ValueError("the subsets must differ")
    if n == 2 and c1p == alphabet - c1:
        return Verdict("yes", {"zeta": "u<->v swap"})
    return Verdict("no")


def decide_rotation_phases(l1, l2, l1p, l2p, n: int,
                           assume_transcendental: bool = False) -> Verdict:
    """Is there a real ``a`` with ``eta_1 = a(theta - 1)`` and ``eta_2 = a theta``
    mod Z, where ``eta_i = n (r_i - r_i')``?

    ``a`` must equal ``eta_2 - eta_1`` mod Z.  If that difference has a non-zero
    theta coefficient, the second equation involves ``theta^2``; the answer then
    depends on whether theta is quadratic, and :class:`UndecidableInModel` is
    raised unless ``assume_transcendental`` is set (which answers "no").
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    eta1 = (PhaseExp.parse(l1) - PhaseExp.parse(l1p)) * n
    eta2 = (PhaseExp.parse(l2) - PhaseExp.parse(l2p)) * n
    delta = eta2 - eta1
    if delta.q != 0:
        if assume_transcendental:
            return Verdict("no", {"model": "theta transcendental"})
        raise UndecidableInModel(
            "eta_2 - eta_1 has a theta component; the decision needs theta^2 in Q + Q theta")
    # a = delta.p + m with (delta.p + m) theta = eta2 (mod Z)
    if not _int(eta2.p):
        return Verdict("no")
    m = eta2.q - delta.p
    if not _int(m):
        return Verdict("no")
    a = delta.p + m
    # re-substitute: a(theta - 1) = eta1 and a theta = eta2 (mod Z)
    assert (PhaseExp(-a, a) - eta1).is_integer()
    assert (PhaseExp(0, a) - eta2).is_integer()
    return Verdict("yes", {"a": str(a)})


def check_rotation_witness(l1, l2, l1p, l2p, n: int, a) -> bool:
    eta1 = (PhaseExp.parse(l1) - PhaseExp.parse(l1p)) * n
    eta2 = (PhaseExp.parse(l2) - PhaseExp.parse(l2p)) * n
    a = Fraction(str(a))
    return (PhaseExp(-a, a) - eta1).is_integer() and (PhaseExp(0, a) - eta2).is_integer()


def rational_grid(count: int = 100, max_den: int = 12) -> list[Fraction]:
    """``count`` distinct rationals in [-2, 2) with denominators up to ``max_den``,
    evenly spread over the sorted candidates."""
    vals = sorted({Fraction(k, d) for d in range(1, max_den + 1) for k in range(-2 * d, 2 * d)})
    if count >= len(vals):
        return vals
    idx = np.linspace(0, len(vals) - 1, count).round().astype(int)
    return [vals[i] for i in idx]
