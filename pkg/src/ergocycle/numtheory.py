"""Continued fractions, exact arithmetic in Q + Q*theta, and rotation counting.

An irrational ``theta`` in (0, 1) is carried as a :class:`Theta`, which knows
its continued-fraction digits.  Elements ``p + q*theta`` with rational ``p, q``
are :class:`QTheta` values; their ordering is decided exactly by bracketing
``theta`` between consecutive convergents.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable, Sequence, Union

import mpmath
import numpy as np

log = logging.getLogger(__name__)

Rational = Union[int, Fraction]

#: Convergents are extended until the bracket on theta is this tight (bits).
WITNESS_BITS = 256
#: Maximum number of convergents used to certify a single sign decision.
MAX_CERT_DEPTH = 4000


class PrecisionError(ArithmeticError):
    """Raised when the available digits of theta cannot certify a result."""


# ---------------------------------------------------------------------------
# Theta
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Convergent:
    r: int
    b: int
    k: int
    m: int

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.k, self.m)


class Theta:
    """An irrational number in (0, 1) given by its continued-fraction digits.

    ``digit(r)`` returns the partial quotient ``b_r`` for ``r >= 1`` and raises
    :class:`PrecisionError` once the digits are no longer trustworthy (numeric
    input).  Periodic digit sequences give quadratic irrationals with an
    unlimited supply of digits.
    """

    def __init__(self, digit: Callable[[int], int], name: str,
                 max_depth: int | None = None, numeric: mpmath.mpf | None = None):
        self._digit = digit
        self.name = name
        self.max_depth = max_depth
        self._numeric = numeric
        self._conv: list[Convergent] = [Convergent(0, 0, 0, 1)]
        # (k_{r-1}, m_{r-1}) for the newest convergent
        self._prev = (1, 0)

    # -- constructors -----------------------------------------------------
    @classmethod
    def periodic(cls, period: Sequence[int], preperiod: Sequence[int] = (),
                 name: str | None = None) -> "Theta":
        period = [int(b) for b in period]
        preperiod = [int(b) for b in preperiod]
        if not period or any(b < 1 for b in period + preperiod):
            raise ValueError("partial quotients must be positive integers")

        def digit(r: int) -> int:
            if r <= len(preperiod):
                return preperiod[r - 1]
            return period[(r - 1 - len(preperiod)) % len(period)]

        if name is None:
            pre = ",".join(map(str, preperiod))
            name = "cf:" + (pre + "|" if pre else "") + ",".join(map(str, period))
        return cls(digit, name)

    @classmethod
    def from_numeric(cls, value: Union[str, float], depth: int = 40) -> "Theta":
        """Digits extracted from a decimal value; only digits stable under the
        input's last-place uncertainty are trusted, and at most ``depth``."""
        text = repr(value) if isinstance(value, float) else str(value).strip()
        mant = text.lower().split("e")[0]
        decimals = len(mant.split(".")[1]) if "." in mant else 0
        exp = int(text.lower().split("e")[1]) if "e" in text.lower() else 0
        with mpmath.workprec(max(WITNESS_BITS, 8 * len(text))):
            x = mpmath.mpf(text)
            ulp = mpmath.mpf(10) ** (exp - decimals) / 2
            lo_digits = _cf_digits(x - ulp, depth + 1)
            hi_digits = _cf_digits(x + ulp, depth + 1)
        if not (0 < x < 1):
            raise ValueError("theta must lie in (0, 1)")
        stable = []
        for a, b in zip(lo_digits, hi_digits):
            if a != b:
                break
            stable.append(a)
        # the last agreeing digit can still be off by the tail; drop it
        stable = stable[:-1]
        avail = min(len(stable), depth)
        if avail < 1:
            raise PrecisionError("value too imprecise to fix any digit")

        def digit(r: int) -> int:
            if r > avail:
                raise PrecisionError(
                    f"digit {r} of theta={text} not determined (only {avail} available)")
            return stable[r - 1]

        return cls(digit, f"num:{text}", max_depth=avail, numeric=x)

    @classmethod
    def parse(cls, spec: Union[str, "Theta"]) -> "Theta":
        """Parse ``sqrt2m1``, ``golden``, ``cf:2,2`` (periodic),
        ``cf:1,3|2`` (preperiod|period) or ``num:0.4142...``."""
        if isinstance(spec, Theta):
            return spec
        s = str(spec).strip()
        if s in NAMED_THETAS:
            return NAMED_THETAS[s]()
        if s.startswith("cf:"):
            body = s[3:]
            if "|" in body:
                pre, per = body.split("|", 1)
                return cls.periodic(_ints(per), _ints(pre), name=s)
            return cls.periodic(_ints(body), name=s)
        if s.startswith("num:"):
            return cls.from_numeric(s[4:])
        try:
            return cls.from_numeric(s)
        except (ValueError, TypeError):
            raise ValueError(f"unrecognised theta spec {spec!r}") from None

    # -- digits and convergents -------------------------------------------
    def digit(self, r: int) -> int:
        if r < 1:
            raise ValueError("digits are indexed from 1")
        return self._digit(r)

    def convergent(self, r: int) -> Convergent:
        while len(self._conv) <= r:
            last = self._conv[-1]
            b = self._digit(last.r + 1)
            k = b * last.k + self._prev[0]
            m = b * last.m + self._prev[1]
            self._prev = (last.k, last.m)
            self._conv.append(Convergent(last.r + 1, b, k, m))
        return self._conv[r]

    def convergents(self, count: int) -> list[Convergent]:
        if count < 1:
            raise ValueError("count must be >= 1")
        self.convergent(count - 1)
        return self._conv[:count]

    def bracket(self, r: int) -> tuple[Fraction, Fraction]:
        """Rationals ``lo < theta < hi`` from convergents ``r`` and ``r+1``."""
        a = self.convergent(r).fraction
        b = self.convergent(r + 1).fraction
        return (a, b) if a < b else (b, a)

    @cached_property
    def witness(self) -> tuple[Fraction, Fraction]:
        """(approximation, error bound) with error below 2**-WITNESS_BITS, or
        the tightest the available digits allow."""
        r = 1
        try:
            while True:
                c, c1 = self.convergent(r), self.convergent(r + 1)
                if c.m * c1.m > 2 ** WITNESS_BITS:
                    break
                r += 1
        except PrecisionError:
            r -= 1
            if r < 1:
                raise
            c, c1 = self.convergent(r), self.convergent(r + 1)
        self._witness_r = r
        return c.fraction, Fraction(1, c.m * c1.m)

    @cached_property
    def value(self) -> float:
        return float(self.witness[0])

    def mp(self) -> mpmath.mpf:
        """High-precision numeric value (256-bit)."""
        approx, err = self.witness
        if self._numeric is not None and err > Fraction(1, 2 ** WITNESS_BITS):
            return self._numeric
        with mpmath.workprec(WITNESS_BITS + 16):
            return mpmath.mpf(approx.numerator) / approx.denominator

    def __float__(self) -> float:
        return self.value

    def __repr__(self) -> str:
        return f"Theta({self.name})"

    # -- exact QTheta helpers -----------------------------------------------
    def q(self, p: Rational = 0, q: Rational = 0) -> "QTheta":
        return QTheta(Fraction(p), Fraction(q), self)

    @property
    def one(self) -> "QTheta":
        return QTheta(Fraction(0), Fraction(1), self)

    def sign(self, p: Fraction, q: Fraction) -> int:
        """Exact sign of ``p + q*theta``."""
        if q == 0:
            return (p > 0) - (p < 0)
        # float fast path with a rigorous rounding-error margin
        try:
            pf, qf = float(p), float(q)
            v = pf + qf * self.value
            if abs(v) > 1e-13 * (1.0 + abs(pf) + abs(qf)) and math.isfinite(v):
                return 1 if v > 0 else -1
        except OverflowError:
            pass
        approx, err = self.witness
        v = p + q * approx
        if abs(v) > abs(q) * err:
            return 1 if v > 0 else -1
        r = self._witness_r + 1
        try:
            while r < MAX_CERT_DEPTH:
                lo, hi = self.bracket(r)
                a, b = p + q * lo, p + q * hi
                if a > 0 and b > 0:
                    return 1
                if a < 0 and b < 0:
                    return -1
                r += 4
        except PrecisionError:
            pass
        with mpmath.workprec(WITNESS_BITS):
            v = mpmath.mpf(p.numerator) / p.denominator + \
                mpmath.mpf(q.numerator) / q.denominator * self.mp()
        log.warning("sign of %s + %s*theta decided by %d-bit numeric witness",
                    p, q, WITNESS_BITS)
        return 1 if v > 0 else -1


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.replace(" ", "").split(",") if t]


def _cf_digits(x: mpmath.mpf, count: int) -> list[int]:
    out = []
    frac = x - mpmath.floor(x)
    for _ in range(count):
        if frac == 0:
            break
        x = 1 / frac
        a = int(mpmath.floor(x))
        out.append(a)
        frac = x - a
    return out


NAMED_THETAS: dict[str, Callable[[], Theta]] = {
    "sqrt2m1": lambda: Theta.periodic([2], name="sqrt2m1"),
    "golden": lambda: Theta.periodic([1], name="golden"),
}


# ---------------------------------------------------------------------------
# QTheta
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QTheta:
    """Exact element ``p + q*theta``; equality is exact on ``(p, q)``."""

    p: Fraction
    q: Fraction
    theta: Theta | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.p, Fraction):
            object.__setattr__(self, "p", Fraction(self.p))
        if not isinstance(self.q, Fraction):
            object.__setattr__(self, "q", Fraction(self.q))

    def _ctx(self, other) -> Theta | None:
        t = self.theta
        if isinstance(other, QTheta) and other.theta is not None:
            if t is not None and t is not other.theta and t.name != other.theta.name:
                raise ValueError("QTheta values over different theta")
            t = t or other.theta
        return t

    def _coerce(self, other) -> "QTheta":
        if isinstance(other, QTheta):
            return other
        if isinstance(other, (int, Fraction)):
            return QTheta(Fraction(other), Fraction(0), self.theta)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return QTheta(self.p + o.p, self.q + o.q, self._ctx(o))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return QTheta(self.p - o.p, self.q - o.q, self._ctx(o))

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return QTheta(-self.p, -self.q, self.theta)

    def __mul__(self, c):
        if isinstance(c, (int, Fraction)):
            return QTheta(self.p * c, self.q * c, self.theta)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, c):
        if isinstance(c, (int, Fraction)):
            return QTheta(self.p / c, self.q / c, self.theta)
        return NotImplemented

    # -- ordering (needs theta) ------------------------------------------------
    def sign(self) -> int:
        if self.q == 0:
            return (self.p > 0) - (self.p < 0)
        if self.theta is None:
            raise ValueError("ordering needs a theta context")
        return self.theta.sign(self.p, self.q)

    def _cmp(self, other) -> int:
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return QTheta(self.p - o.p, self.q - o.q, self._ctx(o)).sign()

    def __lt__(self, other):
        c = self._cmp(other)
        return c if c is NotImplemented else c < 0

    def __le__(self, other):
        c = self._cmp(other)
        return c if c is NotImplemented else c <= 0

    def __gt__(self, other):
        c = self._cmp(other)
        return c if c is NotImplemented else c > 0

    def __ge__(self, other):
        c = self._cmp(other)
        return c if c is NotImplemented else c >= 0

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __float__(self) -> float:
        if self.q == 0:
            return float(self.p)
        return float(self.p + self.q * self.theta.witness[0])

    def mp(self) -> mpmath.mpf:
        v = mpmath.mpf(self.p.numerator) / self.p.denominator
        if self.q:
            v += mpmath.mpf(self.q.numerator) / self.q.denominator * self.theta.mp()
        return v

    def floor(self) -> int:
        if self.q == 0:
            return math.floor(self.p)
        n = math.floor(self.p + self.q * self.theta.witness[0])
        while (self - n).sign() < 0:
            n -= 1
        while (self - (n + 1)).sign() >= 0:
            n += 1
        return n

    def mod1(self) -> "QTheta":
        """Representative in [0, 1)."""
        return self - self.floor()

    def frac_rep(self) -> "QTheta":
        """Representative in (-1/2, 1/2]."""
        return self + (Fraction(1, 2) - self).floor()

    def is_integer(self) -> bool:
        return self.q == 0 and self.p.denominator == 1

    def __repr__(self) -> str:
        return f"QTheta({self.p} + {self.q}*theta)"


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def convergents(theta: Union[Theta, str], count: int) -> list[Convergent]:
    """Convergents ``k_r/m_r`` for ``r = 0 .. count-1``.

    Seeded with ``b_0 = 0`` and ``(k_{-2}, k_{-1}, m_{-2}, m_{-1}) = (0, 1, 1, 0)``.
    """
    return Theta.parse(theta).convergents(count)


def det_identity(theta: Union[Theta, str], r: int) -> int:
    """``k_r m_{r-1} - k_{r-1} m_r``; equals ``(-1)**(r+1)``."""
    th = Theta.parse(theta)
    c = th.convergent(r)
    if r == 0:
        return c.k * 0 - 1 * c.m
    p = th.convergent(r - 1)
    return c.k * p.m - p.k * c.m


def frac_rep(x):
    """Representative of ``x`` mod 1 in (-1/2, 1/2]."""
    if isinstance(x, QTheta):
        return x.frac_rep()
    if isinstance(x, (int, Fraction)):
        return x - math.ceil(Fraction(x) - Fraction(1, 2))
    if isinstance(x, mpmath.mpf):
        return x - mpmath.ceil(x - mpmath.mpf(1) / 2)
    if isinstance(x, np.ndarray):
        return x - np.ceil(x - 0.5)
    return x - math.ceil(x - 0.5)


def select_mi(theta: Union[Theta, str], depth: int) -> list[int]:
    """Greedy choice of ``m_1 < m_2 < ...`` among convergent denominators with
    ``|(m_1 theta)| < 1/3`` and ``|(m_i theta)| < |(m_{i-1} theta)|/3``."""
    return [m for m, _ in select_mi_values(theta, depth)]


def select_mi_values(theta: Union[Theta, str], depth: int) -> list[tuple[int, QTheta]]:
    """As :func:`select_mi`, paired with the exact values ``(m_i theta)``."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    th = Theta.parse(theta)
    out: list[tuple[int, QTheta]] = []
    bound: Fraction | QTheta = Fraction(1, 3)
    last_m = 0
    r = 0
    while len(out) < depth:
        m = th.convergent(r).m
        r += 1
        if m <= last_m:
            continue
        val = (th.one * m).frac_rep()
        mag = abs(val)
        if mag < bound:
            out.append((m, val))
            last_m = m
            bound = mag / 3
    return out


def _circle_mod1(x, theta: Theta):
    if isinstance(x, QTheta):
        return x.mod1()
    if isinstance(x, (int, Fraction)):
        return theta.q(Fraction(x) - math.floor(x))
    return x - math.floor(x)


def rotation_count(theta: Union[Theta, str], x, m: int) -> int:
    """``c'(x, m) = #{0 <= i < m : x - i*theta in [0, theta)}``.

    Exact when ``x`` is a :class:`QTheta` or rational, floating point otherwise.
    """
    th = Theta.parse(theta)
    if m <= 0:
        return 0
    if isinstance(x, (QTheta, int, Fraction)):
        x = x if isinstance(x, QTheta) else th.q(x)
        count = 0
        for i in range(m):
            y = (x - th.one * i).mod1()
            if y < th.one:
                count += 1
        return count
    i = np.arange(m)
    y = np.mod(float(x) - i * th.value, 1.0)
    return int(np.count_nonzero(y < th.value))


def count_level_sets(theta: Union[Theta, str], m: int) -> dict[int, QTheta]:
    """Exact Lebesgue measure of each level set of ``x -> c'(x, m)``.

    ``c'(., m)`` is the sum of ``m`` indicator arcs ``[i*theta, (i+1)*theta)``
    (mod 1).  The arc endpoints are the points ``j*theta mod 1``, ``0 <= j <= m``;
    a sweep over them in exact order gives every level set as a finite union of
    arcs whose lengths are summed in Q + Q*theta.
    """
    th = Theta.parse(theta)
    if m <= 0:
        return {0: th.q(1)}
    pts = [(th.one * j).mod1() for j in range(m + 1)]
    # event at pts[j]: start of arc j (j < m), end of arc j-1 (j >= 1)
    order = sorted(range(1, m + 1), key=lambda j: _SortKey(pts[j]))
    count = rotation_count(th, th.q(0), m)
    levels: dict[int, QTheta] = {}
    prev = th.q(0)
    for j in order:
        if pts[j] == prev:
            raise ArithmeticError("coincident orbit points; theta not irrational?")
        levels[count] = levels.get(count, th.q(0)) + (pts[j] - prev)
        count += (1 if j < m else 0) - 1
        prev = pts[j]
    levels[count] = levels.get(count, th.q(0)) + (th.q(1) - prev)
    return {c: v for c, v in levels.items() if v != th.q(0)}


class _SortKey:
    __slots__ = ("v",)

    def __init__(self, v: QTheta):
        self.v = v

    def __lt__(self, other: "_SortKey") -> bool:
        return self.v < other.v


def count_measure(theta: Union[Theta, str], m: int) -> tuple[QTheta, QTheta]:
    """``(mu{c' = [m theta]}, mu{c' = [m theta] + 1})`` from the exact level sets."""
    th = Theta.parse(theta)
    levels = count_level_sets(th, m)
    base = (th.one * m).floor()
    extra = set(levels) - {base, base + 1}
    if extra:
        raise ArithmeticError(f"c' took unexpected values {sorted(extra)}")
    zero = th.q(0)
    return levels.get(base, zero), levels.get(base + 1, zero)


def count_measure_formula(theta: Union[Theta, str], m: int) -> tuple[QTheta, QTheta]:
    """Closed form ``([m theta] + 1 - m theta, m theta - [m theta])``."""
    th = Theta.parse(theta)
    mt = th.one * m
    fl = mt.floor()
    return th.q(fl + 1) - mt, mt - fl


def random_theta(rng: np.random.Generator, max_digit: int = 6,
                 period: int = 3, below_half: bool = True) -> Theta:
    """Random quadratic irrational with a purely periodic digit pattern."""
    digits = [int(d) for d in rng.integers(1, max_digit + 1, size=period)]
    if below_half and digits[0] < 2:
        digits[0] = 2
    if len(set(digits)) == 1:
        digits = digits[:1]
    return Theta.periodic(digits)


def theta_csv_rows(theta: Union[Theta, str], count: int) -> Iterable[dict]:
    """Rows for the ``convergents`` CSV: r, b_r, k_r, m_r, err, det_identity."""
    th = Theta.parse(theta)
    with mpmath.workprec(WITNESS_BITS):
        tv = th.mp()
        for c in th.convergents(count):
            err = abs(tv - mpmath.mpf(c.k) / c.m)
            yield {
                "r": c.r, "b_r": c.b, "k_r": c.k, "m_r": c.m,
                "err": mpmath.nstr(err, 17, min_fixed=-4, max_fixed=4),
                "det_identity": det_identity(th, c.r),
            }
