"""A Cantor-set chart ``Phi : {0,1}^N -> T`` and the singular continuous,
quasi-invariant measure ``nu`` built on it.

``Phi(x) = sum_i x_i (m_i theta)`` where ``(t)`` is the representative of ``t``
in (-1/2, 1/2] and ``|(m_i theta)| < |(m_{i-1} theta)| / 3``.  The measure is
``nu(A) = sum_k gamma^{1+|k|} nu0(Phi^{-1}(sigma^k A))`` with ``gamma = sqrt 2 - 1``
and ``nu0`` the product measure with ``P(x_i = 0) = a_i``.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import mpmath
import numpy as np

from .numtheory import PrecisionError, QTheta, Theta, select_mi_values

log = logging.getLogger(__name__)

#: extra chart levels used to bound tails beyond the requested depth
TAIL_EXTRA = 30
#: working precision (bits) for certified comparisons
PREC = 320
GAMMA = math.sqrt(2) - 1


def gamma_mp() -> mpmath.mpf:
    return mpmath.sqrt(2) - 1


# ---------------------------------------------------------------------------
# Chart
# ---------------------------------------------------------------------------

class CantorChart:
    """``m_1 < m_2 < ...`` with exact values ``v_i = (m_i theta)`` (1-indexed)."""

    def __init__(self, theta: Union[Theta, str], depth: int = 30):
        if depth < 1:
            raise ValueError("depth must be >= 1")
        self.theta = Theta.parse(theta)
        self.depth = depth
        pairs = select_mi_values(self.theta, depth + TAIL_EXTRA)
        self._m = [m for m, _ in pairs]
        self._v = [v for _, v in pairs]
        with mpmath.workprec(PREC):
            self._vmp = [v.mp() for v in self._v]

    @property
    def m_list(self) -> list[int]:
        return self._m[: self.depth]

    @property
    def values(self) -> list[QTheta]:
        return self._v[: self.depth]

    def v(self, i: int) -> QTheta:
        return self._v[i - 1]

    def vfloat(self) -> np.ndarray:
        return np.array([float(x) for x in self._vmp[: self.depth]])

    def tail(self, n: int) -> tuple[mpmath.mpf, mpmath.mpf, mpmath.mpf]:
        """``(a_n, b_n, err)``: sums of the negative / positive ``v_i`` with ``i > n``,
        computed through the stored levels; the unstored remainder is below ``err``."""
        if not 0 <= n <= self.depth:
            raise ValueError(f"level {n} outside 0..{self.depth}")
        with mpmath.workprec(PREC):
            a = mpmath.fsum(x for x in self._vmp[n:] if x < 0)
            b = mpmath.fsum(x for x in self._vmp[n:] if x > 0)
            # unstored remainder plus the numeric error of each stored value
            err = abs(self._vmp[-1]) / 2 + mpmath.mpf(2) ** -250 * sum(self._m[n:])
        return a, b, err

    def width(self, n: int) -> mpmath.mpf:
        """Upper bound for ``b_n - a_n = sum_{i>n} |v_i|``."""
        a, b, err = self.tail(n)
        with mpmath.workprec(PREC):
            return b - a + err

    def tail_abs(self, n: int) -> mpmath.mpf:
        return self.width(n)

    def check_tail_invariant(self) -> bool:
        """``b_N - a_N < |v_N| / 2`` at every level."""
        with mpmath.workprec(PREC):
            return all(self.width(n) < abs(self._vmp[n - 1]) / 2 for n in range(1, self.depth + 1))

    def summary(self) -> dict:
        a, b, err = self.tail(self.depth)
        return {"theta": self.theta.name, "depth": self.depth,
                "m": [str(m) for m in self.m_list],
                "v": [mpmath.nstr(x, 18) for x in self._vmp[: self.depth]],
                "a_N": mpmath.nstr(a, 18), "b_N": mpmath.nstr(b, 18),
                "tail_err": mpmath.nstr(err, 5)}


def phi_map(chart: CantorChart, bits: Sequence[int], depth: int | None = None):
    """``(sum_{i<=depth} x_i v_i, b_depth - a_depth)``; ``bits[0]`` is ``x_1``."""
    depth = chart.depth if depth is None else depth
    if depth > chart.depth:
        raise ValueError("depth exceeds the chart depth")
    total = chart.theta.q(0)
    for i, x in enumerate(bits[:depth], start=1):
        if x not in (0, 1):
            raise ValueError("bits must be 0 or 1")
        if x:
            total = total + chart.v(i)
    return total, float(chart.width(depth))


def phi_float(chart: CantorChart, bits: np.ndarray) -> np.ndarray:
    """Vectorised float version: ``bits`` has shape (samples, depth)."""
    return np.asarray(bits, dtype=float) @ chart.vfloat()[: bits.shape[1]]


def cover_bound(chart: CantorChart, level: int) -> float:
    """``2^N (b_N - a_N)``, a Lebesgue outer-measure bound for ``Phi(P)``."""
    with mpmath.workprec(PREC):
        return float(mpmath.mpf(2) ** level * chart.width(level))


# ---------------------------------------------------------------------------
# Signed digits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SignedDigits:
    digits: tuple  # lambda_1, lambda_2, ...
    finite: bool   # residual exactly zero
    residual: float

    representable = True

    @property
    def support(self) -> tuple[list[int], list[int]]:
        """1-indexed ``(I_1, I_0)``: positions with digit +1 and -1."""
        i1 = [i for i, d in enumerate(self.digits, 1) if d == 1]
        i0 = [i for i, d in enumerate(self.digits, 1) if d == -1]
        return i1, i0

    def value(self, chart: CantorChart) -> QTheta:
        total = chart.theta.q(0)
        for i, d in enumerate(self.digits, 1):
            if d:
                total = total + chart.v(i) * d
        return total


@dataclass(frozen=True)
class NotRepresentable:
    level: int       # first level at which no digit fits
    residual: float

    representable = False


def _to_mp(x) -> tuple[mpmath.mpf, mpmath.mpf]:
    """Value and uncertainty."""
    if isinstance(x, QTheta):
        return x.mp(), mpmath.mpf(2) ** -250 * (1 + abs(x.q))
    if isinstance(x, (int, Fraction)):
        x = Fraction(x)
        return mpmath.mpf(x.numerator) / x.denominator, mpmath.mpf(0)
    if isinstance(x, mpmath.mpf):
        return x, abs(x) * mpmath.mpf(2) ** (-mpmath.mp.prec + 2) + mpmath.mpf(2) ** -mpmath.mp.prec
    x = float(x)
    return mpmath.mpf(x), mpmath.mpf(2.0 ** -52)


def decode_digits(chart: CantorChart, t, depth: int | None = None):
    """Signed-digit expansion ``t = sum lambda_i v_i`` (mod 1).

    Returns :class:`SignedDigits` (finite when an exact input is reached with
    zero residual, otherwise truncated at ``depth``) or :class:`NotRepresentable`
    when some level certifiably admits no digit.  Raises :class:`PrecisionError`
    when a digit cannot be certified.
    """
    depth = chart.depth if depth is None else depth
    if depth > chart.depth:
        raise ValueError("depth exceeds the chart depth")
    exact = isinstance(t, (QTheta, int, Fraction))
    if exact:
        r = (t if isinstance(t, QTheta) else chart.theta.q(Fraction(t))).frac_rep()
        if r.theta is None:
            r = chart.theta.q(r.p, r.q)
    digits: list[int] = []
    with mpmath.workprec(PREC):
        if exact:
            rmp, unc = _to_mp(r)
        else:
            rmp, unc = _to_mp(t)
            rmp = rmp - mpmath.ceil(rmp - mpmath.mpf(1) / 2)
        for i in range(1, depth + 1):
            if exact and r.sign() == 0:
                return SignedDigits(tuple(digits) + (0,) * (depth - len(digits)), True, 0.0)
            vi = chart._vmp[i - 1]
            tail = chart.width(i)
            fits = []
            for lam in (0, 1, -1):
                dist = abs(rmp - lam * vi)
                if dist + unc < tail:
                    fits.append(lam)
                elif dist - unc <= tail:
                    raise PrecisionError(f"digit {i} cannot be certified "
                                         f"(margin {mpmath.nstr(dist - tail, 5)})")
            if not fits:
                return NotRepresentable(i, float(rmp))
            lam = fits[0]
            digits.append(lam)
            rmp = rmp - lam * vi
            if exact and lam:
                r = r - chart.v(i) * lam
                rmp, unc = _to_mp(r)
        if exact and r.sign() == 0:
            return SignedDigits(tuple(digits), True, 0.0)
        return SignedDigits(tuple(digits), False, float(rmp))


def intersection_test(chart: CantorChart, t) -> str:
    """``'positive-measure'`` iff ``Phi(P) & (Phi(P) + t)`` has positive
    ``nu0``-measure, i.e. ``t`` has a finite signed-digit expansion."""
    if isinstance(t, (int, Fraction)):
        t = chart.theta.q(Fraction(t))
    if isinstance(t, QTheta):
        if t.p.denominator != 1 or t.q.denominator != 1:
            return "null"  # every finite expansion lies in Z theta + Z
        res = decode_digits(chart, t)
        if not res.representable:
            return "null"
        if res.finite:
            return "positive-measure"
        raise PrecisionError("expansion neither terminates nor fails within the chart depth")
    raise TypeError("intersection_test needs an exact point (QTheta or rational)")


def lattice_digits(chart: CantorChart, s: int):
    """Finite digits ``lambda`` with ``sum lambda_i m_i = s`` and
    ``sum lambda_i v_i = (s theta)``, or ``None``."""
    cache = chart.__dict__.setdefault("_lattice_cache", {})
    if s not in cache:
        res = decode_digits(chart, chart.theta.q(0, s))
        if res.representable and res.finite:
            d = res.digits
            while d and d[-1] == 0:
                d = d[:-1]
            cache[s] = d
        elif res.representable:
            raise PrecisionError(f"expansion of {s} theta undetermined at chart depth")
        else:
            cache[s] = None
    return cache[s]


# ---------------------------------------------------------------------------
# Product weights and the measure nu
# ---------------------------------------------------------------------------

class ProductWeights:
    """``a_i = P(x_i = 0)``; either a constant or an explicit list."""

    def __init__(self, a):
        if isinstance(a, (list, tuple)):
            self._list = [_frac(x) for x in a]
            self._const = None
            vals = self._list
        else:
            self._const = _frac(a)
            self._list = None
            vals = [self._const]
        if not vals or any(not 0 < x < 1 for x in vals):
            raise ValueError("weights must lie strictly between 0 and 1")

    @classmethod
    def parse(cls, spec: str) -> "ProductWeights":
        spec = spec.strip()
        if spec.startswith("const:"):
            return cls(spec[6:])
        return cls([x for x in spec.split(",") if x.strip()])

    def a(self, i: int) -> Fraction:
        if self._const is not None:
            return self._const
        if i > len(self._list):
            raise ValueError(f"no weight given for coordinate {i}")
        return self._list[i - 1]

    def array(self, depth: int) -> np.ndarray:
        return np.array([float(self.a(i)) for i in range(1, depth + 1)])

    def describe(self) -> str:
        if self._const is not None:
            return f"const:{self._const}"
        return ",".join(str(x) for x in self._list)


def _frac(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(str(x).strip()) if isinstance(x, str) else Fraction(x)


def rn_factor(weights: ProductWeights, i0, i1) -> Fraction:
    """``c = prod_{I_1} (1 - a_i)/a_i * prod_{I_0} a_i/(1 - a_i)``."""
    i0, i1 = set(i0), set(i1)
    if i0 & i1:
        raise ValueError("index sets must be disjoint")
    c = Fraction(1)
    for i in i1:
        a = weights.a(i)
        c *= (1 - a) / a
    for i in i0:
        a = weights.a(i)
        c *= a / (1 - a)
    return c


def nu_series_tail(K: int) -> float:
    """``sum_{|k|>K} gamma^{1+|k|} = 2 gamma^{K+2} / (1 - gamma)``."""
    return 2 * GAMMA ** (K + 2) / (1 - GAMMA)


def k_for_tail(eps: float) -> int:
    K = 0
    while nu_series_tail(K) >= eps:
        K += 1
    return K


class NuMeasure:
    def __init__(self, chart: CantorChart, weights: ProductWeights, tail_eps: float = 1e-12):
        self.chart = chart
        self.weights = weights
        self.K = k_for_tail(tail_eps)
        self.tail = nu_series_tail(self.K)

    def k_weights(self) -> dict[int, float]:
        return {k: GAMMA ** (1 + abs(k)) for k in range(-self.K, self.K + 1)}

    def piece_mass(self, s: int, cyl: dict) -> Fraction:
        """``nu0(Phi^{-1}(Phi(P) & (Phi(cyl) + s theta)))`` for a cylinder
        ``cyl = {i: bit}`` (1-indexed)."""
        lam = lattice_digits(self.chart, s)
        if lam is None:
            return Fraction(0)
        # x - lambda = x' in cyl; x_i = 1 where lambda_i = 1, x_i = 0 where lambda_i = -1
        need: dict[int, int] = {}
        for i, d in enumerate(lam, 1):
            if d == 1:
                need[i] = 1
                if cyl.get(i, 0) != 0:
                    return Fraction(0)
            elif d == -1:
                need[i] = 0
                if cyl.get(i, 1) != 1:
                    return Fraction(0)
        for i, bit in cyl.items():
            if i not in need:
                need[i] = bit
        mass = Fraction(1)
        for i, bit in need.items():
            a = self.weights.a(i)
            mass *= a if bit == 0 else 1 - a
        return mass

    def measure(self, j: int, cyl: dict) -> tuple[mpmath.mpf, float]:
        """``nu(sigma^j Phi(cyl))`` and the certified truncation error."""
        with mpmath.workdps(50):
            g = gamma_mp()
            total = mpmath.fsum(g ** (1 + abs(k)) * _mpq(self.piece_mass(j + k, cyl))
                                for k in range(-self.K, self.K + 1))
        return total, self.tail

    def sample(self, rng: np.random.Generator, size: int, return_parts: bool = False):
        """Draw ``k`` with probability ``gamma^{1+|k|}`` and bits with
        ``P(x_i = 1) = 1 - a_i``; the point is ``Phi(x) + k theta`` mod 1."""
        depth = self.chart.depth
        ks = sample_k(rng, size)
        a = self.weights.array(depth)
        bits = (rng.random((size, depth)) >= a).astype(np.int8)
        pts = np.mod(phi_float(self.chart, bits) + ks * self.chart.theta.value, 1.0)
        if return_parts:
            return pts, ks, bits
        return pts

    def exact_point(self, k: int, bits) -> QTheta:
        val, _ = phi_map(self.chart, list(bits), len(bits))
        return (val + self.chart.theta.one * k).mod1()


def _mpq(x: Fraction) -> mpmath.mpf:
    return mpmath.mpf(x.numerator) / x.denominator


def sample_k(rng: np.random.Generator, size: int) -> np.ndarray:
    """``P(k) = gamma^{1+|k|}``: zero with probability gamma, otherwise a
    random sign times a geometric(1 - gamma) magnitude."""
    zero = rng.random(size) < GAMMA
    mag = rng.geometric(1 - GAMMA, size)
    sign = np.where(rng.random(size) < 0.5, -1, 1)
    return np.where(zero, 0, sign * mag).astype(np.int64)


def sample_nu(nu: NuMeasure, rng: np.random.Generator, size: int | None = None):
    pts = nu.sample(rng, 1 if size is None else size)
    return float(pts[0]) if size is None else pts


def quasi_invariance_check(nu: NuMeasure, sets, tol: float = 0.0) -> dict:
    """For each ``(j, cyl)`` meaning ``A = sigma^j Phi(cyl)`` check
    ``gamma nu(A) <= nu(sigma A) <= nu(A) / gamma``.

    Both series are summed over the same window of translates, where the
    inequalities hold term by term; the neglected tails are bounded separately.
    Use ``"full"`` for the whole circle.
    """
    rows = []
    ok = True
    with mpmath.workdps(50):
        g = gamma_mp()
        for item in sets:
            if item == "full":
                rows.append({"set": "full", "nu_A": 1.0, "nu_sA": 1.0, "ratio": 1.0, "ok": True})
                continue
            j, cyl = item
            lo, hi = j - nu.K - 1, j + nu.K + 1
            masses = {s: _mpq(nu.piece_mass(s, cyl)) for s in range(lo, hi + 1)}
            nu_a = mpmath.fsum(g ** (1 + abs(s - j)) * w for s, w in masses.items())
            nu_sa = mpmath.fsum(g ** (1 + abs(s - j - 1)) * w for s, w in masses.items())
            term_ok = all(
                g * g ** (1 + abs(s - j)) * w <= g ** (1 + abs(s - j - 1)) * w * (1 + mpmath.mpf(10) ** -40)
                and g ** (1 + abs(s - j - 1)) * w <= g ** (1 + abs(s - j)) * w / g * (1 + mpmath.mpf(10) ** -40)
                for s, w in masses.items())
            tail = 2 * nu.tail
            lower_ok = g * nu_a <= nu_sa + tail + tol
            upper_ok = nu_sa <= nu_a / g + tail / g + tol
            row_ok = bool(term_ok and lower_ok and upper_ok)
            ok &= row_ok
            rows.append({"set": f"sigma^{j} Phi({_cyl_str(cyl)})", "nu_A": float(nu_a),
                         "nu_sA": float(nu_sa), "ratio": float(nu_sa / nu_a) if nu_a else None,
                         "tail": tail, "ok": row_ok})
    return {"ok": ok, "gamma": GAMMA, "rows": rows}


def _cyl_str(cyl: dict) -> str:
    return ",".join(f"x{i}={b}" for i, b in sorted(cyl.items())) or "P"


def random_cylinders(rng: np.random.Generator, count: int, max_index: int = 6,
                     j_range: int = 5) -> list:
    out = []
    for _ in range(count):
        size = int(rng.integers(0, 4))
        idx = rng.choice(np.arange(1, max_index + 1), size=size, replace=False)
        cyl = {int(i): int(rng.integers(0, 2)) for i in idx}
        out.append((int(rng.integers(-j_range, j_range + 1)), cyl))
    return out


# ---------------------------------------------------------------------------
# Radon-Nikodym densities and spectral data
# ---------------------------------------------------------------------------

class _RNModel:
    """Enumerates the finitely many translates meeting a sample point."""

    def __init__(self, nu: NuMeasure, kmax: int):
        self.nu = nu
        ms = nu.chart.m_list
        # digits beyond L only produce offsets larger than any k we care about
        L = 1
        while L < len(ms) and ms[L - 1] - sum(ms[: L - 1]) <= 2 * (nu.K + kmax) + 2:
            L += 1
        self.L = L
        lams = np.array(list(itertools.product((-1, 0, 1), repeat=L)), dtype=np.int64)
        self.lams = lams
        self.offsets = lams @ np.array(ms[:L], dtype=np.int64)
        a = nu.weights.array(L)
        # x_i = 1 -> x'_i = 0 (lambda = +1): ratio a/(1-a); lambda = -1: (1-a)/a
        self.log_ratio_pos = np.log(a / (1 - a))
        self.log_ratio_neg = -self.log_ratio_pos

    def densities(self, bits: np.ndarray, ks: np.ndarray, shifts) -> dict[int, np.ndarray]:
        """``D_{k + shift}(x)`` for each shift, up to a common factor."""
        L = self.L
        b = bits[:, :L].astype(np.int64)
        lam = self.lams
        # compatibility: x_i - lambda_i in {0, 1}
        comp = np.ones((len(b), len(lam)), dtype=bool)
        logc = np.zeros((len(b), len(lam)))
        for i in range(L):
            xi = b[:, i][:, None]
            li = lam[:, i][None, :]
            comp &= (xi - li >= 0) & (xi - li <= 1)
            logc += np.where(li == 1, self.log_ratio_pos[i], 0) + np.where(li == -1, self.log_ratio_neg[i], 0)
        logg = math.log(GAMMA)
        out = {}
        for sh in shifts:
            s = (ks + sh)[:, None] - self.offsets[None, :]
            w = np.where(comp, np.exp(logc + (1 + np.abs(s)) * logg), 0.0)
            out[sh] = w.sum(axis=1)
        return out


def spectral_moment(nu: NuMeasure, k: int, n_samples: int = 20000, rng=None,
                    lebesgue: bool = False) -> complex:
    """Estimate ``<1, V^k 1> = integral (d nu sigma^{-k} / d nu)^{1/2} d nu``.

    ``V xi(x) = xi(sigma^{-1} x) (d nu sigma^{-1} / d nu)(x)^{1/2}``.  The
    estimator ``mean(F) / sqrt(mean(F^2))`` uses ``E[F^2] = 1`` and is bounded
    by 1.  For Lebesgue measure the density is 1 and the moment is exactly 1.
    """
    if k == 0 or lebesgue:
        return 1.0 + 0j
    rng = np.random.default_rng(0) if rng is None else rng
    _, ks, bits = nu.sample(rng, n_samples, return_parts=True)
    model = _RNModel(nu, abs(k))
    # the sampled point is Phi(x) + k0 theta, i.e. the piece with index -k0
    idx = -ks
    dens = model.densities(bits, idx, (0, k))
    f = np.sqrt(dens[k] / dens[0])
    est = f.mean() / math.sqrt((f ** 2).mean())
    return complex(min(1.0, est))


def fourier_coefficient(nu: NuMeasure | None, k: int, n_samples: int = 20000, rng=None) -> complex:
    """``integral e^{2 pi i k y} d nu(y)``; ``nu=None`` means Lebesgue (exact)."""
    if nu is None:
        return 1.0 + 0j if k == 0 else 0j
    rng = np.random.default_rng(0) if rng is None else rng
    pts = nu.sample(rng, n_samples)
    return complex(np.exp(2j * np.pi * k * pts).mean())


# ---------------------------------------------------------------------------
# Structural certificates
# ---------------------------------------------------------------------------

def injectivity_check(chart: CantorChart, level: int) -> dict:
    """The ``2^N`` level-N intervals ``sum_{i in S} v_i + [a_N, b_N]`` are
    pairwise disjoint on the circle.  Centres are exact up to one unit in
    ``2^-PREC`` per term, carried as scaled integers."""
    if level > 20:
        raise ValueError("level must be <= 20")
    if level > chart.depth:
        raise ValueError("level exceeds chart depth")
    scale = 2 ** 256
    with mpmath.workprec(PREC):
        vs = [int(mpmath.nint(x * scale)) for x in chart._vmp[:level]]
        a, b, err = chart.tail(level)
        lo = int(mpmath.floor(a * scale)) - 1
        hi = int(mpmath.ceil((b + err) * scale)) + 1
    centres = [0]
    for v in vs:
        centres = centres + [c + v for c in centres]
    centres.sort()
    slack = level + 2  # rounding of the centres
    width = hi - lo
    gaps = [centres[i + 1] - centres[i] for i in range(len(centres) - 1)]
    gaps.append(centres[0] + scale - centres[-1])  # wrap-around gap
    min_gap = min(gaps)
    ok = min_gap > width + slack
    return {"level": level, "intervals": len(centres), "ok": bool(ok),
            "min_gap": min_gap / scale, "width": width / scale}


def mutual_singularity_experiment(theta, a: float, b: float, depth: int = 24,
                                  n_samples: int = 300, seed: int = 0) -> dict:
    """Sample ``nu_a``, recover the ``Phi``-digits of each exact sample by
    decoding, and track the log-likelihood ratio of ``nu_0a`` against
    ``nu_0b`` over depth.  Returns the mean per-digit slope and its z-score."""
    chart = CantorChart(theta, depth)
    nu = NuMeasure(chart, ProductWeights(a))
    rng = np.random.default_rng(seed)
    _, ks, bits = nu.sample(rng, n_samples, return_parts=True)
    la, lb = math.log(a), math.log(b)
    la1, lb1 = math.log(1 - a), math.log(1 - b)
    slopes = []
    decoded_ok = 0
    depths = np.arange(1, depth + 1)
    for k, x in zip(ks, bits):
        y = nu.exact_point(int(k), x)
        digits = _decode_piece(chart, y, nu.K)
        if digits is None:
            continue
        decoded_ok += 1
        d = np.array(digits, dtype=float)
        llr = np.cumsum(np.where(d == 0, la - lb, la1 - lb1))
        slopes.append(np.polyfit(depths, llr, 1)[0])
    slopes = np.array(slopes)
    mean = float(slopes.mean())
    se = float(slopes.std(ddof=1) / math.sqrt(len(slopes)))
    z = mean / se if se > 0 else math.inf
    return {"a": a, "b": b, "depth": depth, "samples": int(decoded_ok),
            "slope": mean, "stderr": se, "z": z,
            "kl_per_digit": a * (la - lb) + (1 - a) * (la1 - lb1),
            "ok": bool(z > 5)}


def _decode_piece(chart: CantorChart, y: QTheta, K: int):
    """Bits ``x`` with ``y = Phi(x) + k theta`` for the smallest ``|k|`` that works."""
    for k in sorted(range(-K, K + 1), key=lambda t: (abs(t), t)):
        res = decode_digits(chart, y - chart.theta.one * k)
        if res.representable and res.finite and all(d in (0, 1) for d in res.digits):
            return list(res.digits)
    return None


def tail_independence_gap(weights: ProductWeights, n_head: int = 3, tail_start: int = 10,
                          tail_len: int = 10, n_samples: int = 100_000, seed: int = 0) -> dict:
    """Monte-Carlo surrogate for tail triviality of ``nu_0``:
    ``|P(A & C) - P(A) P(C)|`` for ``A = {parity of x_tail = 0}`` and
    ``C = {x_1 = .. = x_head = 1}``."""
    rng = np.random.default_rng(seed)
    depth = tail_start + tail_len
    a = weights.array(depth)
    bits = rng.random((n_samples, depth)) >= a
    A = bits[:, tail_start:].sum(axis=1) % 2 == 0
    C = bits[:, :n_head].all(axis=1)
    gap = abs((A & C).mean() - A.mean() * C.mean())
    return {"gap": float(gap), "stderr": float(math.sqrt(C.mean() / n_samples)),
            "samples": n_samples}
