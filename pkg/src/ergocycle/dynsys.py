"""Bernoulli shifts and irrational rotations with computable matrix observables.

Observables are matrix-valued functions that are exactly representable:

* :class:`MatCylinderFunction` on ``Lambda^Z`` depends on finitely many
  coordinates and stores a table indexed by the window word.
* :class:`MatStepFunction` on the circle is constant on finitely many arcs whose
  endpoints are exact :class:`~ergocycle.numtheory.QTheta` values.

Both carry values of shape ``(rows, cols)`` so the same classes hold vectors.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from .clockshift import opnorm
from .numtheory import QTheta, Theta

#: largest table (number of window words) a cylinder function may hold
TABLE_BUDGET = 2 ** 20
#: largest number of arcs a step function may hold
BREAKPOINT_BUDGET = 200_000
_BLOCK = 4096


class BudgetExceeded(RuntimeError):
    """The exact representation would exceed its size budget."""


class DomainError(ValueError):
    """A point does not carry the coordinates an operation needs."""


# ---------------------------------------------------------------------------
# Systems
# ---------------------------------------------------------------------------

def _as_weight(w) -> Union[Fraction, float]:
    if isinstance(w, (Fraction, int)):
        return Fraction(w)
    if isinstance(w, str):
        return Fraction(w)
    return float(w)


@dataclass(frozen=True, eq=False)
class BernoulliSystem:
    """Full shift on ``alphabet^Z`` with product measure and ``C = {x_0 in c1}``."""

    alphabet: tuple
    weights: tuple
    c1: frozenset

    def __post_init__(self):
        alphabet = tuple(self.alphabet)
        weights = tuple(_as_weight(w) for w in self.weights)
        c1 = frozenset(self.c1)
        if len(alphabet) < 2 or len(set(alphabet)) != len(alphabet):
            raise ValueError("alphabet needs at least two distinct symbols")
        if len(weights) != len(alphabet) or any(w <= 0 for w in weights):
            raise ValueError("weights must be strictly positive, one per symbol")
        if abs(float(sum(weights)) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")
        if not c1 or not c1 < set(alphabet):
            raise ValueError("c1 must be a non-empty proper subset of the alphabet")
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "c1", c1)

    @classmethod
    def fair(cls, size: int = 2, c1=(1,)) -> "BernoulliSystem":
        return cls(tuple(range(size)), tuple(Fraction(1, size) for _ in range(size)), frozenset(c1))

    @property
    def size(self) -> int:
        return len(self.alphabet)

    def index(self, symbol) -> int:
        return self.alphabet.index(symbol)

    @property
    def c1_mask(self) -> np.ndarray:
        return np.array([s in self.c1 for s in self.alphabet])

    @property
    def probs(self) -> np.ndarray:
        return np.array([float(w) for w in self.weights])

    def point(self, seed: int | None = None, fixed: dict | None = None) -> "SeqPoint":
        return SeqPoint(self, seed, {} if fixed is None else dict(fixed))

    def backward(self, x: "SeqPoint", k: int) -> "SeqPoint":
        """``sigma^{-k} x``, i.e. coordinates ``x_{i+k}``."""
        return x.shifted(k)

    def in_c(self, x: "SeqPoint") -> bool:
        return x[0] in self.c1

    def describe(self) -> dict:
        return {"kind": "bernoulli", "alphabet": list(self.alphabet),
                "weights": [str(w) for w in self.weights], "c1": sorted(self.c1)}


@dataclass(frozen=True, eq=False)
class CircleSystem:
    """Rotation ``x -> x + theta`` on R/Z with Lebesgue measure and ``C = [0, theta)``."""

    theta: Theta

    def __post_init__(self):
        object.__setattr__(self, "theta", Theta.parse(self.theta))

    def backward(self, x, k: int):
        """``sigma^{-k} x = x - k theta``."""
        if isinstance(x, (QTheta, int, Fraction)):
            x = x if isinstance(x, QTheta) else self.theta.q(x)
            return (x - self.theta.one * k).mod1()
        return (x - k * self.theta.value) % 1.0

    def in_c(self, x) -> bool:
        if isinstance(x, QTheta):
            return x.mod1() < self.theta.one
        return (x % 1.0) < self.theta.value

    def describe(self) -> dict:
        return {"kind": "circle", "theta": self.theta.name}


System = Union[BernoulliSystem, CircleSystem]


class SeqPoint:
    """A point of ``Lambda^Z``: explicitly fixed coordinates plus (optionally) a
    seeded random extension.  Coordinate ``i`` of the extension depends only on
    ``(seed, i)``, so points are reproducible regardless of access order."""

    def __init__(self, system: BernoulliSystem, seed: int | None, fixed: dict, offset: int = 0):
        self.system = system
        self.seed = seed
        self.fixed = fixed
        self.offset = offset
        self._blocks: dict[int, np.ndarray] = {} if offset == 0 else None

    def shifted(self, k: int) -> "SeqPoint":
        p = SeqPoint(self.system, self.seed, self.fixed, self.offset + k)
        p._blocks = self._root_blocks()
        return p

    def _root_blocks(self) -> dict:
        if self._blocks is None:
            self._blocks = {}
        return self._blocks

    def _block(self, b: int) -> np.ndarray:
        blocks = self._root_blocks()
        if b not in blocks:
            rng = np.random.default_rng([self.seed, b + 2 ** 40])
            blocks[b] = rng.choice(self.system.size, size=_BLOCK, p=self.system.probs)
        return blocks[b]

    def index_at(self, i: int) -> int:
        j = i + self.offset
        if j in self.fixed:
            return self.system.index(self.fixed[j])
        if self.seed is None:
            raise DomainError(f"coordinate {j} is not specified")
        b, r = divmod(j, _BLOCK)
        return int(self._block(b)[r])

    def __getitem__(self, i: int):
        return self.system.alphabet[self.index_at(i)]

    def indices(self, lo: int, hi: int) -> np.ndarray:
        """Symbol indices of coordinates ``lo .. hi-1``."""
        if hi <= lo:
            return np.zeros(0, dtype=np.int64)
        if self.seed is None:
            return np.array([self.index_at(i) for i in range(lo, hi)], dtype=np.int64)
        a, b = lo + self.offset, hi + self.offset
        parts = [self._block(blk) for blk in range(a // _BLOCK, (b - 1) // _BLOCK + 1)]
        arr = np.concatenate(parts)[a - (a // _BLOCK) * _BLOCK:][: b - a].astype(np.int64)
        for j, sym in self.fixed.items():
            if a <= j < b:
                arr[j - a] = self.system.index(sym)
        return arr

    def __repr__(self) -> str:
        return f"SeqPoint(seed={self.seed}, offset={self.offset}, fixed={len(self.fixed)})"


# ---------------------------------------------------------------------------
# Cylinder sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Cylinder:
    """``{x : x_i in allowed_i for each constrained i}``."""

    constraints: tuple  # sorted tuple of (index, frozenset)

    @classmethod
    def of(cls, spec: dict) -> "Cylinder":
        return cls(tuple(sorted((int(i), frozenset(s)) for i, s in spec.items())))

    def as_dict(self) -> dict:
        return dict(self.constraints)

    def shift(self, k: int) -> "Cylinder":
        """``sigma^k(B)``: constraint on coordinate ``i`` moves to ``i + k``."""
        return Cylinder(tuple((i + k, s) for i, s in self.constraints))

    def intersect(self, other: "Cylinder") -> "Cylinder":
        d = self.as_dict()
        for i, s in other.constraints:
            d[i] = d[i] & s if i in d else s
        return Cylinder.of(d)

    def measure(self, system: BernoulliSystem):
        total = Fraction(1) if all(isinstance(w, Fraction) for w in system.weights) else 1.0
        for _, allowed in self.constraints:
            total *= sum((w for s, w in zip(system.alphabet, system.weights) if s in allowed),
                         Fraction(0) if isinstance(total, Fraction) else 0.0)
        return total

    def contains(self, x: SeqPoint) -> bool:
        return all(x[i] in s for i, s in self.constraints)

    @property
    def window(self) -> tuple[int, int]:
        if not self.constraints:
            return (0, 0)
        return (self.constraints[0][0], self.constraints[-1][0] + 1)


def mixing_gap(system: BernoulliSystem, a: Cylinder, b: Cylinder, k: int):
    """``|mu(A & sigma^k B) - mu(A) mu(B)|``, exact for rational weights."""
    joint = a.intersect(b.shift(k)).measure(system)
    return abs(joint - a.measure(system) * b.measure(system))


# ---------------------------------------------------------------------------
# Observables on the shift
# ---------------------------------------------------------------------------

class MatCylinderFunction:
    """Matrix function of the coordinates ``x_lo .. x_{hi-1}``.

    ``table[w]`` is the value on the word with mixed-radix index ``w``
    (most significant digit = coordinate ``lo``).
    """

    def __init__(self, system: BernoulliSystem, lo: int, table: np.ndarray):
        table = np.asarray(table, dtype=complex)
        if table.ndim == 2:
            table = table[None]
        width = round(math.log(table.shape[0], system.size)) if table.shape[0] > 1 else 0
        if system.size ** width != table.shape[0]:
            raise ValueError("table length must be a power of the alphabet size")
        self.system = system
        self.lo = lo
        self.width = width
        self.table = table

    @property
    def hi(self) -> int:
        return self.lo + self.width

    @property
    def shape(self) -> tuple[int, int]:
        return self.table.shape[1:]

    @classmethod
    def constant(cls, system: BernoulliSystem, mat) -> "MatCylinderFunction":
        return cls(system, 0, np.asarray(mat, dtype=complex)[None])

    @classmethod
    def from_coordinate(cls, system: BernoulliSystem, i: int, values: dict,
                        default=None) -> "MatCylinderFunction":
        """Function of ``x_i`` alone: ``values[symbol]`` (``default`` elsewhere)."""
        mats = []
        for s in system.alphabet:
            m = values.get(s, default)
            if m is None:
                raise ValueError(f"no value for symbol {s!r}")
            mats.append(np.asarray(m, dtype=complex))
        return cls(system, i, np.stack(mats))

    @classmethod
    def indicator(cls, system: BernoulliSystem, cyl: Cylinder, mat) -> "MatCylinderFunction":
        mat = np.asarray(mat, dtype=complex)
        lo, hi = cyl.window
        if hi - lo == 0:
            return cls.constant(system, mat)
        words = _all_words(system.size, hi - lo)
        allowed = np.ones(len(words), dtype=bool)
        for i, s in cyl.constraints:
            mask = np.array([sym in s for sym in system.alphabet])
            allowed &= mask[words[:, i - lo]]
        table = np.where(allowed[:, None, None], mat[None], 0)
        return cls(system, lo, table)

    def word_index(self, x: SeqPoint) -> int:
        idx = 0
        for c in x.indices(self.lo, self.hi):
            idx = idx * self.system.size + int(c)
        return idx

    def evaluate(self, x: SeqPoint) -> np.ndarray:
        return self.table[self.word_index(x)]

    def shift(self, k: int) -> "MatCylinderFunction":
        """``f o sigma^{-k}``: the window moves from ``lo`` to ``lo + k``."""
        return MatCylinderFunction(self.system, self.lo + k, self.table)

    def expand(self, lo: int, hi: int) -> np.ndarray:
        if lo > self.lo or hi < self.hi:
            raise ValueError("target window must contain the function's window")
        A = self.system.size
        if A ** (hi - lo) > TABLE_BUDGET:
            raise BudgetExceeded(f"window of width {hi - lo} exceeds table budget")
        shape = (1,) * (self.lo - lo) + (A,) * self.width + (1,) * (hi - self.hi) + self.shape
        full = (A,) * (hi - lo) + self.shape
        return np.broadcast_to(self.table.reshape(shape), full).reshape((A ** (hi - lo),) + self.shape)

    def _binary(self, other, op) -> "MatCylinderFunction":
        if not isinstance(other, MatCylinderFunction):
            return NotImplemented
        lo, hi = min(self.lo, other.lo), max(self.hi, other.hi)
        if self.width == 0:
            lo, hi = other.lo, other.hi
        elif other.width == 0:
            lo, hi = self.lo, self.hi
        return MatCylinderFunction(self.system, lo, op(self.expand(lo, hi), other.expand(lo, hi)))

    def __matmul__(self, other):
        return self._binary(other, lambda a, b: a @ b)

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __mul__(self, c):
        return MatCylinderFunction(self.system, self.lo, self.table * c)

    __rmul__ = __mul__

    def adjoint(self) -> "MatCylinderFunction":
        return MatCylinderFunction(self.system, self.lo, np.conj(np.swapaxes(self.table, 1, 2)))

    def word_probs(self) -> np.ndarray:
        p = np.ones(1)
        for _ in range(self.width):
            p = np.outer(p, self.system.probs).ravel()
        return p

    def integrate(self) -> np.ndarray:
        return np.tensordot(self.word_probs(), self.table, axes=1)

    def sup_norm(self) -> float:
        return max(opnorm(m) for m in self.table)

    def __repr__(self) -> str:
        return f"MatCylinderFunction(window=[{self.lo},{self.hi}), shape={self.shape})"


def _all_words(size: int, width: int) -> np.ndarray:
    if width == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.indices((size,) * width).reshape(width, -1).T
    return grids.astype(np.int64)


# ---------------------------------------------------------------------------
# Observables on the circle
# ---------------------------------------------------------------------------

class MatStepFunction:
    """Matrix function on R/Z constant on arcs ``[breaks[i], breaks[i+1])``.

    ``breaks`` are distinct points of [0, 1) in increasing order; the last arc
    wraps to ``breaks[0] + 1``.  With no breakpoints the function is constant.
    """

    def __init__(self, theta: Theta, breaks: Sequence[QTheta], values: np.ndarray):
        values = np.asarray(values, dtype=complex)
        if values.ndim == 2:
            values = values[None]
        breaks = tuple(breaks)
        if len(breaks) != max(1, len(breaks)) and not (len(breaks) == 0 and len(values) == 1):
            raise ValueError("need one value per arc")
        if len(breaks) and len(values) != len(breaks):
            raise ValueError("need one value per arc")
        if len(breaks) > BREAKPOINT_BUDGET:
            raise BudgetExceeded(f"{len(breaks)} breakpoints exceed the budget")
        self.theta = theta
        self.breaks = breaks
        self.values = values
        self._fbreaks = np.array([float(b) for b in breaks])

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape[1:]

    @classmethod
    def constant(cls, theta: Theta, mat) -> "MatStepFunction":
        return cls(theta, (), np.asarray(mat, dtype=complex)[None])

    @classmethod
    def indicator(cls, theta: Theta, a, b, mat) -> "MatStepFunction":
        """``chi_[a, b) (x) mat`` for an arc ``[a, b)`` taken mod 1 (``a != b``)."""
        mat = np.asarray(mat, dtype=complex)
        a = _q(theta, a)
        b = _q(theta, b)
        length = b - a
        if length.sign() <= 0 or (length - 1).sign() > 0:
            raise ValueError("arc needs 0 < b - a <= 1")
        zero = np.zeros_like(mat)
        if length == theta.q(1):
            return cls.constant(theta, mat)
        a0, b0 = a.mod1(), b.mod1()
        if a0 < b0:
            return cls(theta, (a0, b0), np.stack([mat, zero]))
        return cls(theta, (b0, a0), np.stack([zero, mat]))

    def arc_index(self, x) -> int:
        if not self.breaks:
            return 0
        if isinstance(x, (QTheta, int, Fraction)):
            x = _q(self.theta, x).mod1()
            i = bisect.bisect_right(_KeyList(self.breaks), x) - 1
        else:
            i = int(np.searchsorted(self._fbreaks, x % 1.0, side="right")) - 1
        return i % len(self.breaks)

    def arc_indices(self, xs: np.ndarray) -> np.ndarray:
        """Vectorised :meth:`arc_index` for float points."""
        if not self.breaks:
            return np.zeros(len(xs), dtype=np.int64)
        i = np.searchsorted(self._fbreaks, np.mod(xs, 1.0), side="right") - 1
        return np.mod(i, len(self.breaks))

    def evaluate(self, x) -> np.ndarray:
        return self.values[self.arc_index(x)]

    def shift(self, k: int) -> "MatStepFunction":
        """``f o sigma^{-k}``: every breakpoint moves by ``+k theta``."""
        if not self.breaks or k == 0:
            return self
        t = (self.theta.one * k).mod1()
        cut = 1 - t
        # points >= 1 - t wrap around; rotation preserves the cyclic order
        idx = bisect.bisect_left(_KeyList(self.breaks), cut)
        moved = [b + t - 1 for b in self.breaks[idx:]] + [b + t for b in self.breaks[:idx]]
        values = np.concatenate([self.values[idx:], self.values[:idx]])
        return MatStepFunction(self.theta, moved, values)

    def _binary(self, other, op) -> "MatStepFunction":
        if not isinstance(other, MatStepFunction):
            return NotImplemented
        breaks, ia, ib = _merge_breaks(self.breaks, other.breaks)
        values = op(self.values[ia], other.values[ib])
        return MatStepFunction(self.theta, breaks, values).simplify()

    def __matmul__(self, other):
        return self._binary(other, lambda a, b: a @ b)

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __mul__(self, c):
        return MatStepFunction(self.theta, self.breaks, self.values * c)

    __rmul__ = __mul__

    def adjoint(self) -> "MatStepFunction":
        return MatStepFunction(self.theta, self.breaks, np.conj(np.swapaxes(self.values, 1, 2)))

    def simplify(self, atol: float = 0.0) -> "MatStepFunction":
        """Drop breakpoints between arcs carrying equal values."""
        k = len(self.breaks)
        if k <= 1:
            return self if k == 0 else MatStepFunction.constant(self.theta, self.values[0])
        prev = np.roll(self.values, 1, axis=0)
        diff = np.abs(self.values - prev).reshape(k, -1).max(axis=1)
        keep = diff > atol
        if keep.all():
            return self
        if not keep.any():
            return MatStepFunction.constant(self.theta, self.values[0])
        idx = np.flatnonzero(keep)
        return MatStepFunction(self.theta, [self.breaks[i] for i in idx], self.values[idx])

    def arc_lengths(self) -> list[QTheta]:
        if not self.breaks:
            return [self.theta.q(1)]
        b = self.breaks
        out = [b[i + 1] - b[i] for i in range(len(b) - 1)]
        out.append(b[0] + 1 - b[-1])
        return out

    def midpoints(self) -> list[QTheta]:
        if not self.breaks:
            return [self.theta.q(Fraction(1, 2))]
        return [(b + length / 2).mod1() for b, length in zip(self.breaks, self.arc_lengths())]

    def integrate(self) -> np.ndarray:
        lengths = np.array([float(x) for x in self.arc_lengths()])
        return np.tensordot(lengths, self.values, axes=1)

    def sup_norm(self) -> float:
        return max(opnorm(m) for m in self.values)

    def l2_norm(self) -> float:
        """``(integral of |f(x)|_HS^2 dx)^{1/2}`` (Frobenius norm pointwise)."""
        lengths = np.array([float(x) for x in self.arc_lengths()])
        sq = (np.abs(self.values) ** 2).reshape(len(self.values), -1).sum(axis=1)
        return float(np.sqrt(lengths @ sq))

    def __repr__(self) -> str:
        return f"MatStepFunction(arcs={max(1, len(self.breaks))}, shape={self.shape})"


class _KeyList:
    """Sequence view so :mod:`bisect` can compare QTheta values."""

    __slots__ = ("seq",)

    def __init__(self, seq):
        self.seq = seq

    def __len__(self):
        return len(self.seq)

    def __getitem__(self, i):
        return self.seq[i]


def _q(theta: Theta, x) -> QTheta:
    if isinstance(x, QTheta):
        return x if x.theta is not None else theta.q(x.p, x.q)
    return theta.q(Fraction(x))


def _merge_breaks(a: Sequence[QTheta], b: Sequence[QTheta]):
    """Union of two sorted breakpoint lists and, for each merged arc, the arc
    index in ``a`` and in ``b`` that contains it."""
    out: list[QTheta] = []
    src: list[tuple[int, int]] = []  # (#a-breaks <= point) - 1, same for b
    i = j = 0
    while i < len(a) or j < len(b):
        if j >= len(b) or (i < len(a) and a[i] < b[j]):
            pt = a[i]
            i += 1
        elif i >= len(a) or b[j] < a[i]:
            pt = b[j]
            j += 1
        else:
            pt = a[i]
            i += 1
            j += 1
        out.append(pt)
        src.append((i - 1, j - 1))
    if not out:
        return (), np.zeros(1, dtype=np.int64), np.zeros(1, dtype=np.int64)
    ia = np.array([s[0] for s in src]) % max(1, len(a))
    ib = np.array([s[1] for s in src]) % max(1, len(b))
    if not a:
        ia[:] = 0
    if not b:
        ib[:] = 0
    return out, ia, ib


Observable = Union[MatCylinderFunction, MatStepFunction]


# ---------------------------------------------------------------------------
# Module-level operations
# ---------------------------------------------------------------------------

def shift_apply(system: System, f, k: int):
    """``f o sigma^{-k}``."""
    return f.shift(k)


def integrate(system: System, f) -> np.ndarray:
    return f.integrate()


def count_cd(system: System, x, k: int) -> tuple[int, int]:
    """``c = #{0 <= i < k : sigma^{-i} x in C}`` and ``d = k - c``."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return 0, 0
    if isinstance(system, BernoulliSystem):
        c = int(np.count_nonzero(system.c1_mask[x.indices(0, k)]))
    elif isinstance(x, (QTheta, int, Fraction)):
        c = sum(system.in_c(system.backward(x, i)) for i in range(k))
    else:
        ys = np.mod(float(x) - np.arange(k) * system.theta.value, 1.0)
        c = int(np.count_nonzero(ys < system.theta.value))
    return c, k - c


def special_pattern(n: int) -> list[bool]:
    """Membership pattern (``x_i in C_1``?) of the cylinder ``S`` on ``x_0 .. x_{n^2-1}``."""
    if n < 2:
        raise ValueError("n must be >= 2")
    return [True] * n + ([False] + [True] * (n - 1)) * (n - 1)


def special_cylinder_s(n: int, system: BernoulliSystem) -> dict:
    """The cylinder ``S`` plus a certificate listing when the residue pairs
    ``(c(x,k) mod n, d(x,k) mod n)`` exhaust ``Z/n x Z/n`` for ``x`` in ``S``."""
    pattern = special_pattern(n)
    inside = system.c1
    outside = frozenset(system.alphabet) - system.c1
    cyl = Cylinder.of({i: (inside if b else outside) for i, b in enumerate(pattern)})
    rep_in = sorted(inside, key=system.alphabet.index)[0]
    rep_out = sorted(outside, key=system.alphabet.index)[0]
    seen: dict[tuple[int, int], int] = {}
    c = 0
    k_needed = None
    for k in range(len(pattern) + 1):
        pair = (c % n, (k - c) % n)
        seen.setdefault(pair, k)
        if len(seen) == n * n:
            k_needed = k
            break
        if k < len(pattern):
            c += pattern[k]
    return {
        "n": n,
        "cylinder": cyl,
        "pattern": [rep_in if b else rep_out for b in pattern],
        "first_k": {f"{p[0]},{p[1]}": k for p, k in sorted(seen.items())},
        "pairs_seen": len(seen),
        "exhausted": k_needed is not None,
        "k_max_needed": k_needed,
        "within_k_lt_n2": k_needed is not None and k_needed <= n * n - 1,
    }
