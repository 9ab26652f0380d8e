"""The unitary cocycle ``W``, its iterates, the automorphism ``beta`` and
Birkhoff-average ergodicity tests."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .clockshift import (MAT_TOL, ClockPair, ad, adjoint, is_unitary, make_clock_pair,
                         matrix_kth_root, opnorm)
from .dynsys import (BREAKPOINT_BUDGET, BernoulliSystem, BudgetExceeded, CircleSystem,
                     MatCylinderFunction, MatStepFunction, count_cd)

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Cocycle:
    """``W = chi_C (x) l1 u* + chi_D (x) l2 v*``; ``degenerate`` gives ``W = 1``."""

    system: object
    pair: ClockPair
    phases: tuple = (1.0, 1.0)
    degenerate: bool = False

    def __post_init__(self):
        l1, l2 = (complex(p) for p in self.phases)
        if abs(abs(l1) - 1) > MAT_TOL or abs(abs(l2) - 1) > MAT_TOL:
            raise ValueError("phases must have modulus 1")
        object.__setattr__(self, "phases", (l1, l2))

    @classmethod
    def make(cls, system, n: int, phases=(1.0, 1.0), degenerate: bool = False) -> "Cocycle":
        return cls(system, make_clock_pair(n), phases, degenerate)

    @property
    def n(self) -> int:
        return self.pair.n

    def letters(self):
        """The two fibre unitaries (value on C, value on D)."""
        if self.degenerate:
            return self.pair.identity, self.pair.identity
        l1, l2 = self.phases
        return l1 * adjoint(self.pair.u), l2 * adjoint(self.pair.v)

    def w(self, x) -> np.ndarray:
        on_c, on_d = self.letters()
        return on_c if self.system.in_c(x) else on_d

    def as_observable(self):
        on_c, on_d = self.letters()
        if isinstance(self.system, CircleSystem):
            th = self.system.theta
            return MatStepFunction(th, (th.q(0), th.one), np.stack([on_c, on_d]))
        sys = self.system
        return MatCylinderFunction.from_coordinate(
            sys, 0, {s: (on_c if s in sys.c1 else on_d) for s in sys.alphabet})


def w_iterate(c: Cocycle, x, k: int) -> np.ndarray:
    """``W_k(x)``: ``W(x) W(s^-1 x) ... W(s^-(k-1) x)`` for ``k > 0`` and
    ``W(s x)* W(s^2 x)* ... W(s^|k| x)*`` for ``k < 0``."""
    sys = c.system
    out = c.pair.identity
    if k >= 0:
        for i in range(k):
            out = out @ c.w(sys.backward(x, i))
    else:
        for i in range(1, -k + 1):
            out = out @ adjoint(c.w(sys.backward(x, -i)))
    return out


def w_word(c: Cocycle, x, k: int) -> tuple[complex, int, int]:
    """``W_k(x) = phase * u^a v^b``; for ``k >= 0`` this is
    ``(a, b) = (-c, -d)`` with ``(c, d) = count_cd(x, k)``."""
    if c.degenerate:
        return 1.0 + 0j, 0, 0
    l1, l2 = c.phases
    w = c.pair.omega
    sys = c.system
    phase = 1.0 + 0j
    a = b = 0
    if k >= 0:
        # letters u^-1 / v^-1; v^-b u^-1 = w^b u^-1 v^-b
        for i in range(k):
            if sys.in_c(sys.backward(x, i)):
                phase *= l1 * w ** b
                a += 1
            else:
                phase *= l2
                b += 1
        return phase, -a, -b
    for i in range(1, -k + 1):
        # letters u / v; v^b u = w^b u v^b
        if sys.in_c(sys.backward(x, -i)):
            phase *= np.conj(l1) * w ** b
            a += 1
        else:
            phase *= np.conj(l2)
            b += 1
    return phase, a, b


class BetaPower:
    """Lazy ``beta^j(f)``: evaluated pointwise as ``Ad(W_j(x)) f(s^-j x)``."""

    def __init__(self, c: Cocycle, f, j: int):
        self.c, self.f, self.j = c, f, j

    def evaluate(self, x) -> np.ndarray:
        c = self.c
        y = c.system.backward(x, self.j)
        if c.degenerate:
            return self.f.evaluate(y)
        cnt, d = count_cd(c.system, x, self.j) if self.j >= 0 else _neg_counts(c, x, self.j)
        return ad(c.pair.word(-cnt, -d), self.f.evaluate(y))


def _neg_counts(c: Cocycle, x, k: int) -> tuple[int, int]:
    _, a, b = w_word(c, x, k)
    return -a, -b


def beta_apply(c: Cocycle, f, power: int = 1):
    """``beta^power(f)`` with ``beta(f)(x) = W(x) f(s^-1 x) W(x)*``.

    Exact on step/cylinder functions; returns a lazy :class:`BetaPower` once
    the exact representation would exceed its budget.
    """
    if power < 0:
        raise ValueError("power must be >= 0")
    w = c.as_observable()
    wa = w.adjoint()
    out = f
    for step in range(power):
        try:
            out = w @ out.shift(1) @ wa
        except BudgetExceeded:
            log.info("beta_apply: budget exceeded at step %d, switching to lazy evaluation", step)
            return BetaPower(c, f, power)
    return out


# ---------------------------------------------------------------------------
# Birkhoff averages
# ---------------------------------------------------------------------------

def tau(f) -> complex:
    """Normalised trace of the integral."""
    m = f.integrate()
    return complex(np.trace(m) / m.shape[0])


@dataclass
class ErgodicityReport:
    observable: str
    n_iters: int
    deviation: float
    tol: float
    verdict: str
    tau: complex
    per_sample: list = field(default_factory=list)
    trace: list = field(default_factory=list)  # (N', deviation at N')

    @property
    def ok(self) -> bool:
        return self.verdict == "ergodic-consistent"

    def to_dict(self) -> dict:
        return {"observable": self.observable, "N": self.n_iters,
                "deviation": self.deviation, "tol": self.tol, "verdict": self.verdict,
                "tau": [self.tau.real, self.tau.imag],
                "per_sample": self.per_sample}


def default_tol(n_iters: int) -> float:
    return 5.0 / np.sqrt(n_iters)


def _orbit_keys(c: Cocycle, f, x, N: int):
    """For ``j < N``: residues of ``(c(x,j), d(x,j))`` mod n and the value index
    of ``f`` at ``s^-j x``."""
    sys = c.system
    n = c.n
    if isinstance(sys, CircleSystem):
        th = sys.theta.value
        ys = np.mod(float(x) - np.arange(N + 1) * th, 1.0)
        hits = ys[:N] < th
        vidx = f.arc_indices(ys[:N])
    else:
        idx = x.indices(min(0, f.lo), N + f.hi)
        base = min(0, f.lo)
        hits = sys.c1_mask[idx[-base: -base + N]]
        A = sys.size
        vidx = np.zeros(N, dtype=np.int64)
        for t in range(f.width):
            start = f.lo + t - base
            vidx = vidx * A + idx[start: start + N]
    if c.degenerate:
        cc = np.zeros(N, dtype=np.int64)
        dd = np.zeros(N, dtype=np.int64)
    else:
        cc = np.concatenate([[0], np.cumsum(hits)[:-1]]).astype(np.int64)
        dd = np.arange(N) - cc
    return (cc % n) * n + (dd % n), vidx


def _values(f) -> np.ndarray:
    return f.values if isinstance(f, MatStepFunction) else f.table


def birkhoff_average(c: Cocycle, f, x, N: int, checkpoints=()) -> tuple[np.ndarray, list]:
    """``(1/N) sum_{j<N} beta^j(f)(x)`` and the averages at each checkpoint."""
    n = c.n
    vals = _values(f)
    nv = len(vals)
    conj = np.stack([c.pair.word(-(r // n), -(r % n)) for r in range(n * n)])
    pair_key, vidx = _orbit_keys(c, f, x, N)
    key = pair_key * nv + vidx

    def avg(upto: int) -> np.ndarray:
        counts = np.bincount(key[:upto], minlength=n * n * nv).reshape(n * n, nv)
        total = np.zeros(vals.shape[1:], dtype=complex)
        for r in np.flatnonzero(counts.any(axis=1)):
            inner = np.tensordot(counts[r], vals, axes=1)
            total += conj[r] @ inner @ adjoint(conj[r])
        return total / upto

    return avg(N), [(m, avg(m)) for m in checkpoints if 0 < m <= N]


def birkhoff_test(c: Cocycle, f, n_iters: int, samples, tol: float | None = None,
                  name: str = "f", checkpoints=None) -> ErgodicityReport:
    """Largest operator-norm distance between the Birkhoff average of ``beta^j(f)``
    and ``tau(f) 1`` over the sample points."""
    if n_iters < 1:
        raise ValueError("n_iters must be >= 1")
    tol = default_tol(n_iters) if tol is None else tol
    t = tau(f)
    target = t * np.eye(c.n)
    if checkpoints is None:
        checkpoints = sorted({int(v) for v in np.unique(np.geomspace(10, n_iters, 12).astype(int))})
    per_sample = []
    trace_dev = {m: 0.0 for m in checkpoints if m <= n_iters}
    for x in samples:
        if isinstance(f, (MatStepFunction, MatCylinderFunction)):
            a, tr = birkhoff_average(c, f, x, n_iters, checkpoints)
        else:
            a = sum(BetaPower(c, f, j).evaluate(x) for j in range(n_iters)) / n_iters
            tr = []
        per_sample.append(opnorm(a - target))
        for m, am in tr:
            trace_dev[m] = max(trace_dev[m], opnorm(am - target))
    dev = max(per_sample) if per_sample else 0.0
    verdict = "ergodic-consistent" if dev <= tol else "non-ergodic-detected"
    return ErgodicityReport(name, n_iters, dev, tol, verdict, t, per_sample,
                            sorted(trace_dev.items()))


def birkhoff_exact_sup(c: Cocycle, f: MatStepFunction, n_iters: int) -> float:
    """Sup over the whole circle of the Birkhoff deviation, using the exact arc
    partition of the sum (one midpoint per arc)."""
    sys = c.system
    th = sys.theta
    pts = {th.q(0)}
    for j in range(n_iters + 1):
        pts.add((th.one * j).mod1())
        for b in f.breaks:
            if j < n_iters:
                pts.add((b + th.one * j).mod1())
    if len(pts) > BREAKPOINT_BUDGET:
        raise BudgetExceeded("Birkhoff partition exceeds the breakpoint budget")
    part = MatStepFunction(th, sorted(pts), np.zeros((len(pts), 1, 1)))
    target = tau(f) * np.eye(c.n)
    worst = 0.0
    for mid in part.midpoints():
        a, _ = birkhoff_average(c, f, float(mid), n_iters)
        worst = max(worst, opnorm(a - target))
    return worst


# ---------------------------------------------------------------------------
# Trivialisation
# ---------------------------------------------------------------------------

def _check_unitaries(ws):
    for i, w in enumerate(ws):
        if not is_unitary(np.asarray(w)):
            raise ValueError(f"W[{i}] is not unitary")


def trivialize_periodic(w_list, tol: float = MAT_TOL):
    """For ``W_0 .. W_{k-1}`` along a periodic orbit: ``Z^k = W_0 W_{k-1} ... W_1``,
    ``zeta_0 = 1``, ``zeta_n = Z zeta_{n-1} W_n*``.  Returns ``(zetas, Z, lambdas)``
    where ``lambdas`` are the eigenvalues of ``Z`` rotated into phase ``[0, 2 pi / k)``."""
    ws = [np.asarray(w, dtype=complex) for w in w_list]
    if not ws:
        raise ValueError("need at least one unitary")
    _check_unitaries(ws)
    k = len(ws)
    n = ws[0].shape[0]
    prod = ws[0].copy()
    for i in range(k - 1, 0, -1):
        prod = prod @ ws[i]
    Z = matrix_kth_root(prod, k)
    zetas = [np.eye(n, dtype=complex)]
    for i in range(1, k):
        zetas.append(Z @ zetas[-1] @ adjoint(ws[i]))
    for i in range(1, k + 1):
        lhs = zetas[i % k] @ ws[i % k] @ adjoint(zetas[i - 1])
        if opnorm(lhs - Z) > tol:
            raise ArithmeticError(f"trivialisation identity fails at n={i}")
    ang = np.mod(np.angle(np.linalg.eigvals(Z)), 2 * np.pi / k)
    return zetas, Z, np.exp(1j * np.sort(ang))


def trivialize_aperiodic(w_by_index: dict, tol: float = MAT_TOL) -> dict:
    """``zeta_0 = 1``, ``zeta_n = zeta_{n-1} W_n*`` (n > 0), ``zeta_n = zeta_{n+1} W_{n+1}`` (n < 0)."""
    idx = sorted(w_by_index)
    if not idx:
        raise ValueError("empty window")
    lo, hi = idx[0], idx[-1]
    if not lo <= 0 <= hi or idx != list(range(lo, hi + 1)):
        raise ValueError("window must be a contiguous range containing 0")
    ws = {i: np.asarray(w, dtype=complex) for i, w in w_by_index.items()}
    _check_unitaries(list(ws.values()))
    n = ws[0].shape[0]
    zetas = {0: np.eye(n, dtype=complex)}
    for i in range(1, hi + 1):
        zetas[i] = zetas[i - 1] @ adjoint(ws[i])
    for i in range(-1, lo - 1, -1):
        zetas[i] = zetas[i + 1] @ ws[i + 1]
    for i in range(lo + 1, hi + 1):
        if opnorm(zetas[i] @ ws[i] @ adjoint(zetas[i - 1]) - np.eye(n)) > tol:
            raise ArithmeticError(f"trivialisation identity fails at n={i}")
    return zetas


def trivialization_residuals(zetas: dict, w_by_index: dict) -> dict:
    """``|zeta_n W_n zeta_{n-1}* - 1|`` for each interior index."""
    out = {}
    for i in sorted(zetas):
        if i - 1 in zetas and i in w_by_index:
            z = zetas[i] @ w_by_index[i] @ adjoint(zetas[i - 1])
            out[i] = opnorm(z - np.eye(z.shape[0]))
    return out


def standard_observables(c: Cocycle) -> dict:
    """Named test observables used by the CLI and the acceptance suite."""
    n = c.n
    e11 = np.zeros((n, n), dtype=complex)
    e11[0, 0] = 1
    sys = c.system
    if isinstance(sys, CircleSystem):
        th = sys.theta
        e12 = np.zeros((n, n), dtype=complex)
        e12[0, min(1, n - 1)] = 1
        return {
            "chi_half_E11": MatStepFunction.indicator(th, 0, Fraction(1, 2), e11),
            "chi_C_E12": MatStepFunction.indicator(th, 0, th.one, e12),
            "one_v": MatStepFunction.constant(th, c.pair.v),
            "one_E11": MatStepFunction.constant(th, e11),
        }
    first = sys.alphabet[0]
    zero = np.zeros((n, n), dtype=complex)
    return {
        "x0_first_E11": MatCylinderFunction.from_coordinate(sys, 0, {first: e11}, default=zero),
        "one_v": MatCylinderFunction.constant(sys, c.pair.v),
        "one_E11": MatCylinderFunction.constant(sys, e11),
    }


def sample_points(system, count: int, seed: int):
    """Reproducible sample points: seeded sequences or uniform circle points."""
    if isinstance(system, BernoulliSystem):
        return [system.point(seed=int(s)) for s in
                np.random.default_rng([seed, 7]).integers(0, 2 ** 31, size=count)]
    return list(np.random.default_rng([seed, 11]).random(count))
