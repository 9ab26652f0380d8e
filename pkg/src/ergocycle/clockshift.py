"""Clock and shift matrices, commutants, orbit sets and matrix roots."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

#: operator-norm tolerance for matrix identities
MAT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ClockPair:
    """``u = diag(1, w, ..., w^(n-1))`` and the cyclic shift ``v`` with ``v u v* = w u``."""

    n: int
    omega: complex
    u: np.ndarray
    v: np.ndarray

    @property
    def identity(self) -> np.ndarray:
        return np.eye(self.n, dtype=complex)

    def word(self, a: int, b: int) -> np.ndarray:
        """``u^a v^b`` for any integers ``a, b``."""
        return np.linalg.matrix_power(self.u, a % self.n) @ \
            np.linalg.matrix_power(self.v, b % self.n)


def make_clock_pair(n: int) -> ClockPair:
    if n < 1:
        raise ValueError(f"invalid dimension n={n}")
    omega = np.exp(2j * np.pi / n)
    u = np.diag(omega ** np.arange(n))
    # v e_j = e_{j-1}: then v u v* e_{j-1} = w^j e_{j-1} = w (u e_{j-1})
    v = np.roll(np.eye(n, dtype=complex), 1, axis=1)
    if n == 1:
        omega = 1.0 + 0j
        u = np.ones((1, 1), dtype=complex)
    return ClockPair(n, omega, u, v)


def opnorm(a: np.ndarray) -> float:
    """Operator norm (largest singular value)."""
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def adjoint(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def ad(x: np.ndarray, t: np.ndarray) -> np.ndarray:
    """``Ad(x)(t) = x t x*``."""
    return x @ t @ adjoint(x)


def is_unitary(a: np.ndarray, tol: float = MAT_TOL) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and \
        opnorm(adjoint(a) @ a - np.eye(a.shape[0])) <= tol


def commutant_dim(mats, n: int | None = None, tol: float = 1e-9) -> int:
    """Dimension of ``{X : X M = M X for all M in mats}``.

    Solved as the null space of the stacked system ``(I (x) M - M^T (x) I) vec X = 0``.
    """
    mats = [np.asarray(m, dtype=complex) for m in mats]
    if not mats:
        if n is None:
            raise ValueError("empty list needs an explicit dimension n")
        return n * n
    n = mats[0].shape[0]
    eye = np.eye(n)
    system = np.vstack([np.kron(eye, m) - np.kron(m.T, eye) for m in mats])
    s = np.linalg.svd(system, compute_uv=False)
    rank = int(np.count_nonzero(s > tol * max(1.0, s[0])))
    return n * n - rank


def gamma_orbit(t0: np.ndarray, pair: ClockPair, tol: float = MAT_TOL) -> list[np.ndarray]:
    """The set ``{Ad(u^p v^q)(t0) : 0 <= p, q < n}`` with duplicates removed."""
    out: list[np.ndarray] = []
    for p in range(pair.n):
        for q in range(pair.n):
            t = ad(pair.word(p, q), t0)
            if not any(opnorm(t - s) <= tol for s in out):
                out.append(t)
    return out


def contains(mats: list[np.ndarray], t: np.ndarray, tol: float = MAT_TOL) -> bool:
    return any(opnorm(t - s) <= tol for s in mats)


# -- the four left/right multiplication maps -----------------------------------

def _phi_factors(which: int, pair: ClockPair) -> tuple[np.ndarray, np.ndarray]:
    u, v = pair.u, pair.v
    table = {1: (u, adjoint(u)), 2: (v, adjoint(v)),
             3: (u, adjoint(v)), 4: (v, adjoint(u))}
    if which not in table:
        raise ValueError(f"phi index must be 1..4, got {which}")
    return table[which]


def phi_apply(which: int, zeta: np.ndarray, pair: ClockPair) -> np.ndarray:
    """``phi_1 = L_u R_u*``, ``phi_2 = L_v R_v*``, ``phi_3 = L_u R_v*``, ``phi_4 = L_v R_u*``."""
    left, right = _phi_factors(which, pair)
    return left @ zeta @ right


def phi_power(which: int, k: int, zeta: np.ndarray, pair: ClockPair) -> np.ndarray:
    for _ in range(k % pair.n):
        zeta = phi_apply(which, zeta, pair)
    return zeta


#: (i, j, e): phi_i phi_j = w^e phi_j phi_i
PHI_RELATIONS = [(1, 2, 0), (1, 3, 1), (1, 4, -1), (2, 3, 1), (2, 4, -1), (3, 4, -2)]


def phi_relations_check(pair: ClockPair, zetas=None, rng=None, count: int = 20,
                        tol: float = MAT_TOL) -> dict:
    """Check the six commutation relations, ``phi_i^n = id`` and the power
    identities for ``phi_3^k`` and ``phi_4^k`` on random matrices."""
    n = pair.n
    if zetas is None:
        rng = np.random.default_rng(0) if rng is None else rng
        zetas = [rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) for _ in range(count)]
    w = pair.omega
    worst = {"relations": 0.0, "nilpotent_period": 0.0, "power_identities": 0.0}
    for z in zetas:
        scale = max(1.0, opnorm(z))
        for i, j, e in PHI_RELATIONS:
            lhs = phi_apply(i, phi_apply(j, z, pair), pair)
            rhs = w ** e * phi_apply(j, phi_apply(i, z, pair), pair)
            worst["relations"] = max(worst["relations"], opnorm(lhs - rhs) / scale)
        for i in (1, 2, 3, 4):
            zi = z
            for _ in range(n):
                zi = phi_apply(i, zi, pair)
            worst["nilpotent_period"] = max(worst["nilpotent_period"], opnorm(zi - z) / scale)
        for k in range(1, n + 1):
            uk, vk = pair.word(k, 0), pair.word(0, k)
            p3 = ad(uk, z) @ uk @ pair.word(0, -k)
            p4 = ad(vk, z) @ vk @ pair.word(-k, 0)
            d3 = opnorm(phi_power(3, k, z, pair) - p3)
            d4 = opnorm(phi_power(4, k, z, pair) - p4)
            worst["power_identities"] = max(worst["power_identities"], d3 / scale, d4 / scale)
    worst["ok"] = all(val <= tol for key, val in worst.items() if key != "ok")
    return worst


def matrix_kth_root(p: np.ndarray, k: int, tol: float = MAT_TOL) -> np.ndarray:
    """Principal ``k``-th root of a unitary: eigenvalue ``e^{i a}`` with
    ``a`` in (-pi, pi] goes to ``e^{i a/k}``."""
    p = np.asarray(p, dtype=complex)
    if k < 1:
        raise ValueError("k must be >= 1")
    if not is_unitary(p, tol):
        raise ValueError("matrix_kth_root needs a unitary matrix")
    # complex Schur form of a normal matrix is diagonal
    t, z = scipy.linalg.schur(p, output="complex")
    angles = np.angle(np.diag(t))
    angles = np.where(angles <= -np.pi + 1e-12, np.pi, angles)
    return z @ np.diag(np.exp(1j * angles / k)) @ adjoint(z)


def reduce_word(letters, n: int) -> tuple[int, int, int]:
    """Reduce a word in ``u`` and ``v`` (letters ``'u'``/``'v'``) to
    ``w^j u^a v^b`` using ``v u = w u v``; returns ``(j, a, b)`` mod n."""
    j = a = b = 0
    for ch in letters:
        if ch == "u":
            # u^a v^b u = w^b u^(a+1) v^b
            j += b
            a += 1
        elif ch == "v":
            b += 1
        else:
            raise ValueError(f"unknown letter {ch!r}")
    return j % n, a % n, b % n
