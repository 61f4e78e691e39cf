"""Randomly shifted rank-1 lattice rules and their CBC construction.

The shift-averaged squared worst-case error in the unanchored weighted
Sobolev space is

    e^2(z) = sum_{u nonempty} gamma_u (1/N) sum_i prod_{j in u} omega({i z_j / N})

with ``omega(x) = x^2 - x + 1/6``. For POD weights the inner sum over ``u``
collapses into order-wise elementary symmetric sums ``q_l(i)``, so appending
a coordinate is linear in the new ``omega`` column.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidArgument
from .weights import PodWeights

# relative tolerance under which two CBC objective values count as tied
TIE_RTOL = 1e-13


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    r = math.isqrt(n)
    return all(n % f for f in range(3, r + 1, 2))


def next_prime(n: int) -> int:
    n = max(2, int(n))
    while not is_prime(n):
        n += 1
    return n


def prime_near(n: int) -> int:
    """Prime closest to ``n`` (smaller one on ties)."""
    lo = hi = int(n)
    while True:
        if is_prime(lo):
            return lo
        if is_prime(hi):
            return hi
        lo, hi = lo - 1, hi + 1


def omega(x, scale: float = 1.0):
    """Shift-averaged kernel ``scale * B_2(x)`` on ``[0, 1)``."""
    x = np.asarray(x, dtype=float)
    return scale * (x * x - x + 1.0 / 6.0)


def _omega_table(N: int, scale: float) -> np.ndarray:
    return omega(np.arange(N) / N, scale)


@dataclass(frozen=True)
class LatticeRule:
    N: int
    z: np.ndarray
    shifts: np.ndarray = field(default_factory=lambda: np.zeros((1, 0)))
    seed: int | None = None

    def __post_init__(self):
        z = np.asarray(self.z, dtype=np.int64).reshape(-1)
        object.__setattr__(self, "z", z)
        sh = np.asarray(self.shifts, dtype=float)
        if sh.size == 0:
            sh = np.zeros((1, z.size))
        if sh.ndim != 2 or sh.shape[1] != z.size:
            raise InvalidArgument(f"shifts must have shape (R, {z.size}), got {sh.shape}")
        object.__setattr__(self, "shifts", sh)
        if np.any(np.gcd(z, self.N) != 1):
            raise InvalidArgument("every z_j must be coprime to N")

    @property
    def s(self) -> int:
        return self.z.size

    @property
    def R(self) -> int:
        return self.shifts.shape[0]

    def with_shifts(self, R: int, seed: int) -> "LatticeRule":
        return LatticeRule(self.N, self.z, make_shifts(R, self.s, seed), seed)

    def truncated(self, s: int) -> "LatticeRule":
        return LatticeRule(self.N, self.z[:s], self.shifts[:, :s], self.seed)


def make_shifts(R: int, s: int, seed: int) -> np.ndarray:
    if R < 1:
        raise InvalidArgument("need at least one shift")
    return np.random.default_rng(seed).random((R, s))


def lattice_points(rule: LatticeRule, shift_index: int = 0) -> np.ndarray:
    """``frac(i z / N + shift) - 1/2`` for ``i = 1..N`` as an ``(N, s)`` array."""
    if not 0 <= shift_index < rule.R:
        raise InvalidArgument(f"shift index {shift_index} outside 0..{rule.R - 1}")
    i = np.arange(1, rule.N + 1, dtype=np.int64)
    base = (np.outer(i, rule.z) % rule.N) / rule.N
    return np.mod(base + rule.shifts[shift_index], 1.0) - 0.5


def _order_sums(z, N: int, weights: PodWeights, scale: float) -> np.ndarray:
    """``q[l, i]``: elementary symmetric sums of ``beta_j omega({i z_j/N})`` for ``l = 0..s``."""
    s = weights.s
    tab = _omega_table(N, scale)
    i = np.arange(N, dtype=np.int64)
    q = np.zeros((s + 1, N))
    q[0] = 1.0
    for d, zd in enumerate(z):
        w = weights.dim_factor[d] * tab[(i * int(zd)) % N]
        q[1:d + 2] = q[1:d + 2] + w * q[0:d + 1]
    return q


def worst_case_error_sq(z, N: int, weights: PodWeights, scale: float = 1.0) -> float:
    """Shift-averaged squared worst-case error via the order recursion."""
    z = np.asarray(z, dtype=np.int64).reshape(-1)
    if z.size > weights.s:
        raise InvalidArgument(f"{z.size} coordinates but only {weights.s} weights")
    q = _order_sums(z, N, weights, scale)
    return float(weights.order_factor[1:] @ q[1:].mean(axis=1))


def worst_case_error(rule: LatticeRule, weights: PodWeights, scale: float = 1.0) -> float:
    return math.sqrt(max(worst_case_error_sq(rule.z, rule.N, weights, scale), 0.0))


@dataclass(frozen=True)
class CbcTrace:
    """Per-step objective values; ``objective[d][c-1]`` is ``e^2`` with ``z_d = c``."""

    z: np.ndarray
    objective: list


def cbc_lattice(N: int, s: int, weights: PodWeights, scale: float = 1.0,
                chunk: int = 256, trace: bool = False):
    """Greedy component-by-component generating vector.

    Candidates are ``1..N-1``; among (near-)ties the smallest candidate wins.
    Returns ``z``, or a :class:`CbcTrace` when ``trace`` is set.
    """
    if not is_prime(N):
        raise InvalidArgument(f"N must be prime, got {N}")
    if s < 1 or s > weights.s:
        raise InvalidArgument(f"s must lie in 1..{weights.s}, got {s}")
    tab = _omega_table(N, scale)
    i = np.arange(N, dtype=np.int64)
    cand = np.arange(1, N, dtype=np.int64)
    G = weights.order_factor
    q = np.zeros((s + 1, N))
    q[0] = 1.0
    z = np.zeros(s, dtype=np.int64)
    objs = []
    for d in range(s):
        # e^2 = sum_l G_l mean(q_l) + beta_d mean(omega_z * sum_l G_l q_{l-1})
        base = float(G[1:d + 2] @ q[1:d + 2].mean(axis=1))
        r = G[1:d + 2] @ q[0:d + 1]
        vals = np.empty(cand.size)
        for a in range(0, cand.size, chunk):
            c = cand[a:a + chunk]
            vals[a:a + chunk] = tab[np.outer(c, i) % N] @ r
        obj = base + weights.dim_factor[d] * vals / N
        best = obj.min()
        tol = TIE_RTOL * max(abs(best), np.abs(obj).max(), 1e-300)
        zd = int(cand[np.flatnonzero(obj <= best + tol)[0]])
        z[d] = zd
        w = weights.dim_factor[d] * tab[(i * zd) % N]
        q[1:d + 2] = q[1:d + 2] + w * q[0:d + 1]
        if trace:
            objs.append(obj)
    return CbcTrace(z, objs) if trace else z
