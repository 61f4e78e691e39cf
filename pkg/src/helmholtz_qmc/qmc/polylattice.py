"""Interlaced polynomial lattice rules over GF(2).

Polynomials are stored as Python/NumPy integers, bit ``k`` holding the
coefficient of ``x^k``. A component point is ``v_m(i(x) q(x) / P(x))``: the
first ``m`` digits of the Laurent expansion, read as a dyadic fraction.
Because ``P`` is primitive, ``i q mod P = x^(log i + log q)``, so all points
of all candidates come from one table indexed by discrete logarithms.

The CBC criterion for ``alpha``-fold interlacing and SPOD weights is

    E = sum_{u nonempty} gamma_u (1/N) sum_n prod_{j in u} Y_j(n),
    Y_j(n) = prod_{i=1..alpha} (1 + phi(x_{n, (j-1) alpha + i})) - 1,

with the Walsh-series kernel ``phi(x) = sum_{k>=1} 2^(-alpha mu(k)) wal_k(x)``
(``mu(k)`` the position of the leading bit of ``k``). For ``x`` whose first
nonzero binary digit sits at position ``t``,
``phi(x) = (sum_{a<t} r^a - r^t) / 2`` with ``r = 2^(1 - alpha)``, and
``phi(0) = r / (2 (1 - r))``. Components are chosen one at a time over all
``alpha * s`` underlying coordinates; not-yet-chosen components contribute
``phi = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgument
from .weights import SpodWeights

# primitive polynomials of degree m (bit k = coefficient of x^k)
PRIMITIVE = {
    1: 0b11,
    2: 0b111,
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10000011,
    8: 0b100011101,
    9: 0b1000010001,
    10: 0b10000001001,
    11: 0b100000000101,
    12: 0b1000001010011,
    13: 0b10000000011011,
    14: 0b100010001000011,
    15: 0b1000000000000011,
    16: 0b10001000000001011,
    17: 0b100000000000001001,
    18: 0b1000000000010000001,
    19: 0b10000000000000100111,
    20: 0b100000000000000001001,
}

M_MIN, M_MAX = 4, 20


def gf2_mulmod(a: int, b: int, P: int) -> int:
    m = P.bit_length() - 1
    out = 0
    while b:
        if b & 1:
            out ^= a
        b >>= 1
        a <<= 1
        if a >> m & 1:
            a ^= P
    return out


def gf2_mod(a: int, P: int) -> int:
    dp = P.bit_length()
    while a.bit_length() >= dp:
        a ^= P << (a.bit_length() - dp)
    return a


def _prime_factors(n: int) -> list[int]:
    out, f = [], 2
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 1
    if n > 1:
        out.append(n)
    return out


def gf2_powmod(e: int, P: int) -> int:
    """``x^e mod P``."""
    result, base = 1, gf2_mod(0b10, P)
    while e:
        if e & 1:
            result = gf2_mulmod(result, base, P)
        base = gf2_mulmod(base, base, P)
        e >>= 1
    return result


def is_primitive(P: int) -> bool:
    """``x`` generates the multiplicative group of ``GF(2)[x]/P``."""
    m = P.bit_length() - 1
    if m < 1 or not P & 1:
        return False
    order = (1 << m) - 1
    if gf2_powmod(order, P) != 1:
        return False
    return all(gf2_powmod(order // f, P) != 1 for f in _prime_factors(order))


def modulus(m: int) -> int:
    if m not in PRIMITIVE:
        raise InvalidArgument(f"no tabulated primitive polynomial of degree {m}")
    return PRIMITIVE[m]


def v_m(r: int, P: int, m: int | None = None) -> int:
    """First ``m`` Laurent digits of ``r/P`` as an integer ``sum_k a_k 2^(m-k)``."""
    deg = P.bit_length() - 1
    m = deg if m is None else m
    r = gf2_mod(r, P)
    out = 0
    for _ in range(m):
        r <<= 1
        bit = r >> deg & 1
        if bit:
            r ^= P
        out = out << 1 | bit
    return out


@dataclass(frozen=True)
class FieldTables:
    """Discrete log/antilog of ``GF(2^m)`` and the digit table ``V[e] = v_m(x^e / P)``."""

    m: int
    P: int
    exp: np.ndarray
    log: np.ndarray
    V: np.ndarray

    @classmethod
    def build(cls, m: int, P: int | None = None) -> "FieldTables":
        P = modulus(m) if P is None else P
        if not is_primitive(P):
            raise InvalidArgument(f"modulus {P:#b} is not primitive")
        n = (1 << m) - 1
        exp = np.zeros(n, dtype=np.int64)
        log = np.full(1 << m, -1, dtype=np.int64)
        a = 1
        for e in range(n):
            exp[e] = a
            log[a] = e
            a <<= 1
            if a >> m & 1:
                a ^= P
        V = np.array([v_m(int(a), P, m) for a in exp], dtype=np.int64)
        return cls(m, P, exp, log, V)

    def component(self, q: int) -> np.ndarray:
        """Integer digits ``X[i] = 2^m v_m(i q / P)`` for ``i = 0..N-1``."""
        N = 1 << self.m
        out = np.zeros(N, dtype=np.int64)
        lq = self.log[q]
        out[1:] = self.V[(self.log[1:] + lq) % (N - 1)]
        return out


def interlace_digits(X: np.ndarray, m: int) -> np.ndarray:
    """Interleave ``alpha`` digit streams ``X[..., i]`` (``m`` bits each) into one integer.

    Output digit ``(a - 1) alpha + i`` is digit ``a`` of component ``i``.
    """
    X = np.asarray(X, dtype=np.int64)
    alpha = X.shape[-1]
    if alpha * m > 62:
        raise InvalidArgument("alpha * m must not exceed 62 bits")
    out = np.zeros(X.shape[:-1], dtype=np.int64)
    for a in range(1, m + 1):
        for i in range(alpha):
            bit = (X[..., i] >> (m - a)) & 1
            out = out | (bit << (alpha * m - ((a - 1) * alpha + i + 1)))
    return out


def deinterlace_digits(Z: np.ndarray, m: int, alpha: int) -> np.ndarray:
    Z = np.asarray(Z, dtype=np.int64)
    out = np.zeros(Z.shape + (alpha,), dtype=np.int64)
    for a in range(1, m + 1):
        for i in range(alpha):
            bit = (Z >> (alpha * m - ((a - 1) * alpha + i + 1))) & 1
            out[..., i] |= bit << (m - a)
    return out


def interlace(x: np.ndarray, m: int) -> np.ndarray:
    """Interleave the binary digits of ``alpha`` points in ``[0,1)`` given as floats."""
    x = np.asarray(x, dtype=float)
    X = np.floor(x * (1 << m)).astype(np.int64)
    alpha = x.shape[-1]
    return interlace_digits(X, m) / float(1 << (alpha * m))


def walsh_kernel(X: np.ndarray, m: int, alpha: int) -> np.ndarray:
    """``phi`` evaluated at the ``m``-digit dyadic points ``X / 2^m``."""
    r = 2.0 ** (1 - alpha)
    X = np.asarray(X, dtype=np.int64)
    out = np.full(X.shape, 0.5 * r / (1 - r))
    nz = X != 0
    # position of the first 1 digit after the binary point
    t = m - np.floor(np.log2(np.where(nz, X, 1))).astype(np.int64)
    geo = r * (1 - r ** (t - 1)) / (1 - r)
    out[nz] = 0.5 * (geo[nz] - r ** t[nz])
    return out


@dataclass(frozen=True)
class InterlacedPolyLattice:
    m: int
    modulus: int
    q: np.ndarray
    alpha: int

    @property
    def N(self) -> int:
        return 1 << self.m

    @property
    def s(self) -> int:
        return self.q.size // self.alpha

    def component_digits(self) -> np.ndarray:
        """``(N, alpha * s)`` integer digits of the underlying polynomial lattice."""
        tab = FieldTables.build(self.m, self.modulus)
        return np.stack([tab.component(int(q)) for q in self.q], axis=1)

    def digits(self) -> np.ndarray:
        """``(N, s)`` interlaced integers with ``alpha * m`` bits each."""
        X = self.component_digits().reshape(self.N, self.s, self.alpha)
        return interlace_digits(X, self.m)

    def points(self) -> np.ndarray:
        """Interlaced points in ``[0,1)^s`` (not shifted to the centred cube)."""
        return self.digits() / float(1 << (self.alpha * self.m))

    def truncated(self, s: int) -> "InterlacedPolyLattice":
        return InterlacedPolyLattice(self.m, self.modulus, self.q[: self.alpha * s], self.alpha)


def _spod_tables(weights: SpodWeights):
    c = weights.coefficients()
    smax = weights.s * weights.alpha
    fact = np.array([math.factorial(l) for l in range(smax + 1)], dtype=float)
    return c, fact


def poly_criterion(lat: InterlacedPolyLattice, weights: SpodWeights) -> float:
    """The SPOD interlaced criterion ``E`` of a complete rule."""
    X = lat.component_digits()
    phi = walsh_kernel(X, lat.m, lat.alpha).reshape(lat.N, lat.s, lat.alpha)
    Y = np.prod(1 + phi, axis=2) - 1
    c, fact = _spod_tables(weights)
    U = np.zeros((lat.N, fact.size))
    U[:, 0] = 1.0
    for j in range(lat.s):
        U = _spod_append(U, Y[:, j], c[j])
    return float(np.mean(U[:, 1:] @ fact[1:]))


def _spod_append(U: np.ndarray, Y: np.ndarray, cj: np.ndarray) -> np.ndarray:
    """``U_new[:, l] = U[:, l] + Y * sum_nu c_nu U[:, l - nu]``."""
    new = U.copy()
    for nu in range(1, cj.size):
        new[:, nu:] += (Y * cj[nu])[:, None] * U[:, :-nu]
    return new


def cbc_poly_lattice(m: int, s: int, weights: SpodWeights, chunk: int = 64
                     ) -> InterlacedPolyLattice:
    """Greedy choice of ``alpha * s`` generating polynomials (smallest wins ties)."""
    if not M_MIN <= m <= M_MAX:
        raise InvalidArgument(f"m must lie in [{M_MIN}, {M_MAX}], got {m}")
    if s < 1 or s > weights.s:
        raise InvalidArgument(f"s must lie in 1..{weights.s}, got {s}")
    alpha = weights.alpha
    tab = FieldTables.build(m)
    N = 1 << m
    n = N - 1
    # phi at point index i = 1..N-1 for candidate q: table over discrete logs
    phiV = walsh_kernel(tab.V, m, alpha)
    phi0 = float(walsh_kernel(np.array([0]), m, alpha)[0])
    logi = tab.log[1:]
    c, fact = _spod_tables(weights)
    U = np.zeros((N, fact.size))
    U[:, 0] = 1.0
    qs: list[int] = []
    cand = np.arange(1, N, dtype=np.int64)
    for j in range(s):
        V = np.ones(N)  # prod over chosen components of (1 + phi)
        # W[n] = sum_l l! sum_nu c_nu U[n, l - nu]: coefficient of Y_j in E
        W = np.zeros(N)
        for nu in range(1, alpha + 1):
            W += c[j, nu] * (U[:, :fact.size - nu] @ fact[nu:])
        for _ in range(alpha):
            wv = V * W
            vals = np.empty(cand.size)
            for a in range(0, cand.size, chunk):
                lq = tab.log[cand[a:a + chunk]]
                vals[a:a + chunk] = phiV[(logi[None, :] + lq[:, None]) % n] @ wv[1:]
            vals += phi0 * wv[0]
            best = vals.min()
            tol = 1e-13 * max(abs(best), np.abs(vals).max(), 1e-300)
            q = int(cand[np.flatnonzero(vals <= best + tol)[0]])
            qs.append(q)
            x = tab.component(q)
            V = V * (1 + walsh_kernel(x, m, alpha))
        U = _spod_append(U, V - 1, c[j])
    return InterlacedPolyLattice(m, tab.P, np.array(qs, dtype=np.int64), alpha)
