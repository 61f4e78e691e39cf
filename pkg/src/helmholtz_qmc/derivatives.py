"""Mixed parametric derivatives of the discrete solution and their bounds.

Differentiating ``B_y(u, w) = G_y(w)`` with respect to ``y`` gives, for every
multi-index ``nu``,

    B_y(d^nu u, w) = sum_j nu_j R_j(d^{nu-e_j} u, w) + S_nu(u, w) + T_nu(w),

with ``R_j = -dB/dy_j`` (first-order coefficient variation), ``S_nu``
collecting the second-order ``A k^2 n^2`` variation and ``T_nu`` the
derivatives of the load. The left operator never changes, so one LU
factorization serves every ``nu``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

from .errors import InvalidArgument, InvalidState
from .fem import (DataFunc, SplineSpace, Solution, _default_f, assemble_system, data_norm,
                  solve, vnorm)
from .field import AffineField, div_x_n, evaluate_field
from .geometry import ConstantSet, DomainGeometry, StabilizationParams


class MultiIndex:
    """Finitely supported multi-index, 1-based dimension keys."""

    __slots__ = ("_items",)

    def __init__(self, entries: Mapping[int, int] | Iterable[int] | None = None):
        if entries is None:
            items = {}
        elif isinstance(entries, Mapping):
            items = {int(j): int(v) for j, v in entries.items() if v}
        else:
            items = {j + 1: int(v) for j, v in enumerate(entries) if v}
        for j, v in items.items():
            if j < 1 or v < 0:
                raise InvalidArgument(f"invalid multi-index entry {j}: {v}")
        self._items = tuple(sorted(items.items()))

    @classmethod
    def unit(cls, j: int) -> "MultiIndex":
        return cls({j: 1})

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(j for j, _ in self._items)

    def __getitem__(self, j: int) -> int:
        return dict(self._items).get(j, 0)

    @property
    def order(self) -> int:
        return sum(v for _, v in self._items)

    @property
    def factorial(self) -> int:
        return math.prod(math.factorial(v) for _, v in self._items)

    def dense(self, s: int) -> list[int]:
        out = [0] * s
        for j, v in self._items:
            if j > s:
                raise InvalidArgument(f"index {j} exceeds dimension {s}")
            out[j - 1] = v
        return out

    def __add__(self, other: "MultiIndex") -> "MultiIndex":
        d = dict(self._items)
        for j, v in other._items:
            d[j] = d.get(j, 0) + v
        return MultiIndex(d)

    def minus_unit(self, j: int) -> "MultiIndex":
        d = dict(self._items)
        if d.get(j, 0) < 1:
            raise InvalidArgument(f"cannot subtract e_{j} from {self}")
        d[j] -= 1
        return MultiIndex(d)

    def __eq__(self, other):
        return isinstance(other, MultiIndex) and self._items == other._items

    def __hash__(self):
        return hash(self._items)

    def __lt__(self, other):
        return (self.order, self._items) < (other.order, other._items)

    def __repr__(self):
        return f"MultiIndex({dict(self._items)})"

    def __str__(self):
        s = max(self.support, default=0)
        return ",".join(map(str, self.dense(s))) if s else "0"


def multi_indices(max_order: int, dims: int) -> list[MultiIndex]:
    """All ``nu`` with ``|nu| <= max_order`` over the first ``dims`` dimensions, graded."""
    out = []
    for nu in itertools.product(range(max_order + 1), repeat=dims):
        if sum(nu) <= max_order:
            out.append(MultiIndex(nu))
    return sorted(out)


@dataclass
class DerivativeContext:
    """Everything that stays fixed while ``nu`` varies.

    The operator ``R_j`` matrices are stored as ``-dB/dy_j`` and the
    pairwise masses ``int psi_j psi_l phi phi`` are built lazily.
    """

    space: SplineSpace
    field: AffineField
    y: np.ndarray
    k: float
    params: StabilizationParams
    f: DataFunc | None = None
    g: DataFunc | None = None

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float).reshape(-1)
        self.s = self.y.size
        self.base: Solution = solve(assemble_system(
            self.space, self.field, self.y, self.k, self.params, self.f, self.g))
        self.coeffs = self.base.system.coeffs
        sp_ = self.space
        self.n = evaluate_field(self.field, self.y, sp_.x1, sp_.x2)[0]
        self.psi, self.d1, self.d2 = self.field.modes(sp_.x1, sp_.x2, self.s)
        self.psi_edges = [self.field.modes(e.x1, e.x2, self.s)[0] for e in sp_.edges]
        self.f_vol = (self.f or _default_f)(sp_.x1, sp_.x2)
        self._R: dict[int, sp.csr_matrix] = {}
        self._Mpp: dict[tuple[int, int], sp.csr_matrix] = {}
        self.memo: dict[MultiIndex, np.ndarray] = {MultiIndex(): self.base.coeffs}

    def R(self, j: int) -> sp.csr_matrix:
        """Matrix of ``R_j(z, w)``, rows indexed by the test function."""
        if not 1 <= j <= self.s:
            raise InvalidArgument(f"dimension {j} outside 1..{self.s}")
        if j not in self._R:
            self._R[j] = _r_matrix(self, j - 1)
        return self._R[j]

    def psi_mass(self, j: int, l: int) -> sp.csr_matrix:
        key = (min(j, l), max(j, l))
        if key not in self._Mpp:
            self._Mpp[key] = self.space.form("v", "v", self.psi[j - 1] * self.psi[l - 1])
        return self._Mpp[key]


def _r_matrix(ctx: DerivativeContext, j: int) -> sp.csr_matrix:
    sp_, c = ctx.space, ctx.coeffs
    k2 = c.k ** 2
    psi = ctx.psi[j]
    divxpsi = div_x_n(psi, ctx.d1[j], ctx.d2[j], sp_.x1, sp_.x2)
    terms = [
        # A psi z conj(L w)
        ("lap", "v", c.A * psi),
        ("v", "v", c.A * k2 * ctx.n * psi),
        # (M2 z + (A/k^2) L z) k^2 psi conj(w)
        ("v", "dx", k2 * psi * sp_.x1),
        ("v", "dy", k2 * psi * sp_.x2),
        ("v", "v", (c.xi3 + c.A * ctx.n) * k2 * psi),
        ("v", "lap", c.A * psi),
        # xi2 and div(x psi) terms
        ("v", "v", c.xi2 * k2 * psi + k2 * divxpsi),
    ]
    M = -sum(sp_.form(te, tr, co) for te, tr, co in terms)
    for e, pe in zip(sp_.edges, ctx.psi_edges):
        M = M + sp_.edge_form(e, "v", "v", k2 * e.x_dot_n * pe[j])
    return M.tocsr()


def derivative_rhs(nu: MultiIndex, ctx: DerivativeContext) -> np.ndarray:
    """Right-hand side of the derivative recursion for ``nu``.

    Requires every ``d^mu u`` with ``mu < nu`` in ``ctx.memo``.
    """
    if nu.order == 0:
        return ctx.base.system.rhs.copy()
    if max(nu.support) > ctx.s:
        raise InvalidArgument(f"{nu!r} involves dimensions beyond s={ctx.s}")

    def lower(mu: MultiIndex) -> np.ndarray:
        try:
            return ctx.memo[mu]
        except KeyError:
            raise InvalidState(f"derivative {mu!r} needed for {nu!r} is missing") from None

    rhs = np.zeros(ctx.space.dof, dtype=complex)
    for j in nu.support:
        rhs += nu[j] * (ctx.R(j) @ lower(nu.minus_unit(j)))
    if nu.order >= 2:
        # S_nu = -A k^2 sum_j sum_{l in supp(nu-e_j)} nu_j (nu-e_j)_l int psi_j psi_l d^{nu-e_j-e_l}u w
        A, k2 = ctx.coeffs.A, ctx.coeffs.k ** 2
        for j in nu.support:
            mj = nu.minus_unit(j)
            for l in mj.support:
                coef = nu[j] * mj[l]
                rhs -= A * k2 * coef * (ctx.psi_mass(j, l) @ lower(mj.minus_unit(l)))
    if nu.order == 1:
        (j,) = nu.support
        rhs -= ctx.space.load("v", ctx.coeffs.A * ctx.psi[j - 1] * ctx.f_vol)
    return rhs


def solve_derivative(nu: MultiIndex, ctx: DerivativeContext) -> np.ndarray:
    """``d^nu u_h`` via the recursion, filling the memo for all lower indices."""
    if nu in ctx.memo:
        return ctx.memo[nu]
    for j in nu.support:
        solve_derivative(nu.minus_unit(j), ctx)
    ctx.memo[nu] = ctx.base.resolve(derivative_rhs(nu, ctx))
    return ctx.memo[nu]


def derivative_residual(nu: MultiIndex, ctx: DerivativeContext) -> float:
    rhs = derivative_rhs(nu, ctx)
    r = ctx.base.system.matrix @ ctx.memo[nu] - rhs
    nb = np.linalg.norm(rhs)
    return float(np.linalg.norm(r) / nb) if nb else float(np.linalg.norm(r))


@dataclass(frozen=True)
class Certificate:
    nu: MultiIndex
    lhs: float
    bound: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.bound if self.bound else (0.0 if self.lhs == 0 else math.inf)

    @property
    def passed(self) -> bool:
        return self.lhs <= self.bound * (1 + 1e-6)


def regularity_bound(nu: MultiIndex, constants: ConstantSet, upsilon: np.ndarray,
                     data: float) -> float:
    """``(C_func/C_coer) * data * |nu|! * prod_j Upsilon_j^nu_j``."""
    prod = math.prod(float(upsilon[j - 1]) ** nu[j] for j in nu.support)
    return constants.stability * data * math.factorial(nu.order) * prod


def upsilon(constants: ConstantSet, field: AffineField, L: float, s: int) -> np.ndarray:
    """``Upsilon_j = C_regu * ||psi_j||_W1inf``."""
    return constants.c_regu * field.w1inf_norms(L, s)


def regularity_certificate(nu: MultiIndex, constants: ConstantSet, ctx: DerivativeContext,
                           gram: sp.spmatrix, geom: DomainGeometry | None = None) -> Certificate:
    geom = geom or ctx.space.geom
    u_nu = solve_derivative(nu, ctx)
    data = data_norm(ctx.space, ctx.f, ctx.g)
    ups = upsilon(constants, ctx.field, geom.L, ctx.s)
    return Certificate(nu, vnorm(gram, u_nu), regularity_bound(nu, constants, ups, data))


def finite_difference(ctx: DerivativeContext, js: tuple[int, ...], step: float) -> np.ndarray:
    """Central (one index) or 4-point mixed (two indices) difference of ``u_h``."""
    def at(shift: dict[int, float]) -> np.ndarray:
        y = ctx.y.copy()
        for j, h in shift.items():
            y[j - 1] += h
        return solve(assemble_system(ctx.space, ctx.field, y, ctx.k, ctx.params,
                                     ctx.f, ctx.g)).coeffs

    if len(js) == 1:
        (j,) = js
        return (at({j: step}) - at({j: -step})) / (2 * step)
    if len(js) == 2 and js[0] != js[1]:
        j, l = js
        return (at({j: step, l: step}) - at({j: step, l: -step})
                - at({j: -step, l: step}) + at({j: -step, l: -step})) / (4 * step ** 2)
    raise InvalidArgument("finite differences support one index or two distinct indices")


# -- abstract recursion ------------------------------------------------------


@dataclass(frozen=True)
class OracleResult:
    value: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.value <= self.bound * (1 + 1e-12)


def recursion_oracle(c0: float, c1: float, c2: float, Psi, B: float,
                     nu: MultiIndex) -> OracleResult:
    """Extremal solution of the factorial-type recursion and its closed-form bound.

    With ``a_0 = B`` and ``a_{e_j} = c0 Psi_j B``, for ``|nu| >= 2``

        a_nu = c1 sum_j nu_j Psi_j a_{nu-e_j}
             + c2 sum_j sum_{l in supp(nu-e_j)} nu_j (nu-e_j)_l Psi_j Psi_l a_{nu-e_j-e_l}.

    The bound is ``|nu|! prod_j (max(c0, 2 c1, sqrt(2 c2)) Psi_j)^nu_j B``.
    """
    Psi = np.asarray(Psi, dtype=float)
    if min(c0, c1, c2, B) < 0 or np.any(Psi < 0):
        raise InvalidArgument("recursion inputs must be nonnegative")
    memo: dict[MultiIndex, float] = {MultiIndex(): float(B)}

    def a(mu: MultiIndex) -> float:
        if mu in memo:
            return memo[mu]
        if mu.order == 1:
            (j,) = mu.support
            val = c0 * Psi[j - 1] * B
        else:
            val = 0.0
            for j in mu.support:
                mj = mu.minus_unit(j)
                val += mu[j] * c1 * Psi[j - 1] * a(mj)
                for l in mj.support:
                    val += mu[j] * mj[l] * c2 * Psi[j - 1] * Psi[l - 1] * a(mj.minus_unit(l))
        memo[mu] = val
        return val

    ups = max(c0, 2 * c1, math.sqrt(2 * c2)) * Psi
    bound = math.factorial(nu.order) * math.prod(ups[j - 1] ** nu[j] for j in nu.support) * B
    return OracleResult(a(nu), bound)
