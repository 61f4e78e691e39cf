"""C^{p-1} tensor-product spline Galerkin discretization of the coercive form.

Conventions
-----------
Basis functions are real, indexed ``i1 * n1 + i2`` with ``i1`` along ``x1``.
Assembled matrices store ``M[test, trial] = B(phi_trial, phi_test)`` so that
for coefficient vectors ``v`` (trial) and ``w`` (test) ``B(v, w) = w^H M v``,
and the Galerkin system reads ``M u = rhs`` with ``rhs[j] = G(phi_j)``.

All integrals use ``p + 2`` Gauss points per knot span and axis. Every form
is built as ``P_test^T diag(weights * c) P_trial`` from sparse evaluation
matrices ``P_op`` of the basis (values, first derivatives, Laplacian).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import BSpline

from .errors import InvalidArgument, NumericalFailure
from .field import AffineField, div_x_n, evaluate_field
from .geometry import DomainGeometry, StabilizationParams


def _basis_1d(knots: np.ndarray, p: int, x: np.ndarray, nu: int) -> np.ndarray:
    n = len(knots) - p - 1
    spl = BSpline(knots, np.eye(n), p, extrapolate=True)
    if nu:
        spl = spl.derivative(nu)
    out = spl(np.clip(x, knots[0], knots[-1]))
    out[np.abs(out) < 1e-300] = 0.0
    return out


def _csr(a: np.ndarray) -> sp.csr_matrix:
    m = sp.csr_matrix(a)
    m.eliminate_zeros()
    return m


@dataclass
class Edge:
    """One side of the square with its quadrature and evaluation matrices."""

    name: str
    normal: tuple[float, float]
    x1: np.ndarray
    x2: np.ndarray
    weights: np.ndarray
    x_dot_n: float
    x_dot_t: np.ndarray
    ops: dict = dc_field(repr=False)


class SplineSpace:
    """Open-uniform tensor B-spline space of degree ``p`` on the square.

    Parameters
    ----------
    p : int
        Spline degree, at least 2 so the space sits in H^2.
    m_e : int
        Elements (knot spans) per axis.
    geom : DomainGeometry
        Square domain; only ``side`` is used for the mesh.
    """

    def __init__(self, p: int, m_e: int, geom: DomainGeometry):
        if p < 2:
            raise InvalidArgument(f"spline degree must be >= 2 for H^2 conformity, got {p}")
        if m_e < 2:
            raise InvalidArgument(f"need at least 2 elements per axis, got {m_e}")
        if geom.d != 2:
            raise InvalidArgument("discretization is two-dimensional only")
        self.p, self.m_e, self.geom = p, m_e, geom
        a = geom.side
        self.h = a / m_e
        breaks = np.linspace(-a / 2, a / 2, m_e + 1)
        self.knots = np.r_[[-a / 2] * p, breaks, [a / 2] * p]
        self.n1 = m_e + p
        self.dof = self.n1 ** 2
        self.greville = np.array([self.knots[i + 1:i + p + 1].mean() for i in range(self.n1)])

        gx, gw = np.polynomial.legendre.leggauss(p + 2)
        mid = 0.5 * (breaks[:-1] + breaks[1:])
        self.q1 = (mid[:, None] + 0.5 * self.h * gx[None, :]).ravel()
        self.w1 = np.tile(0.5 * self.h * gw, m_e)
        B = [_basis_1d(self.knots, p, self.q1, nu) for nu in range(3)]
        Bs = [_csr(b) for b in B]

        # volume quadrature, row index a * nq1 + b for point (q1[a], q1[b])
        self.x1 = np.repeat(self.q1, self.q1.size)
        self.x2 = np.tile(self.q1, self.q1.size)
        self.weights = np.kron(self.w1, self.w1)
        self.ops = {
            "v": sp.kron(Bs[0], Bs[0], format="csr"),
            "dx": sp.kron(Bs[1], Bs[0], format="csr"),
            "dy": sp.kron(Bs[0], Bs[1], format="csr"),
            "lap": (sp.kron(Bs[2], Bs[0]) + sp.kron(Bs[0], Bs[2])).tocsr(),
        }

        h = a / 2
        end = [_basis_1d(self.knots, p, np.array([-h, h]), nu) for nu in range(2)]
        self.edges: list[Edge] = []
        for name, normal in (("right", (1, 0)), ("left", (-1, 0)),
                             ("top", (0, 1)), ("bottom", (0, -1))):
            side_idx = 1 if sum(normal) > 0 else 0
            e0 = _csr(end[0][side_idx:side_idx + 1])
            e1 = _csr(end[1][side_idx:side_idx + 1])
            sign = float(sum(normal))
            if normal[0]:
                x1 = np.full(self.q1.size, sign * h)
                x2 = self.q1.copy()
                ops = {"v": sp.kron(e0, Bs[0], format="csr"),
                       "dn": sign * sp.kron(e1, Bs[0], format="csr"),
                       "dt": sp.kron(e0, Bs[1], format="csr")}
                xt = x2
            else:
                x1 = self.q1.copy()
                x2 = np.full(self.q1.size, sign * h)
                ops = {"v": sp.kron(Bs[0], e0, format="csr"),
                       "dn": sign * sp.kron(Bs[0], e1, format="csr"),
                       "dt": sp.kron(Bs[1], e0, format="csr")}
                xt = x1
            self.edges.append(Edge(name, normal, x1, x2, self.w1.copy(), h, xt, ops))

        self._pattern = None

    # -- forms ---------------------------------------------------------------

    def form(self, test: str, trial: str, c) -> sp.csr_matrix:
        """Volume form ``int c * op_trial(phi_i) * op_test(phi_j)``."""
        c = np.broadcast_to(c, self.weights.shape) * self.weights
        return (self.ops[test].T @ sp.diags(c) @ self.ops[trial]).tocsr()

    def edge_form(self, edge: Edge, test: str, trial: str, c) -> sp.csr_matrix:
        c = np.broadcast_to(c, edge.weights.shape) * edge.weights
        return (edge.ops[test].T @ sp.diags(c) @ edge.ops[trial]).tocsr()

    def load(self, op: str, c) -> np.ndarray:
        """``int c * op(phi_j)`` for every basis function."""
        c = np.broadcast_to(c, self.weights.shape) * self.weights
        return self.ops[op].T @ c

    def edge_load(self, edge: Edge, op: str, c) -> np.ndarray:
        c = np.broadcast_to(c, edge.weights.shape) * edge.weights
        return edge.ops[op].T @ c

    @property
    def pattern(self) -> sp.csr_matrix:
        """Sparsity pattern shared by every assembled operator (support overlap)."""
        if self._pattern is None:
            P = abs(self.ops["v"])
            pat = (P.T @ P).tocsr()
            pat.sort_indices()
            pat.data[:] = 1.0
            self._pattern = pat
        return self._pattern

    def aligned(self, M: sp.spmatrix) -> np.ndarray:
        """Data of ``M`` laid out on :attr:`pattern` (entries outside are dropped)."""
        pat = self.pattern
        rows = np.repeat(np.arange(self.dof), np.diff(pat.indptr))
        return np.asarray(M.tocsr()[rows, pat.indices]).ravel()

    def from_data(self, data: np.ndarray) -> sp.csr_matrix:
        pat = self.pattern
        return sp.csr_matrix((data, pat.indices, pat.indptr), shape=pat.shape)

    # -- evaluation ----------------------------------------------------------

    def basis_at(self, x1, x2, op: str = "v") -> np.ndarray:
        """Dense ``(npts, dof)`` evaluation of ``op`` for scattered points."""
        x1 = np.atleast_1d(np.asarray(x1, dtype=float))
        x2 = np.atleast_1d(np.asarray(x2, dtype=float))
        nu = {"v": (0, 0), "dx": (1, 0), "dy": (0, 1), "dxx": (2, 0), "dyy": (0, 2)}
        if op == "lap":
            return self.basis_at(x1, x2, "dxx") + self.basis_at(x1, x2, "dyy")
        a, b = nu[op]
        Bx = _basis_1d(self.knots, self.p, x1, a)
        By = _basis_1d(self.knots, self.p, x2, b)
        return (Bx[:, :, None] * By[:, None, :]).reshape(x1.size, -1)

    def evaluate(self, coeffs, x1, x2, op: str = "v") -> np.ndarray:
        return self.basis_at(x1, x2, op) @ np.asarray(coeffs)

    def interpolate(self, func: Callable) -> np.ndarray:
        """Coefficients of the Greville-point interpolant of ``func(x1, x2)``."""
        C = _basis_1d(self.knots, self.p, self.greville, 0)
        X1, X2 = np.meshgrid(self.greville, self.greville, indexing="ij")
        F = np.asarray(func(X1, X2))
        Cinv = np.linalg.inv(C)
        return (Cinv @ F @ Cinv.T).ravel()


def build_space(p: int, m_e: int, geom: DomainGeometry) -> SplineSpace:
    return SplineSpace(p, m_e, geom)


# -- sesquilinear form -------------------------------------------------------


@dataclass(frozen=True)
class FormCoefficients:
    """Derived complex constants of the coercive form."""

    k: float
    kL: float
    A: float
    xi1: complex
    xi2: complex
    xi3: complex
    m1_conj: complex

    @classmethod
    def from_params(cls, k: float, L: float, params: StabilizationParams, d: int = 2):
        kL = k * L
        db = params.beta1_hat - params.beta2_hat
        return cls(
            k=k, kL=kL, A=params.A,
            xi1=complex(2 - d + params.alpha1 + params.alpha2, kL * db),
            xi2=complex(-params.alpha1 - params.alpha2, -kL * db),
            xi3=complex(params.alpha2, -kL * params.beta2_hat),
            m1_conj=complex(params.alpha1, kL * params.beta1_hat),
        )


def _field_terms(space: SplineSpace, c: FormCoefficients, n, divxn, n_edges,
                 *, static: bool, quadratic: bool) -> sp.csr_matrix:
    """Sesquilinear form for given coefficient values at quadrature points.

    ``static`` adds the terms not involving ``n``; ``quadratic`` adds the
    ``A k^2 n^2`` mass term. Remaining terms are linear in ``(n, divxn, n_edges)``.
    """
    k2 = c.k ** 2
    X1, X2 = space.x1, space.x2
    terms = [
        ("lap", "v", c.A * n),
        ("v", "dx", k2 * n * X1),
        ("v", "dy", k2 * n * X2),
        ("v", "lap", c.A * n),
        ("v", "v", (c.xi3 + c.xi2) * k2 * n + k2 * divxn),
    ]
    if static:
        terms += [
            ("lap", "dx", X1),
            ("lap", "dy", X2),
            ("lap", "v", c.xi3),
            ("lap", "lap", c.A / k2),
            ("dx", "dx", c.xi1),
            ("dy", "dy", c.xi1),
        ]
    if quadratic:
        terms.append(("v", "v", c.A * k2 * n * n))
    M = sum(space.form(te, tr, coef) for te, tr, coef in terms)
    for edge, nb in zip(space.edges, n_edges):
        xn, xt = edge.x_dot_n, edge.x_dot_t
        M = M + space.edge_form(edge, "v", "v", -xn * k2 * nb)
        if static:
            ik = 1j * c.k
            M = M + space.edge_form(edge, "dn", "v", -(ik * xn + c.xi3))
            M = M + space.edge_form(edge, "dt", "v", -ik * xt)
            M = M + space.edge_form(edge, "v", "v", -c.m1_conj * ik)
            M = M + space.edge_form(edge, "dn", "dt", -xt)
            M = M + space.edge_form(edge, "dt", "dt", xn)
    return M.tocsr()


def _field_at(space: SplineSpace, field: AffineField, y):
    n, g1, g2 = evaluate_field(field, y, space.x1, space.x2)
    divxn = div_x_n(n, g1, g2, space.x1, space.x2)
    n_edges = [evaluate_field(field, y, e.x1, e.x2)[0] for e in space.edges]
    return n, divxn, n_edges


DataFunc = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _default_f(x1, x2):
    return np.ones_like(x1)


def _default_g(x1, x2):
    return np.zeros_like(x1)


def assemble_rhs(space: SplineSpace, c: FormCoefficients, n, f_vol, g_edges) -> np.ndarray:
    """Load vector of the antilinear functional for sampled data."""
    f_vol = np.asarray(f_vol, dtype=complex)
    rhs = (space.load("dx", space.x1 * f_vol) + space.load("dy", space.x2 * f_vol)
           + space.load("v", (c.m1_conj - c.A * n) * f_vol)
           - space.load("lap", c.A / c.k ** 2 * f_vol))
    for edge, g in zip(space.edges, g_edges):
        g = np.asarray(g, dtype=complex)
        rhs = rhs + (space.edge_load(edge, "dn", edge.x_dot_n * g)
                     + space.edge_load(edge, "dt", edge.x_dot_t * g)
                     + space.edge_load(edge, "v", c.m1_conj * g))
    return rhs


@dataclass
class AssembledSystem:
    space: SplineSpace
    matrix: sp.csr_matrix
    rhs: np.ndarray
    coeffs: FormCoefficients
    y: np.ndarray

    @property
    def xi1(self):
        return self.coeffs.xi1

    @property
    def xi2(self):
        return self.coeffs.xi2

    @property
    def xi3(self):
        return self.coeffs.xi3


def assemble_system(space: SplineSpace, field: AffineField, y, k: float,
                    params: StabilizationParams, f: DataFunc | None = None,
                    g: DataFunc | None = None) -> AssembledSystem:
    """Assemble matrix and load vector at parameter ``y``.

    ``f`` and ``g`` are callables of ``(x1, x2)`` (``g`` is sampled on the
    boundary); they default to ``f = 1`` and ``g = 0``.
    """
    f = f or _default_f
    g = g or _default_g
    y = np.asarray(y, dtype=float).reshape(-1)
    c = FormCoefficients.from_params(k, space.geom.L, params)
    n, divxn, n_edges = _field_at(space, field, y)
    M = _field_terms(space, c, n, divxn, n_edges, static=True, quadratic=True)
    rhs = assemble_rhs(space, c, n, f(space.x1, space.x2),
                       [g(e.x1, e.x2) for e in space.edges])
    if not (np.all(np.isfinite(M.data)) and np.all(np.isfinite(rhs))):
        raise NumericalFailure("non-finite entries in the assembled system")
    return AssembledSystem(space, M, rhs, c, y)


class ParametricOperator:
    """Affine-quadratic representation ``M(y) = M0 + sum_j y_j M_j + Q(n(y)^2)``.

    Precomputes everything independent of ``y`` so that each sample costs a
    few vector operations plus one sparse LU factorization. The load vector
    assumes ``y``-independent data ``f`` and ``g``.
    """

    def __init__(self, space: SplineSpace, field: AffineField, s: int, k: float,
                 params: StabilizationParams, f: DataFunc | None = None,
                 g: DataFunc | None = None):
        self.space, self.field, self.s, self.k, self.params = space, field, s, k, params
        c = self.coeffs = FormCoefficients.from_params(k, space.geom.L, params)
        f = f or _default_f
        g = g or _default_g
        zero = np.zeros(0)
        n0, divxn0, nb0 = _field_at(space, field, zero)
        self.n0 = n0
        self.data0 = space.aligned(
            _field_terms(space, c, n0, divxn0, nb0, static=True, quadratic=False))
        val, d1, d2 = field.modes(space.x1, space.x2, s)
        self.psi = np.ascontiguousarray(val)
        lin = []
        for j in range(s):
            divxpsi = div_x_n(val[j], d1[j], d2[j], space.x1, space.x2)
            pb = [field.modes(e.x1, e.x2, s)[0][j] for e in space.edges]
            lin.append(space.aligned(
                _field_terms(space, c, val[j], divxpsi, pb, static=False, quadratic=False)))
        self.data_lin = np.array(lin).reshape(s, -1)
        self._vv = _vv_operator(space)
        self.f_vol = np.asarray(f(space.x1, space.x2), dtype=complex)
        self.g_edges = [np.asarray(g(e.x1, e.x2), dtype=complex) for e in space.edges]
        self.rhs0 = assemble_rhs(space, c, n0, self.f_vol, self.g_edges)
        self.rhs_lin = np.array(
            [-space.load("v", c.A * self.psi[j] * self.f_vol) for j in range(s)]).reshape(s, -1)

    def n_at(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return self.n0 + y @ self.psi if self.s else self.n0

    def matrix(self, y) -> sp.csr_matrix:
        y = np.asarray(y, dtype=float).reshape(-1)
        if y.size != self.s:
            raise InvalidArgument(f"expected {self.s} parameters, got {y.size}")
        n = self.n_at(y)
        data = self.data0 + (y @ self.data_lin if self.s else 0)
        data = data + self._vv @ (self.coeffs.A * self.k ** 2 * n * n * self.space.weights)
        return self.space.from_data(data)

    def rhs(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float).reshape(-1)
        return self.rhs0 + (y @ self.rhs_lin if self.s else 0)

    def system(self, y) -> AssembledSystem:
        return AssembledSystem(self.space, self.matrix(y), self.rhs(y), self.coeffs,
                               np.asarray(y, dtype=float).reshape(-1))


def _vv_operator(space: SplineSpace) -> sp.csr_matrix:
    """Linear map from weighted coefficient samples to ``form('v','v',.)`` data."""
    P = space.ops["v"].tocsr()
    P.sort_indices()
    counts = np.diff(P.indptr)
    nb = counts.max()
    if not np.all(counts == nb):
        # points on span boundaries can lose a basis function; fall back to padding
        idx = np.zeros((P.shape[0], nb), dtype=np.int64)
        vals = np.zeros((P.shape[0], nb))
        for q in range(P.shape[0]):
            sl = slice(P.indptr[q], P.indptr[q + 1])
            idx[q, :counts[q]] = P.indices[sl]
            vals[q, :counts[q]] = P.data[sl]
    else:
        idx = P.indices.reshape(-1, nb)
        vals = P.data.reshape(-1, nb)
    pat = space.pattern
    keys = (np.repeat(np.arange(space.dof), np.diff(pat.indptr)) * space.dof
            + pat.indices).astype(np.int64)
    # test index first (row), trial second; symmetric anyway
    I = idx[:, :, None]
    J = idx[:, None, :]
    pos = np.searchsorted(keys, (I * space.dof + J).ravel())
    V = (vals[:, :, None] * vals[:, None, :]).ravel()
    Q = np.broadcast_to(np.arange(P.shape[0])[:, None, None], I.shape[:1] + (nb, nb)).ravel()
    return sp.csr_matrix((V, (pos, Q)), shape=(keys.size, P.shape[0]))


# -- norms -------------------------------------------------------------------


def assemble_vnorm_gram(space: SplineSpace, k: float, geom: DomainGeometry | None = None
                        ) -> sp.csr_matrix:
    """Gram matrix of the wavenumber-weighted graph norm."""
    geom = geom or space.geom
    L = geom.L
    G = (k ** 2 * space.form("v", "v", 1.0) + space.form("dx", "dx", 1.0)
         + space.form("dy", "dy", 1.0) + space.form("lap", "lap", 1.0 / k ** 2))
    for e in space.edges:
        G = G + L * (k ** 2 * space.edge_form(e, "v", "v", 1.0)
                     + space.edge_form(e, "dt", "dt", 1.0)
                     + space.edge_form(e, "dn", "dn", 1.0))
    G = G.tocsr()
    return 0.5 * (G + G.T)


def vnorm(gram: sp.spmatrix, w: np.ndarray) -> float:
    return math.sqrt(max(float(np.real(np.vdot(w, gram @ w))), 0.0))


def data_norm(space: SplineSpace, f: DataFunc | None = None, g: DataFunc | None = None) -> float:
    """``L ||f||_L2(D) + sqrt(L) ||g||_L2(boundary)``."""
    f = f or _default_f
    g = g or _default_g
    fn = math.sqrt(float(np.sum(space.weights * np.abs(f(space.x1, space.x2)) ** 2)))
    gn = math.sqrt(sum(float(np.sum(e.weights * np.abs(g(e.x1, e.x2)) ** 2))
                       for e in space.edges))
    L = space.geom.L
    return L * fn + math.sqrt(L) * gn


# -- solve -------------------------------------------------------------------


@dataclass
class Solution:
    space: SplineSpace
    coeffs: np.ndarray
    lu: object = dc_field(repr=False)
    system: AssembledSystem | None = dc_field(default=None, repr=False)

    def residual(self) -> float:
        r = self.system.matrix @ self.coeffs - self.system.rhs
        nb = np.linalg.norm(self.system.rhs)
        return float(np.linalg.norm(r) / nb) if nb else float(np.linalg.norm(r))

    def resolve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve with the retained factorization for another right-hand side."""
        return self.lu.solve(np.asarray(rhs, dtype=complex))


def factorize(matrix: sp.spmatrix):
    try:
        lu = spla.splu(sp.csc_matrix(matrix, dtype=complex))
    except RuntimeError as exc:
        raise NumericalFailure(f"factorization failed: {exc}") from exc
    return lu


def solve(system: AssembledSystem) -> Solution:
    """LU-factorize (partial pivoting) and solve the Galerkin system."""
    lu = factorize(system.matrix)
    u = lu.solve(np.asarray(system.rhs, dtype=complex))
    if not np.all(np.isfinite(u)):
        raise NumericalFailure("non-finite solution; matrix numerically singular")
    return Solution(system.space, u, lu, system)


# -- manufactured data and functionals --------------------------------------


@dataclass(frozen=True)
class PlaneWave:
    """``u(x) = exp(i k d.x)`` with direction ``d = (cos phi, sin phi)``."""

    k: float
    phi: float = 0.0

    @property
    def direction(self):
        return math.cos(self.phi), math.sin(self.phi)

    def value(self, x1, x2):
        d1, d2 = self.direction
        return np.exp(1j * self.k * (d1 * np.asarray(x1) + d2 * np.asarray(x2)))

    def grad(self, x1, x2):
        d1, d2 = self.direction
        u = self.value(x1, x2)
        return 1j * self.k * d1 * u, 1j * self.k * d2 * u

    def laplacian(self, x1, x2):
        return -self.k ** 2 * self.value(x1, x2)

    def integral(self, side: float) -> complex:
        """Exact ``int_D u`` over the centred square."""
        out = 1.0 + 0j
        for dj in self.direction:
            c = self.k * dj
            out *= side if abs(c) < 1e-14 else 2 * math.sin(c * side / 2) / c
        return out


@dataclass(frozen=True)
class Manufactured:
    u_exact: PlaneWave
    f: DataFunc
    g: DataFunc


def manufactured_problem(k: float, phi: float, field: AffineField, y) -> Manufactured:
    """Data making the plane wave an exact solution of the Helmholtz problem.

    ``f = k^2 (1 - n) u`` so that ``Lap u + k^2 n u = -f``, and
    ``g = (i k d.n - i k) u`` on each edge.
    """
    wave = PlaneWave(k, phi)
    yv = np.asarray(y, dtype=float).reshape(-1)
    h = field.side / 2

    def f(x1, x2):
        n = evaluate_field(field, yv, x1, x2)[0]
        return k ** 2 * (1 - n) * wave.value(x1, x2)

    def g(x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        # outward normal from the edge the point lies on
        n1 = np.where(np.isclose(x1, h), 1.0, np.where(np.isclose(x1, -h), -1.0, 0.0))
        n2 = np.where(n1 == 0, np.where(np.isclose(x2, h), 1.0, -1.0), 0.0)
        d1, d2 = wave.direction
        return (1j * k * (d1 * n1 + d2 * n2) - 1j * k) * wave.value(x1, x2)

    return Manufactured(wave, f, g)


def vnorm_error(space: SplineSpace, coeffs: np.ndarray, exact: PlaneWave, k: float) -> float:
    """``||u_exact - u_h||_V`` by quadrature with exact derivatives."""
    L = space.geom.L
    X1, X2, W = space.x1, space.x2, space.weights
    ev = {op: space.ops[op] @ coeffs for op in ("v", "dx", "dy", "lap")}
    gx, gy = exact.grad(X1, X2)
    tot = (k ** 2 * np.sum(W * np.abs(exact.value(X1, X2) - ev["v"]) ** 2)
           + np.sum(W * (np.abs(gx - ev["dx"]) ** 2 + np.abs(gy - ev["dy"]) ** 2))
           + np.sum(W * np.abs(exact.laplacian(X1, X2) - ev["lap"]) ** 2) / k ** 2)
    for e in space.edges:
        gx, gy = exact.grad(e.x1, e.x2)
        n1, n2 = e.normal
        dn = gx * n1 + gy * n2
        dt = gx * abs(n2) + gy * abs(n1)
        tot += L * np.sum(e.weights * (
            k ** 2 * np.abs(exact.value(e.x1, e.x2) - e.ops["v"] @ coeffs) ** 2
            + np.abs(dt - e.ops["dt"] @ coeffs) ** 2
            + np.abs(dn - e.ops["dn"] @ coeffs) ** 2))
    return math.sqrt(float(tot))


@dataclass(frozen=True)
class Functional:
    """``G(u) = int_D w(x) u(x) dx``; ``weight=None`` is the plain domain integral."""

    kind: str = "mean"
    weight: DataFunc | None = None

    def vector(self, space: SplineSpace) -> np.ndarray:
        w = 1.0 if self.weight is None else self.weight(space.x1, space.x2)
        return space.load("v", w)

    def dual_bound(self, space: SplineSpace, k: float) -> float:
        """Bound on ``||G||_{V*}`` from ``|G(u)| <= ||w||_L2 ||u||_L2 <= ||w||_L2 ||u||_V / k``."""
        if self.weight is None:
            wn = math.sqrt(space.geom.area)
        else:
            wn = math.sqrt(float(np.sum(space.weights * np.abs(self.weight(space.x1, space.x2)) ** 2)))
        return wn / k


def apply_functional(G: Functional, sol: Solution | np.ndarray, space: SplineSpace | None = None
                     ) -> complex:
    if isinstance(sol, Solution):
        space, coeffs = sol.space, sol.coeffs
    else:
        coeffs = sol
    return complex(G.vector(space) @ coeffs)
