import io
import math

import numpy as np
import pytest
import scipy.io
from hypothesis import given, settings, strategies as st

from helmholtz_qmc.certificates import certify, dual_norm, min_coercivity_eigenvalue
from helmholtz_qmc.errors import InvalidArgument
from helmholtz_qmc.fem import (Functional, ParametricOperator, PlaneWave, apply_functional,
                               assemble_system, assemble_vnorm_gram, build_space,
                               manufactured_problem, solve, vnorm, vnorm_error)
from helmholtz_qmc.field import AffineField, evaluate_field, verify_A1
from helmholtz_qmc.geometry import compute_constants, make_square_domain, select_parameters


def setup(p=2, m_e=4, kL=2.0, amp=0.2, s=4, side=1.0):
    geom = make_square_domain(side)
    field = AffineField(1.0, amp, 4.0, s, side)
    bounds = verify_A1(field)
    params = select_parameters(bounds, geom)
    k = kL / geom.L
    consts = compute_constants(k, params, bounds, geom)
    return build_space(p, m_e, geom), field, params, k, consts


def gauss_grid(side, m_e, npts):
    x, w = np.polynomial.legendre.leggauss(npts)
    br = np.linspace(-side / 2, side / 2, m_e + 1)
    h = side / m_e
    pts = ((br[:-1] + br[1:])[:, None] / 2 + h / 2 * x).ravel()
    wts = np.tile(h / 2 * w, m_e)
    return pts, wts


class Evaluated:
    """Values and derivatives of a spline function at scattered points."""

    def __init__(self, space, coef, x1, x2):
        self.v = space.evaluate(coef, x1, x2, "v")
        self.dx = space.evaluate(coef, x1, x2, "dx")
        self.dy = space.evaluate(coef, x1, x2, "dy")
        self.lap = space.evaluate(coef, x1, x2, "lap")


def oracle_forms(space, field, y, k, params, v, w, f=1.0):
    """Scalar quadrature of the sesquilinear form and the load functional.

    Uses the same Gauss rule size as the assembler so that the comparison
    isolates the bookkeeping of the terms from quadrature error in ``n``.
    """
    side, L = space.geom.side, space.geom.L
    kL = k * L
    a1, a2, b1, b2, A = params.alpha1, params.alpha2, params.beta1_hat, params.beta2_hat, params.A
    q, qw = gauss_grid(side, space.m_e, space.p + 2)
    X1, X2 = [a.ravel() for a in np.meshgrid(q, q, indexing="ij")]
    W = np.outer(qw, qw).ravel()
    n, n1, n2 = evaluate_field(field, y, X1, X2)
    V, Wf = Evaluated(space, v, X1, X2), Evaluated(space, w, X1, X2)
    Lv = V.lap + k ** 2 * n * V.v
    Lw = Wf.lap + k ** 2 * n * Wf.v
    M2v = X1 * V.dx + X2 * V.dy - 1j * kL * b2 * V.v + a2 * V.v
    xi1 = 2 - 2 + a1 + a2 + 1j * kL * (b1 - b2)
    xi2 = -a1 - a2 - 1j * kL * (b1 - b2)
    div_xn = 2 * n + X1 * n1 + X2 * n2
    vol = ((M2v + A / k ** 2 * Lv) * np.conj(Lw)
           + xi1 * (V.dx * np.conj(Wf.dx) + V.dy * np.conj(Wf.dy))
           + xi2 * k ** 2 * n * V.v * np.conj(Wf.v)
           + k ** 2 * div_xn * V.v * np.conj(Wf.v))
    B = np.sum(W * vol)
    M1w_c = np.conj(X1 * Wf.dx + X2 * Wf.dy - 1j * kL * b1 * Wf.v + a1 * Wf.v)
    G = np.sum(W * (M1w_c - A / k ** 2 * np.conj(Lw)) * f)

    h = side / 2
    for nx, ny in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        if nx:
            e1, e2 = np.full(q.size, nx * h), q
        else:
            e1, e2 = q, np.full(q.size, ny * h)
        ne = evaluate_field(field, y, e1, e2)[0]
        Ve, We = Evaluated(space, v, e1, e2), Evaluated(space, w, e1, e2)
        tx, ty = -ny, nx
        dtv = Ve.dx * tx + Ve.dy * ty
        dtw = We.dx * tx + We.dy * ty
        dnw = We.dx * nx + We.dy * ny
        xt = e1 * tx + e2 * ty
        xn = e1 * nx + e2 * ny
        M1w = e1 * We.dx + e2 * We.dy - 1j * kL * b1 * We.v + a1 * We.v
        integrand = (np.conj(M1w) * 1j * k * Ve.v
                     + (xt * dtv - 1j * kL * b2 * Ve.v + a2 * Ve.v) * np.conj(dnw)
                     + xn * (k ** 2 * ne * Ve.v * np.conj(We.v) - dtv * np.conj(dtw)))
        B -= np.sum(qw * integrand)
    return B, G


# -- space -------------------------------------------------------------------


@pytest.mark.parametrize("p,m_e,dof", [(2, 4, 36), (3, 8, 121)])
def test_dof_count(p, m_e, dof):
    assert build_space(p, m_e, make_square_domain(1.0)).dof == dof


def test_degree_one_rejected():
    with pytest.raises(InvalidArgument):
        build_space(1, 4, make_square_domain(1.0))


def test_partition_of_unity():
    space = build_space(3, 5, make_square_domain(2.0))
    total = np.asarray(space.ops["v"].sum(axis=1)).ravel()
    np.testing.assert_allclose(total, 1.0, atol=1e-12)


def test_constant_interpolation():
    space = build_space(2, 6, make_square_domain(1.0))
    c = space.interpolate(lambda x1, x2: np.ones_like(x1))
    pts = np.random.default_rng(1).uniform(-0.5, 0.5, (50, 2))
    np.testing.assert_allclose(space.evaluate(c, pts[:, 0], pts[:, 1]), 1.0, atol=1e-13)


def test_quadrature_size():
    space = build_space(2, 4, make_square_domain(1.0))
    assert space.q1.size == 4 * 4
    assert space.weights.sum() == pytest.approx(1.0, rel=1e-14)


# -- forms -------------------------------------------------------------------


@pytest.mark.parametrize("p", [2, 3])
def test_form_matches_scalar_oracle(p):
    space, field, params, k, _ = setup(p=p, m_e=4, kL=3.0)
    rng = np.random.default_rng(7)
    y = rng.uniform(-0.5, 0.5, 4)
    sysm = assemble_system(space, field, y, k, params)
    for _ in range(3):
        v = rng.standard_normal(space.dof) + 1j * rng.standard_normal(space.dof)
        w = rng.standard_normal(space.dof) + 1j * rng.standard_normal(space.dof)
        B_ref, G_ref = oracle_forms(space, field, y, k, params, v, w)
        B = np.vdot(w, sysm.matrix @ v)
        G = np.vdot(w, sysm.rhs)
        assert abs(B - B_ref) <= 1e-10 * abs(B_ref)
        assert abs(G - G_ref) <= 1e-10 * abs(G_ref)


def test_assembly_constants():
    space, field, params, k, _ = setup()
    sysm = assemble_system(space, field, np.zeros(4), k, params)
    kL = k * space.geom.L
    db = params.beta1_hat - params.beta2_hat
    assert sysm.xi1 == complex(params.alpha1 + params.alpha2, kL * db)
    assert sysm.xi2 == complex(-params.alpha1 - params.alpha2, -kL * db)
    assert sysm.xi3 == complex(params.alpha2, -kL * params.beta2_hat)


def test_parametric_operator_matches_direct():
    space, field, params, k, _ = setup(m_e=6)
    op = ParametricOperator(space, field, 4, k, params)
    rng = np.random.default_rng(2)
    for _ in range(3):
        y = rng.uniform(-0.5, 0.5, 4)
        direct = assemble_system(space, field, y, k, params)
        diff = abs(op.matrix(y) - direct.matrix).max()
        assert diff <= 1e-12 * abs(direct.matrix).max()
        np.testing.assert_allclose(op.rhs(y), direct.rhs, rtol=1e-12, atol=1e-14)


def test_parametric_operator_wrong_length():
    space, field, params, k, _ = setup()
    with pytest.raises(InvalidArgument):
        ParametricOperator(space, field, 4, k, params).matrix(np.zeros(3))


# -- V-norm ------------------------------------------------------------------


@pytest.mark.parametrize("k", [1.0, 5.0])
def test_gram_constant_function(k):
    geom = make_square_domain(1.0)
    space = build_space(2, 4, geom)
    c = 0.7
    w = space.interpolate(lambda x1, x2: c * np.ones_like(x1))
    gram = assemble_vnorm_gram(space, k)
    assert vnorm(gram, w) ** 2 == pytest.approx(k ** 2 * c ** 2 * (1 + 4 * geom.L), rel=1e-12)


def test_gram_symmetric_positive():
    space = build_space(2, 4, make_square_domain(1.0))
    G = assemble_vnorm_gram(space, 3.0).toarray()
    assert np.abs(G - G.T).max() <= 1e-12 * np.abs(G).max()
    assert np.linalg.eigvalsh(G).min() > 0


def test_gram_dominates_l2():
    space = build_space(2, 4, make_square_domain(1.0))
    k = 3.0
    gram = assemble_vnorm_gram(space, k)
    M = space.form("v", "v", 1.0)
    rng = np.random.default_rng(3)
    for _ in range(20):
        w = rng.standard_normal(space.dof) + 1j * rng.standard_normal(space.dof)
        l2 = math.sqrt(np.real(np.vdot(w, M @ w)))
        assert vnorm(gram, w) >= k * l2


def test_gram_scaling_blocks():
    geom = make_square_domain(1.0)
    space = build_space(2, 4, geom)
    diff = (assemble_vnorm_gram(space, 2.0) - assemble_vnorm_gram(space, 1.0)).toarray()
    mass = space.form("v", "v", 1.0) + geom.L * sum(space.edge_form(e, "v", "v", 1.0)
                                                    for e in space.edges)
    expect = 3.0 * mass.toarray() - 0.75 * space.form("lap", "lap", 1.0).toarray()
    assert np.abs(diff - expect).max() <= 1e-12 * np.abs(diff).max()


# -- certificates -----------------------------------------------------------


@pytest.mark.parametrize("kL", [2.0, 8.0])
def test_certificates_small_mesh(kL):
    space, field, params, k, consts = setup(m_e=6, kL=kL, s=4)
    rng = np.random.default_rng(11)
    rep = certify(space, field, rng.uniform(-0.5, 0.5, 4), k, params, consts, rng, 30)
    assert rep.passed
    assert rep.coer >= 1 and rep.cont <= 1 and rep.func <= 1


def test_generalized_eigenvalue_above_c_coer():
    space, field, params, k, consts = setup(m_e=6, kL=4.0)
    lam = min_coercivity_eigenvalue(space, field, np.full(4, 0.3), k, params)
    assert lam >= consts.c_coer * (1 - 1e-6)


def test_exact_dual_norm_below_bound():
    space, field, params, k, consts = setup(m_e=6)
    sysm = assemble_system(space, field, np.zeros(4), k, params)
    L = space.geom.L
    # f = 1 on the unit square, g = 0
    assert dual_norm(space, sysm.rhs, k) <= consts.c_func * L * 1.0


# -- solve -------------------------------------------------------------------


def test_residual_small():
    space, field, params, k, _ = setup(m_e=8)
    sol = solve(assemble_system(space, field, np.full(4, -0.2), k, params))
    assert sol.residual() < 1e-10


def test_zero_data_zero_solution():
    space, field, params, k, _ = setup()
    zero = lambda x1, x2: np.zeros_like(x1)
    sol = solve(assemble_system(space, field, np.zeros(4), k, params, zero, zero))
    assert np.all(sol.coeffs == 0)


def test_resolve_reuses_factorization():
    space, field, params, k, _ = setup()
    sysm = assemble_system(space, field, np.zeros(4), k, params)
    sol = solve(sysm)
    np.testing.assert_allclose(sol.resolve(2 * sysm.rhs), 2 * sol.coeffs, rtol=1e-12)


# -- manufactured solution --------------------------------------------------


def test_manufactured_homogeneous_medium():
    field = AffineField(1.0, 0.0, 4.0, 0, 1.0)
    man = manufactured_problem(5.0, 0.3, field, [])
    x = np.linspace(-0.5, 0.5, 9)
    assert np.all(man.f(x, x) == 0)


def test_manufactured_right_edge_data():
    field = AffineField(1.0, 0.1, 4.0, 2, 1.0)
    man = manufactured_problem(5.0, 0.0, field, [0.1, 0.2])
    x2 = np.linspace(-0.5, 0.5, 9)
    np.testing.assert_allclose(man.g(np.full(9, 0.5), x2), 0, atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(0.5, 20),
       st.lists(st.floats(-0.5, 0.5), min_size=3, max_size=3))
def test_manufactured_strong_residual(phi, k, y):
    field = AffineField(1.0, 0.2, 3.0, 3, 1.0)
    man = manufactured_problem(k, phi, field, y)
    pts = np.random.default_rng(0).uniform(-0.5, 0.5, (10, 2))
    u = man.u_exact
    n = evaluate_field(field, y, pts[:, 0], pts[:, 1])[0]
    res = u.laplacian(pts[:, 0], pts[:, 1]) + k ** 2 * n * u.value(pts[:, 0], pts[:, 1]) \
        + man.f(pts[:, 0], pts[:, 1])
    assert np.abs(res).max() <= 1e-12 * k ** 2
    # Robin condition du/dn - i k u = g on the bottom edge
    xb = pts[:, 0]
    yb = np.full(10, -0.5)
    dn = -u.grad(xb, yb)[1]
    np.testing.assert_allclose(dn - 1j * k * u.value(xb, yb), man.g(xb, yb), atol=1e-12 * k)


def test_plane_wave_integral():
    wave = PlaneWave(3.0, 0.4)
    x, w = gauss_grid(1.0, 4, 8)
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    quad = np.sum(np.outer(w, w) * wave.value(X1, X2))
    assert wave.integral(1.0) == pytest.approx(quad, rel=1e-13)


def test_manufactured_convergence_p2():
    geom = make_square_domain(1.0)
    field = AffineField(1.0, 0.0, 4.0, 0, 1.0)
    bounds = verify_A1(field)
    params = select_parameters(bounds, geom)
    k = 2.0 / geom.L
    man = manufactured_problem(k, 0.0, field, [])
    errs = []
    for m in (4, 8, 16):
        space = build_space(2, m, geom)
        sol = solve(assemble_system(space, field, [], k, params, man.f, man.g))
        errs.append(vnorm_error(space, sol.coeffs, man.u_exact, k))
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(rates > 0.75)


# -- functional -------------------------------------------------------------


def test_mean_of_one():
    space = build_space(2, 4, make_square_domain(1.0))
    one = space.interpolate(lambda x1, x2: np.ones_like(x1))
    assert apply_functional(Functional(), one, space) == pytest.approx(1.0, abs=1e-13)


def test_functional_linear():
    space = build_space(2, 4, make_square_domain(1.0))
    rng = np.random.default_rng(5)
    u, v = rng.standard_normal((2, space.dof)) + 1j * rng.standard_normal((2, space.dof))
    G = Functional()
    lhs = apply_functional(G, u + v, space)
    assert abs(lhs - apply_functional(G, u, space) - apply_functional(G, v, space)) <= 1e-13 * abs(lhs)


def test_functional_dual_bound():
    space = build_space(2, 4, make_square_domain(1.0))
    k = 4.0
    gram = assemble_vnorm_gram(space, k)
    G = Functional()
    bound = G.dual_bound(space, k)
    assert bound == pytest.approx(1 / k)
    rng = np.random.default_rng(6)
    for _ in range(100):
        u = rng.standard_normal(space.dof) + 1j * rng.standard_normal(space.dof)
        assert abs(apply_functional(G, u, space)) <= bound * vnorm(gram, u) * (1 + 1e-12)


def test_matrix_market_round_trip():
    space, field, params, k, _ = setup()
    M = assemble_system(space, field, np.zeros(4), k, params).matrix
    buf = io.BytesIO()
    scipy.io.mmwrite(buf, M)
    assert b"complex general" in buf.getvalue()[:100]
    back = scipy.io.mmread(io.BytesIO(buf.getvalue()))
    assert abs(back - M).max() <= 1e-15 * abs(M).max()
