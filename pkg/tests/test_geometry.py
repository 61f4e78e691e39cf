import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helmholtz_qmc.errors import AssumptionViolation, InvalidArgument
from helmholtz_qmc.geometry import (DomainGeometry, FieldBounds, compute_constants,
                                    make_square_domain, select_parameters)

R2 = 1 / math.sqrt(2)


def test_unit_square_geometry():
    g = make_square_domain(1.0)
    assert g.L == pytest.approx(R2, rel=1e-15)
    assert g.gamma_hat == pytest.approx(R2, rel=1e-15)
    assert g.mu_hat == g.gamma_hat
    assert g.d == 2


def test_star_constants_scale_invariant():
    g = make_square_domain(2.0)
    assert g.L == pytest.approx(math.sqrt(2), rel=1e-15)
    assert g.gamma_hat == pytest.approx(R2, rel=1e-15)


@pytest.mark.parametrize("side", [0.0, -1.0])
def test_degenerate_side(side):
    with pytest.raises(InvalidArgument):
        make_square_domain(side)


def test_geometry_rejects_bad_star_constants():
    with pytest.raises(InvalidArgument):
        DomainGeometry(side=1, L=1, gamma_hat=0.8, mu_hat=0.5)


def test_select_parameters_example():
    bounds = FieldBounds(n_min=0.5, n_max=1.5, b_min=1.0, b_max=2.0)
    p = select_parameters(bounds, make_square_domain(1.0))
    assert p.alpha1 == pytest.approx(1 / 6, rel=1e-14)
    assert p.A == pytest.approx(1 / 18, rel=1e-14)
    # n_max mu/2 + 2 mu^2/gamma + gamma/2 at gamma = mu = 1/sqrt(2)
    assert p.beta1_hat == pytest.approx(2.2980970388562794, rel=1e-14)
    assert p.alpha2 == p.alpha1 and p.beta2_hat == p.beta1_hat


def test_select_parameters_second_example():
    bounds = FieldBounds(n_min=1.0, n_max=1.0, b_min=2.0, b_max=2.0)
    p = select_parameters(bounds, make_square_domain(1.0))
    assert p.alpha1 == pytest.approx(0.5)
    assert p.A == pytest.approx(0.25)


def test_select_parameters_boundary_case_d3():
    bounds = FieldBounds(n_min=1.0, n_max=1.0, b_min=1.0, b_max=1.0, d=3)
    geom = DomainGeometry(side=1.0, L=math.sqrt(3) / 2, d=3, gamma_hat=1 / math.sqrt(3),
                          mu_hat=1 / math.sqrt(3))
    with pytest.raises(AssumptionViolation):
        select_parameters(bounds, geom)


def test_overrides_are_validated():
    bounds = FieldBounds(n_min=0.5, n_max=1.5, b_min=1.0, b_max=2.0)
    with pytest.raises(AssumptionViolation):
        select_parameters(bounds, make_square_domain(1.0), alpha1=0.5)


def test_coercivity_constant_example():
    bounds = FieldBounds(n_min=0.5, n_max=1.5, b_min=1.0, b_max=2.0)
    geom = make_square_domain(1.0)
    p = select_parameters(bounds, geom)
    c = compute_constants(2.0, p, bounds, geom)
    assert c.c_coer == pytest.approx(1 / 36, rel=1e-14)


def test_coercivity_independent_of_k():
    bounds = FieldBounds(n_min=0.5, n_max=1.5, b_min=1.0, b_max=2.0)
    geom = make_square_domain(1.0)
    p = select_parameters(bounds, geom)
    vals = {compute_constants(kL / geom.L, p, bounds, geom).c_coer for kL in (1, 10, 100, 1e4)}
    assert len(vals) == 1


def test_functional_constant_limit():
    bounds = FieldBounds(n_min=0.5, n_max=1.5, b_min=1.0, b_max=2.0)
    geom = make_square_domain(1.0)
    p = select_parameters(bounds, geom)
    c = compute_constants(1e12, p, bounds, geom)
    assert c.c_func == pytest.approx(math.sqrt(3) * p.beta1_hat, rel=1e-10)


def test_regularity_constant_formula():
    bounds = FieldBounds(n_min=0.9, n_max=1.1, b_min=1.8, b_max=2.2)
    geom = make_square_domain(1.0)
    p = select_parameters(bounds, geom)
    c = compute_constants(7.0, p, bounds, geom)
    expect = max(c.c_r / c.c_coer + p.A / (c.kL * c.c_func), 2 * c.c_r / c.c_coer,
                 math.sqrt(2 * p.A / c.c_coer))
    assert c.c_regu == expect


def test_nonpositive_wavenumber():
    bounds = FieldBounds(n_min=0.9, n_max=1.1, b_min=1.8, b_max=2.2)
    geom = make_square_domain(1.0)
    p = select_parameters(bounds, geom)
    with pytest.raises(InvalidArgument):
        compute_constants(0.0, p, bounds, geom)


bounds_strategy = st.tuples(
    st.floats(0.1, 5.0),   # n_min
    st.floats(0.0, 3.0),   # n_max - n_min
    st.floats(0.1, 10.0),  # b_min
    st.floats(0.0, 5.0),   # b_max - b_min
).map(lambda t: FieldBounds(t[0], t[0] + t[1], t[2], t[2] + t[3]))


@settings(max_examples=200, deadline=None)
@given(bounds_strategy)
def test_select_parameters_round_trip(bounds):
    geom = make_square_domain(1.0)
    p = select_parameters(bounds, geom)
    p.check(bounds, geom)
    assert compute_constants(3.0, p, bounds, geom).c_coer > 0


@settings(max_examples=50, deadline=None)
@given(bounds_strategy)
def test_continuity_grows_like_kL(bounds):
    geom = make_square_domain(1.0)
    p = select_parameters(bounds, geom)
    kls = np.logspace(0, 4, 25)
    ratio = np.array([compute_constants(kl / geom.L, p, bounds, geom).c_cont / kl for kl in kls])
    assert ratio.min() > 0 and np.isfinite(ratio.max())
    # asymptotically linear: the ratio settles to a positive limit
    assert ratio[-1] == pytest.approx(ratio[-2], rel=1e-2)


@settings(max_examples=50, deadline=None)
@given(bounds_strategy)
def test_functional_constant_monotone(bounds):
    geom = make_square_domain(1.0)
    p = select_parameters(bounds, geom)
    kls = np.logspace(0, 4, 40)
    cf = np.array([compute_constants(kl / geom.L, p, bounds, geom).c_func for kl in kls])
    assert np.all(np.diff(cf) <= 1e-12 * cf[:-1])
    small = np.logspace(-4, 0, 20)
    prod = [compute_constants(kl / geom.L, p, bounds, geom).c_func * kl for kl in small]
    assert max(prod) < 10 * (1 + p.A + p.alpha1 + p.A * bounds.n_max + p.beta1_hat)
