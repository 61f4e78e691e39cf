"""End-to-end expected-value estimation and the convergence studies.

A :class:`Problem` bundles geometry, field, verified bounds, stabilization
parameters, constants and the spline space built from a :class:`RunConfig`.
Its :meth:`Problem.integrand` returns a vectorized ``F(Y)`` for ``Y`` of
shape ``(n, s)``, either the PDE quantity of interest ``G(u_{s,h}(y))`` or
the smooth product test integrand.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field as dc_field
from functools import cached_property
from typing import Callable

import numpy as np

from .config import RunConfig
from .errors import InvalidArgument, NumericalFailure
from .fem import (Functional, ParametricOperator, assemble_rhs, build_space, factorize,
                  manufactured_problem, vnorm_error, assemble_system, solve, apply_functional)
from .field import AffineField, verify_A1
from .geometry import compute_constants, make_square_domain, select_parameters
from .qmc import (LatticeRule, cbc_lattice, cbc_poly_lattice, interlacing_factor, lattice_points,
                  lattice_rate, make_shifts, next_prime, pod_weights, prime_near,
                  spod_weights)


def product_integrand(Y: np.ndarray) -> np.ndarray:
    """``prod_j (1 + a_j (y_j^2 - 1/12))`` with ``a_j = j^-3``; exact integral 1."""
    Y = np.atleast_2d(Y)
    a = np.arange(1, Y.shape[1] + 1, dtype=float) ** -3.0
    return np.prod(1 + a * (Y ** 2 - 1.0 / 12.0), axis=1)


def product_upsilon(s: int) -> np.ndarray:
    """Per-coordinate derivative scale of the product integrand (``a_j``)."""
    return np.arange(1, s + 1, dtype=float) ** -3.0


def weighted_functional(side: float) -> Functional:
    def w(x1, x2):
        return np.cos(np.pi * x1 / side) * np.cos(np.pi * x2 / side)
    return Functional("weighted", w)


class Problem:
    """Deterministic ingredients of a run; the ``y``-loop lives in :meth:`integrand`."""

    def __init__(self, config: RunConfig, n_modes: int | None = None, m_e: int | None = None):
        self.config = config
        c = config
        self.geom = make_square_domain(c.side)
        self.field = AffineField(c.field.n0, c.field.amplitude, c.field.theta,
                                 c.field.s if n_modes is None else n_modes, c.side)
        self.bounds = verify_A1(self.field, grid_res=c.grid_res, safety=c.safety)
        o = c.params
        self.params = select_parameters(self.bounds, self.geom, alpha1=o.alpha1, A=o.A,
                                        alpha2=o.alpha2, beta2_hat=o.beta2_hat)
        self.constants = compute_constants(c.k, self.params, self.bounds, self.geom)
        self.space = build_space(c.p, c.m_e if m_e is None else m_e, self.geom)
        self.functional = (Functional() if c.functional == "mean"
                           else weighted_functional(c.side))
        self._ops: dict[int, ParametricOperator] = {}

    @cached_property
    def g_vector(self) -> np.ndarray:
        return self.functional.vector(self.space)

    def operator(self, s: int) -> ParametricOperator:
        if s not in self._ops:
            self._ops[s] = ParametricOperator(self.space, self.field, s, self.config.k, self.params)
        return self._ops[s]

    def upsilon(self, s: int) -> np.ndarray:
        if self.config.integrand == "product":
            return product_upsilon(s)
        return self.constants.c_regu * self.field.w1inf_norms(self.geom.L, s)

    def qoi(self, y) -> complex:
        """``G(u_{s,h}(y))`` for one parameter vector (``s = len(y)``)."""
        y = np.asarray(y, dtype=float).reshape(-1)
        op = self.operator(y.size)
        if self.config.data == "manufactured":
            man = manufactured_problem(self.config.k, self.config.phi, self.field, y)
            sp_ = self.space
            rhs = assemble_rhs(sp_, op.coeffs, op.n_at(y), man.f(sp_.x1, sp_.x2),
                               [man.g(e.x1, e.x2) for e in sp_.edges])
        else:
            rhs = op.rhs(y)
        try:
            u = factorize(op.matrix(y)).solve(rhs)
        except NumericalFailure as exc:
            raise NumericalFailure(f"solve failed at y={y.tolist()}: {exc}") from exc
        if not np.all(np.isfinite(u)):
            raise NumericalFailure(f"non-finite solution at y={y.tolist()}")
        return complex(self.g_vector @ u)

    def integrand(self) -> Callable[[np.ndarray], np.ndarray]:
        if self.config.integrand == "product":
            return product_integrand

        def F(Y):
            Y = np.atleast_2d(Y)
            return np.array([self.qoi(y) for y in Y])
        return F


# -- rules and estimation -----------------------------------------------------


@dataclass
class Estimate:
    mean: complex
    rmse: float
    replicates: np.ndarray
    N: int
    R: int


def _combine(Q: np.ndarray, N: int) -> Estimate:
    Q = np.asarray(Q)
    R = Q.size
    mean = complex(np.mean(Q))
    rmse = math.sqrt(float(np.sum(np.abs(Q - mean) ** 2)) / (R * (R - 1))) if R > 1 else math.nan
    return Estimate(mean, rmse, Q, N, R)


def build_lattice(N: int, s: int, upsilon, config: RunConfig) -> LatticeRule:
    weights = pod_weights(upsilon, config.p1, config.delta)
    z = cbc_lattice(N, s, weights) if N > 1 else np.ones(s, dtype=np.int64)
    return LatticeRule(N, z, make_shifts(config.R, s, config.seed), config.seed)


def estimate_with_rule(F, rule: str, N: int, s: int, R: int, seed: int,
                       upsilon=None, config: RunConfig | None = None, lattice=None,
                       m: int | None = None) -> Estimate:
    """Run one estimator; ``N`` is ignored for interlaced rules (``N = 2^m``)."""
    if rule == "mc":
        Q = []
        for r in range(R):
            rng = np.random.default_rng([seed, N, r])
            Q.append(np.mean(F(rng.random((N, s)) - 0.5)))
        return _combine(Q, N)
    if rule == "lattice-pod":
        lat = lattice if lattice is not None else build_lattice(N, s, upsilon, config)
        Q = [np.mean(F(lattice_points(lat, r))) for r in range(lat.R)]
        return _combine(Q, lat.N)
    if rule == "interlaced-spod":
        alpha = interlacing_factor(config.p1)
        m = int(round(math.log2(N))) if m is None else m
        lat = lattice if lattice is not None else cbc_poly_lattice(m, s, spod_weights(upsilon, alpha))
        Q = np.mean(F(lat.points() - 0.5))
        return Estimate(complex(Q), math.nan, np.array([Q]), lat.N, 1)
    raise InvalidArgument(f"unknown rule {rule!r}")


def estimate(config: RunConfig, problem: Problem | None = None) -> Estimate:
    """Mean over ``R`` replicates of the configured rule and its standard error."""
    problem = problem or Problem(config)
    F = problem.integrand()
    return estimate_with_rule(F, config.rule, config.N, config.s, config.R, config.seed,
                              problem.upsilon(config.s), config)


# -- studies ------------------------------------------------------------------


@dataclass
class StudyResult:
    study: str
    control: np.ndarray
    value: np.ndarray
    error: np.ndarray
    slope: float
    intercept: float
    r2: float
    slope_se: float
    predicted: float | None = None
    extra: dict = dc_field(default_factory=dict)

    @property
    def band(self) -> tuple[float, float]:
        return self.slope - 2 * self.slope_se, self.slope + 2 * self.slope_se


def fit_loglog(x, err) -> tuple[float, float, float, float]:
    """Least-squares slope, intercept, R^2 and slope standard error in log-log."""
    x = np.log(np.asarray(x, dtype=float))
    y = np.log(np.asarray(err, dtype=float))
    if x.size < 2 or not np.all(np.isfinite(y)):
        return math.nan, math.nan, math.nan, math.nan
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1 - float(resid @ resid) / ss_tot if ss_tot > 0 else math.nan
    dof = max(x.size - 2, 1)
    se = math.sqrt(float(resid @ resid) / dof / float(np.sum((x - x.mean()) ** 2)))
    return float(coef[0]), float(coef[1]), r2, se


def _result(study, control, value, error, predicted=None, fit_mask=None, **extra) -> StudyResult:
    control = np.asarray(control, dtype=float)
    error = np.asarray(error, dtype=float)
    mask = np.ones(control.size, bool) if fit_mask is None else np.asarray(fit_mask)
    slope, icpt, r2, se = fit_loglog(control[mask], error[mask])
    return StudyResult(study, control, np.asarray(value), error, slope, icpt, r2, se,
                       predicted, extra)


def qmc_rate_study(config: RunConfig, N_list=None, problem: Problem | None = None) -> StudyResult:
    """Error (RMSE over shifts, or exact error for interlaced rules) versus ``N``."""
    problem = problem or Problem(config)
    F = problem.integrand()
    s = config.s
    ups = problem.upsilon(s)
    rows = []
    if config.rule == "interlaced-spod":
        ms = list(config.m_list) if N_list is None else [int(round(math.log2(n))) for n in N_list]
        alpha = interlacing_factor(config.p1)
        weights = spod_weights(ups, alpha)
        if config.integrand == "product":
            exact = 1.0
        else:
            ref = cbc_poly_lattice(max(ms) + 2, s, weights)
            exact = complex(np.mean(F(ref.points() - 0.5)))
        for m in ms:
            lat = cbc_poly_lattice(m, s, weights)
            Q = complex(np.mean(F(lat.points() - 0.5)))
            rows.append((lat.N, Q, abs(Q - exact)))
        predicted = -1.0 / config.p1
    else:
        for N in (config.N_list if N_list is None else N_list):
            N = int(N)
            if config.rule == "lattice-pod":
                N = prime_near(N)
            est = estimate_with_rule(F, config.rule, N, s, config.R, config.seed, ups, config)
            rows.append((est.N, est.mean, est.rmse))
        predicted = -0.5 if config.rule == "mc" else -lattice_rate(config.p1, config.delta)
    N, Q, err = zip(*rows)
    return _result(f"qmc-{config.rule}", N, Q, err, predicted)


def truncation_study(config: RunConfig, s_list=None, s_ref: int | None = None,
                     N_ref: int | None = None) -> StudyResult:
    """``|Q_ref - Q_s|`` versus ``s`` with one shared high-accuracy lattice rule.

    Every ``Q_s`` and ``Q_ref`` uses the same points (the reference rule
    restricted to its first ``s`` coordinates, remaining ``y_j = 0``) and the
    same shifts, so the cubature error largely cancels in the difference.
    """
    s_list = list(config.s_list if s_list is None else s_list)
    s_ref = config.s_ref if s_ref is None else s_ref
    if s_ref <= max(s_list):
        raise InvalidArgument("s_ref must exceed every studied s")
    problem = Problem(config, n_modes=s_ref)
    if problem.field.is_degenerate:
        return _result("truncation", s_list, np.zeros(len(s_list)), np.zeros(len(s_list)),
                       -(2 / config.p0 - 1), fit_mask=np.zeros(len(s_list), bool),
                       notice="degenerate field: truncation error vanishes identically")
    N_ref = next_prime(4 * config.N) if N_ref is None else N_ref
    rule = build_lattice(N_ref, s_ref, problem.upsilon(s_ref), config)
    F = problem.integrand()

    def Q(s):
        vals = []
        for r in range(rule.R):
            Y = lattice_points(rule, r)[:, :s]
            vals.append(np.mean(F(Y)))
        return complex(np.mean(vals))

    q_ref = Q(s_ref)
    vals = [Q(s) for s in s_list]
    errs = [abs(v - q_ref) for v in vals]
    res = _result("truncation", s_list, vals, errs, -(2 / config.p0 - 1), reference=q_ref,
                  N_ref=N_ref, s_ref=s_ref)
    return res


def fem_study(config: RunConfig, mesh_list=None, y=None) -> StudyResult:
    """Manufactured plane-wave errors in the V-norm and in the functional versus ``h``."""
    meshes = [int(m) for m in (config.mesh_list if mesh_list is None else mesh_list)]
    base = Problem(config, m_e=meshes[0])
    y = np.zeros(0) if y is None else np.asarray(y, dtype=float)
    man = manufactured_problem(config.k, config.phi, base.field, y)
    exact_G = man.u_exact.integral(config.side) if config.functional == "mean" else None
    h, verr, ferr, vals = [], [], [], []
    for m in meshes:
        space = build_space(config.p, m, base.geom)
        sol = solve(assemble_system(space, base.field, y, config.k, base.params, man.f, man.g))
        h.append(space.h)
        verr.append(vnorm_error(space, sol.coeffs, man.u_exact, config.k))
        Gu = apply_functional(base.functional, sol)
        vals.append(Gu)
        if exact_G is None:
            # weighted functional: quadrature of the exact field on a fine grid
            fine = build_space(config.p, 2 * max(meshes), base.geom)
            w = base.functional.weight(fine.x1, fine.x2)
            exact_G = complex(np.sum(fine.weights * w * man.u_exact.value(fine.x1, fine.x2)))
        ferr.append(abs(Gu - exact_G))
    res = _result("fem-vnorm", h, vals, verr, float(config.p - 1))
    fres = _result("fem-functional", h, vals, ferr, float(config.p))
    res.extra["functional"] = fres
    return res


@dataclass(frozen=True)
class ErrorBudget:
    truncation: float
    fem: float
    qmc: float
    prefactor: float


def error_budget(kL: float, s: int, h: float, p: int, N: int, p0: float, p1: float,
                 delta: float, rule: str) -> ErrorBudget:
    """Unscaled components ``s^(1-2/p0)``, ``(kL+1) h^p``, ``N^-rate`` and ``1 + 1/kL``."""
    if rule == "interlaced-spod":
        rate = 1.0 / p1
    elif rule == "lattice-pod":
        rate = lattice_rate(p1, delta)
    elif rule == "mc":
        rate = 0.5
    else:
        raise InvalidArgument(f"unknown rule {rule!r}")
    return ErrorBudget(float(s) ** (1 - 2 / p0), (kL + 1) * h ** p, float(N) ** -rate,
                       1 + 1 / kL)


# -- output -------------------------------------------------------------------


def format_complex(z) -> str:
    z = complex(z)
    return f"{z.real!r}{z.imag:+.17g}j"


def study_csv(result: StudyResult, config: RunConfig) -> str:
    buf = io.StringIO()
    buf.write(f"# config: {config.to_json()}\n")
    buf.write(f"# seed: {config.seed}\n")
    meta = {"slope": result.slope, "r2": result.r2, "slope_se": result.slope_se,
            "predicted": result.predicted}
    buf.write(f"# fit: {json.dumps(meta)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["study", "control", "value", "error", "slope"])
    for c, v, e in zip(result.control, result.value, result.error):
        w.writerow([result.study, repr(float(c)), format_complex(v), repr(float(e)),
                    repr(result.slope)])
    return buf.getvalue()


def read_csv(text: str) -> tuple[dict, list[dict]]:
    """Parse an emitted CSV: returns the header comments and the rows."""
    comments, body = {}, []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, val = line[2:].partition(": ")
            comments[key] = val
        elif line:
            body.append(line)
    return comments, list(csv.DictReader(body))


def config_from_csv(text: str) -> RunConfig:
    from .config import config_from_dict
    comments, _ = read_csv(text)
    return config_from_dict(json.loads(comments["config"]))
