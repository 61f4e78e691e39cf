"""Acceptance gate: ten end-to-end criteria at their stated tolerances.

Each test prints one ``PASS``/``FAIL`` line (visible even under output
capture) before asserting.
"""

import math
import time

import numpy as np
import pytest

from helmholtz_qmc.certificates import CertificateReport, certify
from helmholtz_qmc.config import RunConfig
from helmholtz_qmc.derivatives import (DerivativeContext, MultiIndex, finite_difference,
                                       multi_indices, recursion_oracle, regularity_certificate,
                                       solve_derivative)
from helmholtz_qmc.estimator import Problem, estimate, fem_study, qmc_rate_study, truncation_study
from helmholtz_qmc.fem import assemble_vnorm_gram, vnorm
from helmholtz_qmc.geometry import compute_constants, make_square_domain
from helmholtz_qmc.qmc import cbc_lattice, pod_weights, worst_case_error_sq

pytestmark = pytest.mark.acceptance

L = make_square_domain(1.0).L


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance {number:>2}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return emit


def config(kL=None, **kw):
    cfg = RunConfig(**kw)
    if kL is not None:
        cfg.k = kL / L
    return cfg.validate()


@pytest.fixture(scope="module")
def certificate_sweep():
    """Coercivity, continuity and data bounds over kL in {2, 8}, m_e in {8, 16}."""
    rng = np.random.default_rng(20240601)
    total = CertificateReport()
    t0 = time.perf_counter()
    for kL in (2.0, 8.0):
        for m_e in (8, 16):
            prob = Problem(config(kL=kL, m_e=m_e, p=2))
            for _ in range(5):
                y = rng.random(prob.field.s_max) - 0.5
                total.merge(certify(prob.space, prob.field, y, prob.config.k, prob.params,
                                    prob.constants, rng, n_vectors=100))
    return total, time.perf_counter() - t0


def test_01_coercivity(certificate_sweep, report):
    rep, dt = certificate_sweep
    ok = rep.violations["coer"] == 0 and dt < 30
    report(1, ok, f"{rep.checks} checks, {rep.violations['coer']} violations, "
                  f"min Re(wBw)/(C_coer|w|^2) = {rep.coer:.3f}, {dt:.1f} s")


def test_02_continuity_and_functional(certificate_sweep, report):
    rep, dt = certificate_sweep
    v = rep.violations["cont"] + rep.violations["func"]
    ok = v == 0 and dt < 30
    report(2, ok, f"{2 * rep.checks} checks, {v} violations, max ratios cont {rep.cont:.2e} "
                  f"func {rep.func:.2e}, {dt:.1f} s")


def test_03_manufactured_rates(report):
    t0 = time.perf_counter()
    r2 = fem_study(config(kL=2.0, p=2, data="manufactured"), mesh_list=[8, 16, 32])
    r3 = fem_study(config(kL=2.0, p=3, data="manufactured"), mesh_list=[8, 16, 32])
    dt = time.perf_counter() - t0
    v2, g2, v3 = r2.slope, r2.extra["functional"].slope, r3.slope
    ok = 0.75 <= v2 <= 1.5 and 1.7 <= g2 <= 2.7 and 1.75 <= v3 <= 2.5 and dt < 120
    report(3, ok, f"p=2 V-norm EOC {v2:.3f}, functional EOC {g2:.3f}; p=3 V-norm EOC {v3:.3f}; "
                  f"{dt:.1f} s")


def test_04_derivative_oracle(report):
    t0 = time.perf_counter()
    prob = Problem(config())
    y = np.random.default_rng(7).random(prob.config.s) - 0.5
    ctx = DerivativeContext(prob.space, prob.field, y, prob.config.k, prob.params)
    gram = assemble_vnorm_gram(prob.space, prob.config.k)
    first = []
    for j in range(1, 5):
        d = solve_derivative(MultiIndex.unit(j), ctx)
        fd = finite_difference(ctx, (j,), prob.config.fd_step1)
        first.append(vnorm(gram, d - fd) / vnorm(gram, d))
    d = solve_derivative(MultiIndex({1: 1, 2: 1}), ctx)
    fd = finite_difference(ctx, (1, 2), prob.config.fd_step2)
    mixed = vnorm(gram, d - fd) / vnorm(gram, d)
    dt = time.perf_counter() - t0
    ok = max(first) < 1e-5 and mixed < 1e-3 and dt < 60
    report(4, ok, f"first-order max rel err {max(first):.2e}, mixed {mixed:.2e}, {dt:.1f} s")


def test_05_regularity_sweep(report):
    t0 = time.perf_counter()
    prob = Problem(config())
    gram = assemble_vnorm_gram(prob.space, prob.config.k)
    rng = np.random.default_rng(11)
    indices = multi_indices(3, 4)
    n = passed = 0
    worst = 0.0
    for _ in range(10):
        y = rng.random(prob.config.s) - 0.5
        ctx = DerivativeContext(prob.space, prob.field, y, prob.config.k, prob.params)
        for nu in indices:
            cert = regularity_certificate(nu, prob.constants, ctx, gram)
            n += 1
            passed += cert.passed
            worst = max(worst, cert.ratio)
    dt = time.perf_counter() - t0
    ok = passed == n and dt < 120
    report(5, ok, f"{passed}/{n} certificates hold, worst ratio {worst:.3e}, {dt:.1f} s")


def test_06_recursion_lemma(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    indices = multi_indices(6, 4)
    passed = 0
    for _ in range(1000):
        c0, c1, c2 = rng.uniform(0, 3, 3)
        Psi = rng.uniform(0, 2, 4)
        B = rng.uniform(0, 5)
        nu = indices[rng.integers(len(indices))]
        passed += recursion_oracle(c0, c1, c2, Psi, B, nu).passed
    dt = time.perf_counter() - t0
    ok = passed == 1000 and dt < 5
    report(6, ok, f"{passed}/1000 randomized trials within the factorial bound, {dt:.2f} s")


def _naive_objective(z, N, w):
    lam = w.lam
    beta = w.dim_factor
    tot = 0.0
    for mask in range(1, 1 << len(z)):
        u = [j for j in range(len(z)) if mask >> j & 1]
        gam = math.factorial(len(u)) ** (2 / (1 + lam)) * np.prod(beta[u])
        x = np.array([[(i * z[j] % N) / N for j in u] for i in range(N)])
        tot += gam * np.mean(np.prod(x * x - x + 1 / 6, axis=1))
    return tot


def test_07_cbc_correctness(report):
    t0 = time.perf_counter()
    w = pod_weights([1.0, 0.5, 0.25], 0.6, 0.1)
    max_dev = 0.0
    greedy_ok = True
    for N in (13, 17, 31):
        tr = cbc_lattice(N, 3, w, trace=True)
        for d in range(3):
            naive = np.array([_naive_objective(list(tr.z[:d]) + [c], N, w) for c in range(1, N)])
            rec = np.array([worst_case_error_sq(list(tr.z[:d]) + [c], N, w) for c in range(1, N)])
            max_dev = max(max_dev, np.max(np.abs(rec - naive) / naive),
                          np.max(np.abs(tr.objective[d] - naive) / naive))
            tied = np.flatnonzero(naive <= naive.min() * (1 + 1e-12))
            greedy_ok &= tr.z[d] == 1 + tied[0]
    dt = time.perf_counter() - t0
    ok = max_dev <= 1e-12 and greedy_ok and dt < 10
    report(7, ok, f"max rel deviation recursion vs naive {max_dev:.1e}, greedy = exhaustive "
                  f"minimum: {greedy_ok}, {dt:.2f} s")


def test_08_qmc_rates(report):
    t0 = time.perf_counter()
    base = dict(s=8, p=2, m_e=16, R=8, N_list=[2 ** e for e in range(4, 11)])
    prob = Problem(config(rule="mc", **base))
    mc = qmc_rate_study(config(rule="mc", **base), problem=prob)
    lat = qmc_rate_study(config(rule="lattice-pod", **base), problem=prob)
    il = qmc_rate_study(config(rule="interlaced-spod", integrand="product", s=8,
                               m_list=list(range(4, 13))))
    dt = time.perf_counter() - t0
    ok = (-0.65 <= mc.slope <= -0.35 and lat.slope <= -0.8 and il.slope <= -1.5 and dt < 600)
    report(8, ok, f"(a) mc slope {mc.slope:.3f} (R2 {mc.r2:.2f}); (b) lattice-pod slope "
                  f"{lat.slope:.3f} (R2 {lat.r2:.2f}); (c) interlaced-spod slope {il.slope:.3f} "
                  f"(R2 {il.r2:.2f}); {dt:.0f} s")


def test_09_truncation_rate(report):
    t0 = time.perf_counter()
    cfg = config(m_e=8, N=257, R=4, s_list=[2, 4, 8, 16], s_ref=64)
    res = truncation_study(cfg)
    dt = time.perf_counter() - t0
    drop = res.error[0] / res.error[-1]
    ok = res.slope <= -1.5 and drop >= 10 and dt < 300
    report(9, ok, f"slope {res.slope:.2f} (R2 {res.r2:.2f}), error(s=2)/error(s=16) = {drop:.1e}, "
                  f"N_ref {res.extra['N_ref']}, {dt:.1f} s")


def test_10_wavenumber_independence(report):
    t0 = time.perf_counter()
    prob = Problem(config())
    coer = {compute_constants(kL / L, prob.params, prob.bounds, prob.geom).c_coer
            for kL in (1.0, 10.0, 100.0)}
    cfg = config(kL=8.0, p=3, m_e=16, N=31, R=4)
    prob8 = Problem(cfg)
    est = estimate(cfg, prob8)
    rng = np.random.default_rng(10)
    rep = CertificateReport()
    for _ in range(5):
        y = rng.random(cfg.s) - 0.5
        rep.merge(certify(prob8.space, prob8.field, y, cfg.k, prob8.params, prob8.constants,
                          rng, n_vectors=100))
    dt = time.perf_counter() - t0
    ok = len(coer) == 1 and np.isfinite(est.mean) and rep.violations["coer"] == 0 and dt < 120
    report(10, ok, f"C_coer values across kL: {sorted(coer)}; kL=8 p=3 estimate "
                   f"{est.mean:.6g} +- {est.rmse:.1e}, coercivity violations "
                   f"{rep.violations['coer']}; {dt:.1f} s")
