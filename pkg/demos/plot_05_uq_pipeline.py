"""
Expected average wave field in a random medium
==============================================

The full pipeline on a small problem: truncate the random index to s
modes, solve with splines at every lattice point and average the domain
mean of the field over random shifts. Monte Carlo runs alongside for
comparison.
"""

from helmholtz_qmc.config import RunConfig
from helmholtz_qmc.estimator import Problem, estimate, qmc_rate_study

cfg = RunConfig(m_e=8, s=6, R=8, N_list=[16, 32, 64, 128, 256])
cfg.field.s = 6
prob = Problem(cfg.validate())

est = estimate(cfg, prob)
print(f"E[G(u)] ~ {est.mean:.6f}  (rmse {est.rmse:.1e}, N={est.N}, R={est.R})")

for rule in ("lattice-pod", "mc"):
    cfg.rule = rule
    res = qmc_rate_study(cfg, problem=prob)
    print(f"\n{rule}: fitted slope {res.slope:.2f} (predicted {res.predicted:.2f})")
    for N, e in zip(res.control, res.error):
        print(f"  N={int(N):5d}  rmse={e:.2e}")
