"""
Lattice and interlaced polynomial lattice rules
===============================================

Component-by-component construction with POD weights for randomly shifted
rank-1 lattices and with SPOD weights for interlaced polynomial lattices,
tried on a smooth product integrand whose integral is exactly 1.
"""

import numpy as np

from helmholtz_qmc.estimator import product_integrand, product_upsilon
from helmholtz_qmc.qmc import (LatticeRule, cbc_lattice, cbc_poly_lattice, lattice_points,
                               pod_weights, spod_weights, worst_case_error)

s = 8
ups = product_upsilon(s)

###############################################################################
# Randomly shifted lattice: worst-case error against its a priori bound

w = pod_weights(ups, p1=0.6, delta=0.1)
print(f"{'N':>6} {'wce':>10} {'bound':>10} {'|Q - 1|':>10}")
for N in (31, 127, 509, 2039):
    rule = LatticeRule(N, cbc_lattice(N, s, w)).with_shifts(8, seed=1)
    Q = np.mean([product_integrand(lattice_points(rule, r)).mean() for r in range(rule.R)])
    print(f"{N:6d} {worst_case_error(rule, w):10.2e} {w.error_bound(N):10.2e} {abs(Q - 1):10.2e}")

###############################################################################
# Interlaced rule with factor 2: higher order on smooth integrands

sw = spod_weights(ups, alpha=2)
print(f"\n{'m':>3} {'N':>6} {'|Q - 1|':>10}")
for m in range(4, 11):
    lat = cbc_poly_lattice(m, s, sw)
    Q = product_integrand(lat.points() - 0.5).mean()
    print(f"{m:3d} {lat.N:6d} {abs(Q - 1):10.2e}")
