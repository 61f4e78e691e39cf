"""
Stability constants and the random medium
=========================================

Build the cosine-mode random refractive index, check that every
realization stays inside a positive envelope, pick stabilization
parameters from that envelope and look at how the constants move with the
acoustic size kL.
"""

import numpy as np

from helmholtz_qmc.field import AffineField, evaluate_field, summability, verify_A1
from helmholtz_qmc.geometry import compute_constants, make_square_domain, select_parameters

geom = make_square_domain(1.0)
field = AffineField(n0=1.0, amplitude=0.2, theta=4.0, s_max=16, side=geom.side)

###############################################################################
# Envelope of n and of div(x n) over all parameters in the unit cube

bounds = verify_A1(field)
print(f"n in [{bounds.n_min:.4f}, {bounds.n_max:.4f}]")
print(f"div(x n) in [{bounds.b_min:.4f}, {bounds.b_max:.4f}]")

# a random draw sits inside the envelope
y = np.random.default_rng(0).random(16) - 0.5
n, _, _ = evaluate_field(field, y, 0.1, -0.2)
print(f"n(0.1, -0.2; y) = {float(n):.4f}")

###############################################################################
# Parameters and constants; the coercivity constant does not see kL

params = select_parameters(bounds, geom)
print(params)
print(f"{'kL':>6} {'c_coer':>10} {'c_cont':>10} {'c_func':>10} {'c_regu':>10}")
for kL in (1, 4, 16, 64):
    c = compute_constants(kL / geom.L, params, bounds, geom)
    print(f"{kL:6d} {c.c_coer:10.4f} {c.c_cont:10.3f} {c.c_func:10.4f} {c.c_regu:10.1f}")

###############################################################################
# Summability of the mode sequence decides which QMC rates are available

summ = summability(field, p0=0.5, p1=0.6, k=2 * np.pi, L=geom.L)
print(summ)
