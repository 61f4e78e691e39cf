"""Lattice and interlaced polynomial lattice cubature."""

from .lattice import (LatticeRule, cbc_lattice, is_prime, lattice_points, make_shifts,
                      next_prime, omega, prime_near, worst_case_error, worst_case_error_sq)
from .polylattice import (InterlacedPolyLattice, cbc_poly_lattice, deinterlace_digits,
                          interlace, interlace_digits, is_primitive, poly_criterion, v_m)
from .rules_io import export_rule, format_rule, import_rule, parse_rule
from .weights import (PodWeights, SpodWeights, choose_lambda, export_weights_csv,
                      interlacing_factor, lattice_rate, pod_weights, rho, spod_weights)
