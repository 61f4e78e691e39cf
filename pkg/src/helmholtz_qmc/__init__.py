"""Quasi-Monte Carlo and spline Galerkin estimation for the stochastic Helmholtz equation.

The wave field solves a sign-definite (coercive) variational formulation of
the Helmholtz problem with an affine-parametric refractive index. Expected
values of linear functionals are computed by combining dimension truncation,
C^{p-1} tensor-product spline Galerkin discretization and randomly shifted
lattice or interlaced polynomial lattice cubature.
"""

from .config import RunConfig, apply_overrides, config_from_dict, parse_config
from .derivatives import (DerivativeContext, MultiIndex, derivative_rhs, multi_indices,
                          recursion_oracle, regularity_certificate, solve_derivative)
from .errors import (AssumptionViolation, HelmholtzQMCError, InvalidArgument, InvalidState,
                     NumericalFailure)
from .estimator import (Problem, error_budget, estimate, fem_study, product_integrand,
                        qmc_rate_study, truncation_study)
from .fem import (Functional, ParametricOperator, apply_functional, assemble_system,
                  assemble_vnorm_gram, build_space, manufactured_problem, solve)
from .field import (AffineField, ParamVector, evaluate_field, summability,
                    truncation_quantities, verify_A1)
from .geometry import (ConstantSet, DomainGeometry, FieldBounds, StabilizationParams,
                       compute_constants, make_square_domain, select_parameters)

__version__ = "0.1.0"
