"""Numerical homogenization of quasilinear second-order ODE systems in
divergence form with a 1-periodic fast variable.

The toolkit inverts the strongly monotone flux pointwise, averages the
inverse over the fast cell to build effective coefficients, solves both the
oscillatory and the effective two-point problems through an equivalent
integral-equation fixed point, and provides nondegeneracy and convergence
rate diagnostics.
"""

__version__ = "0.1.0"

from .analysis import (RateFit, check_nondegenerate, oscillation_gap,
                       rate_fit, sufficient_condition)
from .bvp import (HOMOGENIZED, ResidualParts, SolveReport, SolverConfig,
                  assemble_linearization, grid_size_for, residual_eps,
                  solve_eps, solve_homogenized, solve_two_dirichlet)
from .errors import (DimensionError, InvalidSample, NoConvergence, NotFound,
                     OutOfDomain, QhomError, SingularCoefficient,
                     SingularJacobian, UnresolvedOscillation)
from .homogenize import (DEFAULT_K, HomogenizedCoefficients, a0_dual,
                         average_b0, average_f0, b0_derivatives,
                         build_homogenized, cell_refinement_gap, corrector_w,
                         linear_homogenize)
from .model import (DirichletNatural, GridFunction, NeumannAt1, ProblemSpec,
                    REGISTRY_NAMES, TwoDirichlet, registry_get, sup_distance)
from .monotone import (DEFAULT_INVERSION, InversionConfig, b_derivatives,
                       invert_flux, invert_monotone)

__all__ = [
    "DEFAULT_INVERSION",
    "DEFAULT_K",
    "DimensionError",
    "DirichletNatural",
    "GridFunction",
    "HOMOGENIZED",
    "HomogenizedCoefficients",
    "InvalidSample",
    "InversionConfig",
    "NeumannAt1",
    "NoConvergence",
    "NotFound",
    "OutOfDomain",
    "ProblemSpec",
    "QhomError",
    "RateFit",
    "REGISTRY_NAMES",
    "ResidualParts",
    "SingularCoefficient",
    "SingularJacobian",
    "SolveReport",
    "SolverConfig",
    "TwoDirichlet",
    "UnresolvedOscillation",
    "a0_dual",
    "assemble_linearization",
    "average_b0",
    "average_f0",
    "b0_derivatives",
    "b_derivatives",
    "build_homogenized",
    "cell_refinement_gap",
    "check_nondegenerate",
    "corrector_w",
    "grid_size_for",
    "invert_flux",
    "invert_monotone",
    "linear_homogenize",
    "oscillation_gap",
    "rate_fit",
    "registry_get",
    "residual_eps",
    "solve_eps",
    "solve_homogenized",
    "solve_two_dirichlet",
    "sufficient_condition",
    "sup_distance",
]
