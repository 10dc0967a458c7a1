"""Numerical laboratory for Schrodinger semigroups e^{-yL}, L = -Delta + V,
their Poisson counterparts, the adapted Lipschitz classes they characterize,
and the associated operator calculus (negative powers, fractional
Laplacians, Riesz transforms, Laplace-transform multipliers).
"""

from .grids import (Grid, GridFunction, export_csv, first_difference_sup,
                    import_csv, integrate, second_difference_sup, sup_norm)
from .functions import ProfileFunction, builtin, hermite_function, plateau_bump
from .potentials import (UNBOUNDED, CriticalRadiusField, PotentialDescriptor,
                         critical_radius, load_tabulated_radial,
                         potential_smoothing_check, reverse_holder_estimate,
                         rho_comparison_check)
from .heat import (SemigroupEngine, export_kernel_csv, kato_trotter_residual,
                   kernel_bound_check, perturbation_difference,
                   pointwise_convergence_check, weighted_derivative_check)
from .poisson import (SubordinationQuadrature, apply_poisson,
                      classical_poisson_convolution, poisson_derivative,
                      poisson_kernel_bound_check, poisson_size_norm,
                      poisson_spectral_apply, poisson_vanishing_check)
from .lipschitz import (ScalingFit, SeminormReport, SmoothnessParams,
                        classical_weighted_size, derivative_transfer_check,
                        first_difference_seminorm, heat_scaling_fit,
                        poisson_scaling_fit, verify_space_equivalence,
                        weighted_size, zygmund_seminorm)
from .operators import (DivergenceError, MultiplierSymbol, OperatorSpec,
                        apply_operator, node_doubling_check,
                        regularity_shift_check, spatial_derivative)

__version__ = "0.1.0"
