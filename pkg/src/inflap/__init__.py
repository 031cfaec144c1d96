"""Strong maximum and compact support principles for equations driven by
the infinity Laplacian (and its normalized version) with absorption."""

from .barrier import BarrierConfig, BarrierResult, build_barrier, verify_barrier
from .csp_profile import (CspConfig, CspResult, assemble_compact_solution, build_psi,
                          compute_support_radius, solve_compact_support)
from .deadcore import (assemble_radial_supersolution, build_deadcore_profile,
                       deadcore_inequality, deadcore_time_to, determine_r_circ)
from .errors import (ConvergenceFailure, CriticalPointError, DivergentIntegral, DomainError,
                     GeometryError, GluingError, InflapError, InvariantViolation, NoBarrier,
                     NoValidRadius, UsageError)
from .grid_lab import (ComparisonReport, GridFunction, SolveReport, SolverConfig,
                       deadcore_lift, detect_dead_core, discrete_comparison_check,
                       discrete_residual, smp_csp_experiment, solve_box_dirichlet,
                       solve_radial_dirichlet, sweep, vepsilon_comparison)
from .nonlinearity import (CONVERGES, DIVERGES, INCONCLUSIVE, ClassificationResult,
                           GradientTermSpec, Integrand, NonlinearitySpec, classify_integral,
                           eval_F, eval_Gamma, invert_Gamma)
from .profile import Profile
from .radial_ops import (KinkReport, ResidualReport, apply_operator_radial,
                         counterexample_eval, kink_viscosity_check, operator_values,
                         residual_report)

__version__ = "0.1.0"
