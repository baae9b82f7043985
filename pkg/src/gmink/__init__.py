"""
Numerical toolkit for the L_p Gaussian Minkowski problem in the plane and
in space: convex bodies, Gaussian volume and surface measures, a Newton
solver for the discrete problem and continuity experiments.
"""

from .convex import (
    Polytope,
    RadialFunction,
    SupportFunction,
    ball_polytope,
    ball_support,
    box,
    cube,
    hausdorff_distance,
    lp_combination,
    max_radial,
    polar_body,
    radial_function,
    random_polytope,
    square,
    support_of,
    wulff_shape,
)
from .errors import (
    BranchViolation,
    DegenerateBodyError,
    DomainError,
    FacetVanished,
    HemisphereError,
    InfeasibleHemisphere,
    NoConvergence,
    NoRoot,
    NoValidBranch,
    NotSupportFunctionError,
    SolverError,
)
from .gaussian import (
    GaussianContext,
    SphereMeasure,
    cosine_lower_bound,
    default_context,
    gauss_surface_measure,
    gaussian_volume,
    lp_surface_measure,
    ma_density,
    minkowski_gap,
    phi_functional,
    variational_check,
)
from .lab import (
    ExperimentRecord,
    WeakDistanceRule,
    emit_report,
    run_measure_continuity,
    run_p_continuity,
    weak_distance,
)
from .solver import SolverConfig, SolverReport, solve_ball, solve_discrete, verify_solution
from .sphere import SphericalGrid, build_grid, in_closed_hemisphere, integrate

__version__ = "0.1.0"
