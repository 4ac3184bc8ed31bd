"""Sparse distributional regression for quantile-function responses.

Responses are distributions represented by quantile functions evaluated on a
uniform grid, compared in the 2-Wasserstein metric.  Fitting combines a
ridge-type conditional-mean smoother with a constrained projection onto the
set of nondecreasing, box-bounded quantile vectors, and variable selection
runs either a geodesic second-order descent on a sphere reparameterization or
coordinate descent over the allowance simplex, optionally wrapped in
complementary-pairs stability selection.
"""

from __future__ import annotations

from .data import (
    ConstraintSystem,
    QuantileGrid,
    QuantileMatrix,
    check_feasible,
    empirical_quantiles,
    make_grid,
    wasserstein2_sq,
    wasserstein2_sq_rows,
)
from .errors import ConvergenceError, DataError
from .objective import (
    GradientBundle,
    sparsity_gradient,
    sparsity_hessian,
    sparsity_objective,
    sphere_gradient,
    sphere_hessian_quadform,
)
from .options import SolverOptions
from .projection import (
    EmbeddedSolution,
    RowProjectors,
    active_projectors,
    pava_box_oracle,
    solve_embedded,
)
from .regression import (
    Design,
    frechet_weights,
    predict_quantiles,
    ridge_smoother,
)
from .selection import (
    CrossValidationResult,
    SelectionReport,
    StabilityResult,
    SubsamplePlan,
    ThresholdResult,
    cross_validate_tau,
    select_any_vote,
    stability_paths,
    threshold_for_bound,
)
from .simulate import SimConfigA, SimConfigB, gen_experiment_a, gen_experiment_b
from .solvers import (
    FitDiagnostics,
    SolutionPath,
    gsd_fit,
    mcd_fit,
    rotate,
    select_angle,
    solution_path,
    tangent_direction,
)

__version__ = "0.1.0"

__all__ = [
    "ConstraintSystem",
    "ConvergenceError",
    "CrossValidationResult",
    "DataError",
    "Design",
    "EmbeddedSolution",
    "FitDiagnostics",
    "GradientBundle",
    "QuantileGrid",
    "QuantileMatrix",
    "RowProjectors",
    "SelectionReport",
    "SimConfigA",
    "SimConfigB",
    "SolutionPath",
    "SolverOptions",
    "StabilityResult",
    "SubsamplePlan",
    "ThresholdResult",
    "active_projectors",
    "check_feasible",
    "cross_validate_tau",
    "empirical_quantiles",
    "frechet_weights",
    "gen_experiment_a",
    "gen_experiment_b",
    "gsd_fit",
    "make_grid",
    "mcd_fit",
    "pava_box_oracle",
    "predict_quantiles",
    "ridge_smoother",
    "rotate",
    "select_angle",
    "select_any_vote",
    "solution_path",
    "solve_embedded",
    "sparsity_gradient",
    "sparsity_hessian",
    "sparsity_objective",
    "sphere_gradient",
    "sphere_hessian_quadform",
    "stability_paths",
    "threshold_for_bound",
    "wasserstein2_sq",
    "wasserstein2_sq_rows",
]
