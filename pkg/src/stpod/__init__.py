"""Space-time proper orthogonal decomposition for the 1D heat equation."""

from .error_analysis import (
    CheckResult, ErrorReport, SigmaBound, build_report, c_rho_t, rho_errors,
    sigma_bound, theta_and_total, verify_bounds,
)
from .field import (
    CoefficientField, evaluate, load_field, save_field, sty_dt_norm, sty_inner, sty_norm,
)
from .galerkin import (
    ProblemSpec, SingularSystemError, assemble_rhs, assemble_rom, project_initial,
    solve_fom, solve_rom,
)
from .grid_fem import BoundaryMode, GramianSet, Grid1D, assemble_gramians, build_uniform_grid
from .pod import (
    ProjectionOrder, SpaceReducedBasis, TimeReducedBasisIC, project_composite,
    project_space, project_time_ic, reduce_space, reduce_time_ic, weighted_svd,
)
from .problems import example1, example2

__version__ = "0.1.0"

__all__ = [
    "BoundaryMode", "CheckResult", "CoefficientField", "ErrorReport", "GramianSet", "Grid1D",
    "ProblemSpec", "ProjectionOrder", "SigmaBound", "SingularSystemError",
    "SpaceReducedBasis", "TimeReducedBasisIC", "assemble_gramians", "assemble_rhs",
    "assemble_rom", "build_report", "build_uniform_grid", "c_rho_t", "evaluate",
    "example1", "example2", "load_field", "project_composite", "project_initial",
    "project_space", "project_time_ic", "reduce_space", "reduce_time_ic", "rho_errors",
    "save_field", "sigma_bound", "solve_fom", "solve_rom", "sty_dt_norm", "sty_inner",
    "sty_norm", "theta_and_total", "verify_bounds", "weighted_svd",
]
