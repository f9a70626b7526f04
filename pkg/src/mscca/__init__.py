"""Multi-block sparse CCA via l1-constrained proximal gradient descent."""

from .data import (BlockLayout, CovOps, Dataset, DenseOps, standardize,
                   transform_like)
from .deflation import (DeflationState, deflate_data, fit_sequential,
                        schur_deflate_cov)
from .evaluate import projection_residual, test_deflated_correlation
from .initialization import (InitConfig, ScreenedSet, init_direction,
                             screen_features, shrinkage_intensity)
from .projection import ProjectionResult, project_l1_sphere, zeta
from .simulate import GroundTruth, ScenarioSpec, build_lambda, generate
from .solver import (DirectionEstimate, SolverConfig, Trajectory,
                     bound_schedule, fit_leading, gradient, proximal_step,
                     rayleigh, select_cv, select_penalized)

__version__ = "0.1.0"

__all__ = [
    "BlockLayout", "CovOps", "Dataset", "DenseOps", "standardize",
    "transform_like", "DeflationState", "deflate_data", "fit_sequential",
    "schur_deflate_cov", "projection_residual", "test_deflated_correlation",
    "InitConfig", "ScreenedSet", "init_direction", "screen_features",
    "shrinkage_intensity", "ProjectionResult", "project_l1_sphere", "zeta",
    "GroundTruth", "ScenarioSpec", "build_lambda", "generate",
    "DirectionEstimate", "SolverConfig", "Trajectory", "bound_schedule",
    "fit_leading", "gradient", "proximal_step", "rayleigh", "select_cv",
    "select_penalized",
]
