"""Regularisation of linear inverse problems from input-output training pairs."""

__version__ = "0.1.0"

from .dual import DualModel, choose_n_dual, fit_dual, reconstruct_dual, smallest_singular
from .linalg import GridSignal, OrthonormalBasis, householder_orthonormalise, mgs_extend
from .operators import RadonOperator, SeidmanOperator, SvdOperator, operator_from_config
from .projection import ProjectionModel, choose_n, fit, reconstruct
from .training import NoiseSpec, TrainingSet, add_noise, make_adjoint_pairs, make_pairs
from .variational import (
    InputModel,
    ProjectedOperator,
    VariationalProblem,
    choose_alpha,
    fit_input_side,
    solve_tikhonov,
    solve_tv,
)

__all__ = [
    "GridSignal", "OrthonormalBasis", "householder_orthonormalise", "mgs_extend",
    "RadonOperator", "SeidmanOperator", "SvdOperator", "operator_from_config",
    "TrainingSet", "NoiseSpec", "add_noise", "make_pairs", "make_adjoint_pairs",
    "ProjectionModel", "fit", "reconstruct", "choose_n",
    "DualModel", "fit_dual", "reconstruct_dual", "smallest_singular", "choose_n_dual",
    "InputModel", "ProjectedOperator", "VariationalProblem", "fit_input_side",
    "solve_tikhonov", "solve_tv", "choose_alpha",
]
