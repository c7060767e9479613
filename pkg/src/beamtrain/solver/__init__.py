"""Channel reconstruction backends."""

from .lasso import (
    LassoConfig,
    LassoSolution,
    default_lasso_weight,
    kkt_residual,
    lasso_objective,
    lasso_solve,
    reconstruct_lasso,
    soft_threshold,
)
from .linear import gram_pinv, reconstruct_ls, reconstruct_orthonormal
from .refine import RefineConfig, dictionary, refine, refine_objective
from .result import ReconstructionResult

__all__ = [
    "LassoConfig",
    "LassoSolution",
    "ReconstructionResult",
    "RefineConfig",
    "default_lasso_weight",
    "dictionary",
    "gram_pinv",
    "kkt_residual",
    "lasso_objective",
    "lasso_solve",
    "reconstruct_lasso",
    "reconstruct_ls",
    "reconstruct_orthonormal",
    "refine",
    "refine_objective",
    "soft_threshold",
]
