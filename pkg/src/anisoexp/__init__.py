"""Asymptotic expansions of anisotropic singularly perturbed elliptic problems.

Q1 finite elements on tensor grids, the slice-wise hierarchy of limit
problems, block-gradient residual rates over eps sweeps, and exact sine-series
solutions for constant diagonal coefficients.
"""

from .analysis import RateReport, expansion_residual, fit_rate, run_sweep, seminorm, theoretical_slopes
from .assembly import NodalField, assemble_block, assemble_perturbed, assemble_slice, cascade_rhs
from .cascade import CascadeResult, solve_cascade, solve_limit
from .coefficients import BlockCoefficientField, ValidationReport, validate
from .config import ConfigError, ExperimentConfig, load_config
from .estimators import AsymptoticExpansion, PerturbedSolver, RateSweep
from .expr import ExprEvalError, ExprSyntaxError, ScalarExpr, evaluate, parse, to_string
from .grid import BoxDomain, TensorGrid, build_grid, slice_nodes
from .linalg import BandedCholesky, NonConvergenceError, NotSymmetricError, pcg, solve_banded, solve_spd
from .oracle import SineModeSet, oracle_cascade, oracle_perturbed, oracle_residual_seminorm, oracle_seminorm
from .problem import AnisotropicProblem

__version__ = "0.1.0"

__all__ = [
    "AnisotropicProblem",
    "AsymptoticExpansion",
    "BandedCholesky",
    "BlockCoefficientField",
    "BoxDomain",
    "CascadeResult",
    "ConfigError",
    "ExperimentConfig",
    "ExprEvalError",
    "ExprSyntaxError",
    "NodalField",
    "NonConvergenceError",
    "NotSymmetricError",
    "PerturbedSolver",
    "RateReport",
    "RateSweep",
    "ScalarExpr",
    "SineModeSet",
    "TensorGrid",
    "ValidationReport",
    "assemble_block",
    "assemble_perturbed",
    "assemble_slice",
    "build_grid",
    "cascade_rhs",
    "evaluate",
    "expansion_residual",
    "fit_rate",
    "load_config",
    "oracle_cascade",
    "oracle_perturbed",
    "oracle_residual_seminorm",
    "oracle_seminorm",
    "parse",
    "pcg",
    "run_sweep",
    "seminorm",
    "slice_nodes",
    "solve_banded",
    "solve_cascade",
    "solve_limit",
    "solve_spd",
    "theoretical_slopes",
    "to_string",
    "validate",
]
