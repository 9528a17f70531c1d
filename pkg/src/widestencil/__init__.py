"""widestencil: positivity-preserving wide-stencil solver for 2D elliptic PDEs.

Solves linear non-divergence-form elliptic equations with anisotropic,
mixed-derivative diffusion on uniform rectangular grids.  The solution is
written as an expectation over four stochastic branches per node; branch
stopping (Dirichlet), specular reflection (Neumann), or modular wrapping
(periodic) handles the boundary, and moment-matched branch probabilities
keep the scheme consistent.  The assembled matrix is an M-matrix, so
nonnegative data yield nonnegative discrete solutions.

Hot iteration kernels live in a compiled extension with a NumPy/SciPy
fallback chosen at import; see widestencil.backend_name().
"""

from ._backend import backend_name
from .assembly import (
    BoundarySpec,
    MMatrixReport,
    SparseSystem,
    assemble_dirichlet,
    assemble_neumann,
    assemble_periodic,
    verify_m_matrix,
)
from .branches import (
    Branch,
    BranchKind,
    BranchSet,
    branch_displacement,
    branch_weights,
    build_branchset_dirichlet,
    build_branchset_neumann,
    build_branchset_periodic,
    hitting_time,
    reflect_coordinate,
    wrap_point,
)
from .coefficients import (
    CoefficientSet,
    NodeCoefficients,
    eval_node,
    evaluate_on_grid,
    strict_positivity_transform,
)
from .grid import Grid2D, NodeIndex, locate_cell, make_grid
from .harness import (
    ErrorRow,
    MCEstimate,
    ProblemCase,
    emit_csv,
    mc_oracle,
    register_builtin_problems,
    run_case,
)
from .interpolation import Stencil, apply_stencil, interpolation_stencil
from .solver import SolveConfig, SolveResult, dense_solve, solve

__version__ = "0.1.0"

__all__ = [
    "BoundarySpec",
    "Branch",
    "BranchKind",
    "BranchSet",
    "CoefficientSet",
    "ErrorRow",
    "Grid2D",
    "MCEstimate",
    "MMatrixReport",
    "NodeCoefficients",
    "NodeIndex",
    "ProblemCase",
    "SolveConfig",
    "SolveResult",
    "SparseSystem",
    "Stencil",
    "apply_stencil",
    "assemble_dirichlet",
    "assemble_neumann",
    "assemble_periodic",
    "backend_name",
    "branch_displacement",
    "branch_weights",
    "build_branchset_dirichlet",
    "build_branchset_neumann",
    "build_branchset_periodic",
    "dense_solve",
    "emit_csv",
    "eval_node",
    "evaluate_on_grid",
    "hitting_time",
    "interpolation_stencil",
    "locate_cell",
    "make_grid",
    "mc_oracle",
    "reflect_coordinate",
    "register_builtin_problems",
    "run_case",
    "solve",
    "strict_positivity_transform",
    "verify_m_matrix",
    "wrap_point",
]
