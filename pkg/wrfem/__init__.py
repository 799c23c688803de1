"""
wrfem: Weighted-residual finite elements for moving-conductor eddy-current problems.

This package provides 1D/2D/3D solvers with Galerkin, SU/PG and weighted-residual
schemes, a discrete stability analyzer and a convergence harness.
"""

from wrfem.core.weakforms import Formulation
from wrfem.core.problems1d import Mc1dConfig, Transport1dConfig, solve_mc1d, solve_transport1d
from wrfem.core.problems2d import CircAConfig, Team9aConfig, solve_circ_a, solve_team9a_axi
from wrfem.core.problems3d import Team9a3dConfig, solve_team9a_3d
from wrfem.core.stability import analyze
from wrfem.core.harness import compare, convergence
from wrfem.core.config import load_config

__version__ = "0.1.0"
__all__ = [
    "Formulation",
    "Mc1dConfig",
    "Transport1dConfig",
    "solve_mc1d",
    "solve_transport1d",
    "CircAConfig",
    "Team9aConfig",
    "solve_circ_a",
    "solve_team9a_axi",
    "Team9a3dConfig",
    "solve_team9a_3d",
    "analyze",
    "compare",
    "convergence",
    "load_config",
]
