"""
Core package initialization.
"""
from wrfem.core.errors import (
    WrfemError,
    MeshError,
    QuadratureError,
    AssemblyError,
    SolverError,
    ConfigError,
    StabilityError,
    SamplingError,
    ResourceError,
    ConvergenceError
)
from wrfem.core.weakforms import Formulation
from wrfem.core.problems1d import FieldSolution, Mc1dConfig, Transport1dConfig, solve_mc1d, solve_transport1d
from wrfem.core.problems2d import CircAConfig, Team9aConfig, solve_circ_a, solve_team9a_axi
from wrfem.core.problems3d import Team9a3dConfig, solve_team9a_3d
from wrfem.core.stability import analyze, extract_stencil, transfer_function
from wrfem.core.harness import ConvergenceReport, compare, convergence, solve_problem
from wrfem.core.config import RunConfig, load_config, parse_config

__all__ = [
    "WrfemError",
    "MeshError",
    "QuadratureError",
    "AssemblyError",
    "SolverError",
    "ConfigError",
    "StabilityError",
    "SamplingError",
    "ResourceError",
    "ConvergenceError",
    "Formulation",
    "FieldSolution",
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
    "extract_stencil",
    "transfer_function",
    "ConvergenceReport",
    "compare",
    "convergence",
    "solve_problem",
    "RunConfig",
    "load_config",
    "parse_config",
]
