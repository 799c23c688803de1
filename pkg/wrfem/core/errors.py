"""
Exception hierarchy for wrfem.
"""
from typing import Optional


class WrfemError(Exception):
    """Base class for every error raised by wrfem."""


class MeshError(WrfemError, ValueError):
    """
    Invalid mesh request or degenerate element.

    Attributes:
        element (Optional[int]): Offending element id, when known.
    """

    def __init__(self, message: str, element: Optional[int] = None):
        if element is not None:
            message = f"{message} (element {element})"
        super().__init__(message)
        self.element = element


class QuadratureError(WrfemError, ValueError):
    """Unsupported quadrature request."""


class AssemblyError(WrfemError, ValueError):
    """Out-of-range dof, mutation of a finalized system or conflicting constraints."""


class SolverError(WrfemError, RuntimeError):
    """
    Singular or badly solved linear system.

    Attributes:
        pivot (Optional[int]): Column of the failing pivot, when known.
    """

    def __init__(self, message: str, pivot: Optional[int] = None):
        if pivot is not None:
            message = f"{message} (pivot column {pivot})"
        super().__init__(message)
        self.pivot = pivot


class ConfigError(WrfemError, ValueError):
    """Malformed run configuration."""


class StabilityError(WrfemError, ValueError):
    """Stencil extraction or transfer-function failure."""


class SamplingError(WrfemError, ValueError):
    """Sample point outside the mesh or empty sample set."""


class ResourceError(WrfemError, MemoryError):
    """Estimated resource use exceeds the configured cap."""


class ConvergenceError(WrfemError, ValueError):
    """Ill-defined error norm or convergence order."""
