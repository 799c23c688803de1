"""
Element kernels for the Galerkin, weighted-residual and SU/PG formulations.

Kernels are evaluated for all (or a subset of) elements at once and return
(E, n, m) local matrices or (E, n) local vectors, ready for
`SparseSystem.add_blocks`. Axisymmetric geometry folds 2*pi*r into the
quadrature weights.
"""
import enum
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np

from wrfem.core.errors import AssemblyError, ConfigError
from wrfem.core.mesh import Mesh, gauss_rule, shape_gradients, shape_values

logger = logging.getLogger(__name__)

MU0 = 4.0e-7 * math.pi

Coefficient = Union[float, np.ndarray]


@dataclass(frozen=True)
class MaterialRegion:
    """
    Homogeneous material.

    Attributes:
        name (str): Region name.
        sigma (float): Conductivity in S/m.
        mu_r (float): Relative permeability.
    """
    name: str
    sigma: float
    mu_r: float = 1.0

    def __post_init__(self):
        if self.sigma < 0:
            raise ConfigError(f"Region '{self.name}': conductivity must be >= 0, got {self.sigma}")
        if self.mu_r <= 0:
            raise ConfigError(f"Region '{self.name}': relative permeability must be > 0, got {self.mu_r}")

    @property
    def mu(self) -> float:
        return MU0 * self.mu_r

    @property
    def conducting(self) -> bool:
        return self.sigma > 0


@dataclass(frozen=True)
class MotionSource:
    """
    Conductor motion and excitation.

    Attributes:
        velocity (float): Speed along the flow axis in m/s.
        applied_field (Optional[Callable]): Maps (P, dim) points to applied flux density.
        source (Optional[Callable]): Transport source S at (P,) positions.
        diffusivity (float): Transport diffusivity k.
        loop_current (float): Source loop current in A.
        loop_radius (float): Source loop radius in m.
    """
    velocity: float
    applied_field: Optional[Callable[[np.ndarray], np.ndarray]] = None
    source: Optional[Callable[[np.ndarray], np.ndarray]] = None
    diffusivity: float = 1.0
    loop_current: float = 1.0
    loop_radius: float = 0.0


@dataclass(frozen=True)
class SupgParams:
    """
    Per-element streamline-upwind stabilization.

    Attributes:
        tau (np.ndarray): (E,) stabilization parameter, >= 0.
        formula (str): Name of the formula that produced tau.
    """
    tau: np.ndarray
    formula: str = "optimal-1d"


def element_peclet(mesh: Mesh, mu_sigma_u: Coefficient) -> np.ndarray:
    """
    Element Peclet numbers Pe = mu*sigma*|u|*h/2.

    Args:
        mesh (Mesh): Mesh providing streamline element lengths.
        mu_sigma_u (Coefficient): mu*sigma*u, scalar or per element.

    Returns:
        np.ndarray: (n_elements,) non-negative Peclet numbers.
    """
    return np.abs(np.asarray(mu_sigma_u, dtype=float)) * mesh.spacing / 2.0


def supg_tau(h: np.ndarray, speed: np.ndarray, diffusivity: Coefficient = 1.0) -> np.ndarray:
    """
    Optimal 1D streamline-upwind parameter tau = h/(2|a|) (coth Pe - 1/Pe).

    Args:
        h (np.ndarray): Streamline element lengths.
        speed (np.ndarray): Advection speed |a| per element.
        diffusivity (Coefficient): Diffusion coefficient kappa.

    Returns:
        np.ndarray: tau per element; zero where the speed is zero.
    """
    h = np.asarray(h, dtype=float)
    speed = np.abs(np.broadcast_to(np.asarray(speed, dtype=float), h.shape))
    kappa = np.broadcast_to(np.asarray(diffusivity, dtype=float), h.shape)
    pe = speed * h / (2.0 * kappa)
    xi = np.zeros_like(pe)
    small = pe < 1e-3
    xi[small] = pe[small] / 3.0 - pe[small] ** 3 / 45.0
    big = ~small
    xi[big] = 1.0 / np.tanh(pe[big]) - 1.0 / pe[big]
    tau = np.zeros_like(pe)
    moving = speed > 0
    tau[moving] = h[moving] / (2.0 * speed[moving]) * xi[moving]
    return tau


@dataclass(frozen=True, eq=False)
class ElementGeometry:
    """
    Quadrature data for a set of elements.

    Attributes:
        elements (np.ndarray): (E,) element ids.
        values (np.ndarray): (Q, n) shape values.
        gradients (np.ndarray): (E, Q, n, dim) physical gradients.
        weights (np.ndarray): (E, Q) integration weights (det J * w, times 2*pi*r if axisymmetric).
        points (np.ndarray): (E, Q, dim) physical quadrature points.
    """
    elements: np.ndarray
    values: np.ndarray
    gradients: np.ndarray
    weights: np.ndarray
    points: np.ndarray

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]


def element_geometry(mesh: Mesh, order: int = 2, axisymmetric: bool = False, radial_axis: int = 1,
                     elements: Optional[np.ndarray] = None) -> ElementGeometry:
    """
    Precompute shape data on a set of elements.

    Args:
        mesh (Mesh): The mesh.
        order (int): Gauss points per direction.
        axisymmetric (bool): Fold 2*pi*r into the weights.
        radial_axis (int): Coordinate index of r when axisymmetric.
        elements (Optional[np.ndarray]): Element ids, all by default.

    Returns:
        ElementGeometry: Quadrature data.
    """
    rule = gauss_rule(mesh.kind, order)
    ids = np.arange(mesh.n_elements) if elements is None else np.asarray(elements, dtype=int)
    values = shape_values(mesh.kind, rule.points)
    ref = shape_gradients(mesh.kind, rule.points)
    x = mesh.coords[mesh.elements[ids]]
    jac = np.einsum("qia,eib->eqab", ref, x)
    det = np.linalg.det(jac)
    if np.any(det <= 0):
        bad = ids[np.nonzero((det <= 0).any(axis=1))[0][0]]
        raise AssemblyError(f"Non-positive Jacobian on element {bad}")
    inv = np.linalg.inv(jac)
    grads = np.einsum("qia,eqba->eqib", ref, inv)
    points = np.einsum("qi,eid->eqd", values, x)
    weights = det * rule.weights[None, :]
    if axisymmetric:
        weights = weights * 2.0 * math.pi * points[:, :, radial_axis]
    return ElementGeometry(elements=ids, values=values, gradients=grads, weights=weights, points=points)


def _coefficient(geo: ElementGeometry, c: Coefficient) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.ndim == 0:
        return np.full(geo.weights.shape, float(c))
    if c.ndim == 1:
        if c.shape[0] != geo.n_elements:
            raise AssemblyError(f"Coefficient has {c.shape[0]} entries for {geo.n_elements} elements")
        return np.broadcast_to(c[:, None], geo.weights.shape)
    if c.shape != geo.weights.shape:
        raise AssemblyError(f"Coefficient shape {c.shape} does not match quadrature {geo.weights.shape}")
    return c


def _factor(geo: ElementGeometry, derivative: Optional[int]) -> np.ndarray:
    """(E, Q, n) test/trial factor: N or dN/dx_d."""
    if derivative is None:
        return np.broadcast_to(geo.values[None], geo.weights.shape + (geo.values.shape[1],))
    dim = geo.gradients.shape[-1]
    if not 0 <= derivative < dim:
        raise AssemblyError(f"Derivative direction {derivative} invalid in {dim}D")
    return geo.gradients[:, :, :, derivative]


def kernel_pair(geo: ElementGeometry, c: Coefficient, test: Optional[int] = None,
                trial: Optional[int] = None) -> np.ndarray:
    """
    Generic pairing int c * D_test(N_i) * D_trial(N_j).

    Args:
        geo (ElementGeometry): Quadrature data.
        c (Coefficient): Scalar, per element or per quadrature point.
        test (Optional[int]): Derivative direction on the weight, None for the value.
        trial (Optional[int]): Derivative direction on the trial function, None for the value.

    Returns:
        np.ndarray: (E, n, n) local matrices.
    """
    cw = _coefficient(geo, c) * geo.weights
    return np.einsum("eq,eqi,eqj->eij", cw, _factor(geo, test), _factor(geo, trial))


def kernel_diffusion(geo: ElementGeometry, c: Coefficient) -> np.ndarray:
    """
    Diffusion matrix int c grad N_i . grad N_j.

    Args:
        geo (ElementGeometry): Quadrature data.
        c (Coefficient): Positive coefficient.

    Returns:
        np.ndarray: (E, n, n) symmetric matrices with zero row sums.
    """
    cw = _coefficient(geo, c) * geo.weights
    return np.einsum("eq,eqid,eqjd->eij", cw, geo.gradients, geo.gradients)


def kernel_mass_pair(geo: ElementGeometry, c: Coefficient) -> np.ndarray:
    """Mass matrix int c N_i N_j."""
    return kernel_pair(geo, c, None, None)


def kernel_grad_weight_pair(geo: ElementGeometry, c: Coefficient, direction: int,
                            trial_form: str = "value",
                            trial_direction: Optional[int] = None) -> Union[np.ndarray, Dict[str, np.ndarray]]:
    """
    Pairings weighted by a derivative of the shape function.

    Args:
        geo (ElementGeometry): Quadrature data.
        c (Coefficient): Coefficient.
        direction (int): Weight derivative direction d in dN_i/dx_d.
        trial_form (str): "value", "gradient" (needs trial_direction) or "curl-x".
        trial_direction (Optional[int]): Trial derivative direction for "gradient".

    Returns:
        np.ndarray or Dict[str, np.ndarray]: (E, n, n) matrix, or for "curl-x" the
        blocks multiplying the (first, second) in-plane vector components, keyed
        "first" and "second": curl-x of (A_1, A_2) in coordinates (x_0, x_1) is
        dA_2/dx_1 - dA_1/dx_0.
    """
    if trial_form == "value":
        return kernel_pair(geo, c, direction, None)
    if trial_form == "gradient":
        if trial_direction is None:
            raise AssemblyError("Gradient pairing needs a trial direction")
        return kernel_pair(geo, c, direction, trial_direction)
    if trial_form == "curl-x":
        return {"first": -kernel_pair(geo, c, direction, 0),
                "second": kernel_pair(geo, c, direction, 1)}
    raise AssemblyError(f"Unknown trial form '{trial_form}'")


def kernel_advection(geo: ElementGeometry, velocity: np.ndarray, c: Coefficient = 1.0) -> np.ndarray:
    """
    Galerkin advection int c N_i (a . grad N_j).

    Args:
        geo (ElementGeometry): Quadrature data.
        velocity (np.ndarray): (dim,) constant advection vector.
        c (Coefficient): Coefficient multiplying the term.

    Returns:
        np.ndarray: (E, n, n) local matrices.
    """
    cw = _coefficient(geo, c) * geo.weights
    a_grad = np.einsum("eqjd,d->eqj", geo.gradients, np.asarray(velocity, dtype=float))
    return np.einsum("eq,qi,eqj->eij", cw, geo.values, a_grad)


def kernel_load(geo: ElementGeometry, f: Coefficient, test: Optional[int] = None) -> np.ndarray:
    """
    Load vector int f D_test(N_i).

    Args:
        geo (ElementGeometry): Quadrature data.
        f (Coefficient): Source at quadrature points (or per element / scalar).
        test (Optional[int]): Weight derivative direction, None for the value.

    Returns:
        np.ndarray: (E, n) local vectors.
    """
    fw = _coefficient(geo, f) * geo.weights
    return np.einsum("eq,eqi->ei", fw, _factor(geo, test))


def kernel_supg(geo: ElementGeometry, velocity: np.ndarray, params: SupgParams,
                f: Optional[Coefficient] = None) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """
    Streamline-upwind terms int tau (a.grad N_i)(a.grad N_j) and int tau (a.grad N_i) f.

    Args:
        geo (ElementGeometry): Quadrature data.
        velocity (np.ndarray): (dim,) advection vector.
        params (SupgParams): Per-element tau.
        f (Optional[Coefficient]): Right-hand side density of the stabilized equation.

    Returns:
        Tuple[np.ndarray, Optional[np.ndarray]]: Matrix addition and load addition.
    """
    tau = np.asarray(params.tau, dtype=float)
    if tau.shape != (geo.n_elements,):
        raise AssemblyError(f"tau has shape {tau.shape}, expected ({geo.n_elements},)")
    if np.any(tau < 0):
        raise AssemblyError("tau must be non-negative")
    a_grad = np.einsum("eqjd,d->eqj", geo.gradients, np.asarray(velocity, dtype=float))
    tw = tau[:, None] * geo.weights
    matrix = np.einsum("eq,eqi,eqj->eij", tw, a_grad, a_grad)
    load = None
    if f is not None:
        load = np.einsum("eq,eqi->ei", _coefficient(geo, f) * tw, a_grad)
    return matrix, load


class Formulation(enum.Enum):
    """Discretization schemes."""
    GALERKIN = "galerkin"
    WEIGHTED_RESIDUAL = "wr"
    SUPG = "supg"

    @classmethod
    def parse(cls, value: Union[str, "Formulation"]) -> "Formulation":
        """
        Parse a formulation name.

        Args:
            value (Union[str, Formulation]): "galerkin", "wr", "weighted_residual" or "supg".

        Returns:
            Formulation: The formulation.

        Raises:
            ConfigError: On an unknown name.
        """
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"weighted_residual": "wr", "su_pg": "supg", "supg": "supg"}
        key = aliases.get(key, key)
        for member in cls:
            if member.value == key:
                return member
        raise ConfigError(f"Unknown formulation '{value}'; expected galerkin, wr or supg")
