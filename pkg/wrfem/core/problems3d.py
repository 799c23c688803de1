"""
3D Cartesian TEAM-9a solver on a cylindrical hexahedral mesh.

The (z, r) cross-section of the mesh is the axisymmetric one, swept over
n_theta angular elements. Unknowns are phi and A = (A_x, A_y, A_z); the
weighted-residual scheme adds b_x, b_y (normal to the bore) and h_z
(parallel to it) as nodal fields.
"""
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from wrfem.core.errors import ConfigError, ResourceError, SamplingError
from wrfem.core.linalg import BlockAssembler, DofLayout, SparseSystem, apply_dirichlet
from wrfem.core.mesh import Mesh, build_cylinder_mesh, cylinder_layout, evaluate_points
from wrfem.core.problems1d import FieldSolution
from wrfem.core.problems2d import (
    AIR,
    CONDUCTOR,
    REGIONS,
    Team9aConfig,
    curl_at_local,
    curl_at_points,
    finish_solution,
    ground_potential,
    materials,
    reluctivity,
    streamline_weight,
)
from wrfem.core.sources import loop_field_cartesian
from wrfem.core.weakforms import (
    MU0,
    Formulation,
    element_geometry,
    kernel_advection,
    kernel_diffusion,
    kernel_load,
    kernel_mass_pair,
    kernel_pair,
)

logger = logging.getLogger(__name__)

BYTES_PER_ENTRY = 12
FILL_FACTOR = 20.0


@dataclass(frozen=True)
class Team9a3dConfig:
    """
    3D TEAM-9a run.

    Attributes:
        section (Team9aConfig): Physics and (z, r) grading shared with the 2D problem.
        n_theta (int): Angular elements, a multiple of 4.
        memory_cap_mb (float): Upper bound on the estimated solver memory.
    """
    section: Team9aConfig = field(default_factory=lambda: Team9aConfig(mu_r=50.0))
    n_theta: int = 12
    memory_cap_mb: float = 16384.0

    def __post_init__(self):
        if self.n_theta < 4 or self.n_theta % 4:
            raise ConfigError(f"Angular element count must be a positive multiple of 4, got {self.n_theta}")
        if self.memory_cap_mb <= 0:
            raise ConfigError("Memory cap must be positive")

    @property
    def formulation(self) -> Formulation:
        return self.section.formulation

    def axes(self) -> Tuple[np.ndarray, np.ndarray]:
        z_axis, r_axis = self.section.grading().coordinates()
        return z_axis, r_axis


def field_names(formulation: Formulation) -> Tuple[str, ...]:
    base = ("phi", "A_x", "A_y", "A_z")
    if formulation is Formulation.WEIGHTED_RESIDUAL:
        return base + ("b_x", "b_y", "h_z")
    return base


def estimate_memory_mb(cfg: Team9a3dConfig) -> float:
    """
    Rough memory need of assembly plus sparse LU, in MiB.

    Each hexahedral node couples to 27 nodes per field pair; the factor
    fill is taken as a fixed multiple of the matrix.
    """
    z_axis, r_axis = cfg.axes()
    per_layer = (cfg.n_theta // 4 + 1) ** 2 + (len(r_axis) - 2) * cfg.n_theta
    n_nodes = len(z_axis) * per_layer
    n_fields = len(field_names(cfg.formulation))
    nnz = n_nodes * n_fields * 27 * n_fields
    return nnz * BYTES_PER_ENTRY * (1.0 + FILL_FACTOR) / 2.0 ** 20


def build_team9a_3d_mesh(cfg: Team9a3dConfig) -> Mesh:
    """Cylindrical hex mesh whose (z, r) section matches the axisymmetric grading."""
    z_axis, r_axis = cfg.axes()
    bore = cfg.section.bore_radius

    def regions(nominal: np.ndarray) -> np.ndarray:
        return np.where(nominal[:, 1] > bore, CONDUCTOR, AIR)

    return build_cylinder_mesh(z_axis, r_axis, cfg.n_theta, region_fn=regions, region_names=REGIONS)


def solve_team9a_3d(cfg: Team9a3dConfig) -> FieldSolution:
    """
    Solve TEAM-9a in Cartesian coordinates.

    Args:
        cfg (Team9a3dConfig): Problem configuration.

    Returns:
        FieldSolution: Nodal fields; element-centre curl A in `recovered`.

    Raises:
        ResourceError: If the memory estimate exceeds the configured cap.
    """
    estimate = estimate_memory_mb(cfg)
    if estimate > cfg.memory_cap_mb:
        raise ResourceError(f"Estimated memory {estimate:.0f} MiB exceeds cap {cfg.memory_cap_mb:.0f} MiB")
    started = time.perf_counter()
    section = cfg.section
    form = section.formulation
    mesh = build_team9a_3d_mesh(cfg)
    X, Y, Z = 0, 1, 2
    cond = np.nonzero(mesh.region_mask("conductor"))[0]
    geo = element_geometry(mesh, section.quad_order)
    geoc = element_geometry(mesh, section.quad_order, elements=cond)
    regions = materials(section.sigma, section.mu_r)
    nu = reluctivity(mesh, regions)
    sigma = regions["conductor"].sigma
    su = sigma * section.velocity
    n_cond, n_q = geoc.weights.shape
    applied = loop_field_cartesian(section.loop_radius, section.current,
                                   geoc.points.reshape(-1, 3)).reshape(n_cond, n_q, 3)
    bx, by = applied[:, :, X], applied[:, :, Y]

    layout = DofLayout(field_names(form), mesh.n_nodes)
    system = SparseSystem(layout.n_dofs)
    full = BlockAssembler(system, layout, mesh.elements)
    c = BlockAssembler(system, layout, mesh.elements[cond])

    stiff = kernel_diffusion(geo, nu)
    for name in ("A_x", "A_y", "A_z"):
        full.matrix(name, name, stiff)

    # div(sigma (-grad phi + u x curl A)) = -div(sigma u x B^a)
    c.matrix("phi", "phi", kernel_diffusion(geoc, sigma))
    c.matrix("phi", "A_x", kernel_pair(geoc, su, X, Z))
    c.matrix("phi", "A_z", kernel_pair(geoc, su, X, X), scale=-1.0)
    c.matrix("phi", "A_z", kernel_pair(geoc, su, Y, Y), scale=-1.0)
    c.matrix("phi", "A_y", kernel_pair(geoc, su, Y, Z))
    c.vector("phi", kernel_load(geoc, su * by, test=X), scale=-1.0)
    c.vector("phi", kernel_load(geoc, su * bx, test=Y))

    c.matrix("A_x", "phi", kernel_pair(geoc, sigma, None, X))
    c.matrix("A_y", "phi", kernel_pair(geoc, sigma, None, Y))
    c.matrix("A_z", "phi", kernel_pair(geoc, sigma, None, Z))
    c.vector("A_x", kernel_load(geoc, su * by), scale=-1.0)
    c.vector("A_y", kernel_load(geoc, su * bx))

    if form is Formulation.WEIGHTED_RESIDUAL:
        mass = kernel_mass_pair(geoc, su)
        c.matrix("A_x", "b_y", mass)
        c.matrix("A_y", "b_x", mass, scale=-1.0)
        # perpendicular components, weighted by dN/dz
        zz = kernel_pair(geo, nu, Z, Z)
        full.matrix("b_x", "b_x", zz)
        full.matrix("b_x", "h_z", kernel_pair(geo, 1.0, Z, X), scale=-1.0 / MU0)
        c.matrix("b_x", "phi", kernel_pair(geoc, sigma, Z, Y))
        c.matrix("b_x", "A_z", kernel_pair(geoc, su, Z, Y), scale=-1.0)
        c.matrix("b_x", "A_y", kernel_pair(geoc, su, Z, Z))
        c.vector("b_x", kernel_load(geoc, su * bx, test=Z))
        full.matrix("b_y", "b_y", zz)
        full.matrix("b_y", "h_z", kernel_pair(geo, 1.0, Z, Y), scale=-1.0 / MU0)
        c.matrix("b_y", "phi", kernel_pair(geoc, sigma, Z, X), scale=-1.0)
        c.matrix("b_y", "A_x", kernel_pair(geoc, su, Z, Z), scale=-1.0)
        c.matrix("b_y", "A_z", kernel_pair(geoc, su, Z, X))
        c.vector("b_y", kernel_load(geoc, su * by, test=Z))
        # parallel component: mu h_z = dA_y/dx - dA_x/dy, solved for mu0 h_z with the row scaled by 1/mu0
        full.matrix("h_z", "A_y", kernel_pair(geo, 1.0, None, X), scale=1.0 / MU0)
        full.matrix("h_z", "A_x", kernel_pair(geo, 1.0, None, Y), scale=-1.0 / MU0)
        full.matrix("h_z", "h_z", kernel_mass_pair(geo, 1.0 / nu), scale=-1.0 / MU0 ** 2)
    else:
        advection = kernel_advection(geoc, np.array([0.0, 0.0, su]))
        c.matrix("A_x", "A_x", advection)
        c.matrix("A_x", "A_z", kernel_pair(geoc, su, None, X), scale=-1.0)
        c.matrix("A_y", "A_y", advection)
        c.matrix("A_y", "A_z", kernel_pair(geoc, su, None, Y), scale=-1.0)
        w = streamline_weight(mesh, cond, section.mu_sigma_u, form)
        if w is not None:
            c.matrix("A_x", "phi", kernel_pair(geoc, w * sigma, Z, X))
            c.matrix("A_x", "A_x", kernel_pair(geoc, w * su, Z, Z))
            c.matrix("A_x", "A_z", kernel_pair(geoc, w * su, Z, X), scale=-1.0)
            c.vector("A_x", kernel_load(geoc, w[:, None] * su * by, test=Z), scale=-1.0)
            c.matrix("A_y", "phi", kernel_pair(geoc, w * sigma, Z, Y))
            c.matrix("A_y", "A_y", kernel_pair(geoc, w * su, Z, Z))
            c.matrix("A_y", "A_z", kernel_pair(geoc, w * su, Z, Y), scale=-1.0)
            c.vector("A_y", kernel_load(geoc, w[:, None] * su * bx, test=Z))

    system.finalize()
    outer = mesh.boundary["boundary"]
    for name in ("A_x", "A_y", "A_z"):
        apply_dirichlet(system, layout, outer, name, 0.0)
    ground_potential(system, layout, mesh)
    if form is Formulation.WEIGHTED_RESIDUAL:
        # dN/dz-weighted rows sum to zero along each z-line; the upstream edge closes them
        apply_dirichlet(system, layout, mesh.boundary["zmin"], "b_x", 0.0)
        apply_dirichlet(system, layout, mesh.boundary["zmin"], "b_y", 0.0)

    _, r_axis = cfg.axes()
    mu_sigma_u = np.where(mesh.region == CONDUCTOR, section.mu_sigma_u, 0.0)
    solution = finish_solution(mesh, layout, system, form, mu_sigma_u, started, {
        "problem": "team9a_3d", "geometry": "cartesian", "mu_r": section.mu_r,
        "n_theta": cfg.n_theta, "n_radial": len(r_axis) - 1, "memory_estimate_mb": estimate,
    }, scaled={"h_z": MU0} if form is Formulation.WEIGHTED_RESIDUAL else None)
    solution.recovered.update(curl_at_local(solution, np.arange(mesh.n_elements),
                                            np.zeros((mesh.n_elements, 3))))
    return solution


def wedge_angles(n_theta: int) -> np.ndarray:
    """Centre angles of the angular wedges, in (-pi, pi]."""
    centre = -0.25 * math.pi + 2.0 * math.pi * (np.arange(n_theta) + 0.5) / n_theta
    return np.angle(np.exp(1j * centre))


def slice_elements(mesh: Mesh, n_theta: int, n_radial: int, wedge: Optional[int] = None,
                   first_ring: int = 2) -> np.ndarray:
    """
    Elements of one angular wedge on the circular ring layers.

    Args:
        mesh (Mesh): Cylindrical mesh.
        n_theta (int): Angular elements.
        n_radial (int): Radial elements of the cross-section axis.
        wedge (Optional[int]): Wedge index; the one centred nearest theta = 0 by default.
        first_ring (int): First ring layer; layer 1 touches the square core.

    Returns:
        np.ndarray: (n_z, n_rings) element ids ordered by z then r.

    Raises:
        SamplingError: If no ring layer is available.
    """
    layout = cylinder_layout(mesh, n_theta, n_radial)
    if wedge is None:
        wedge = int(np.argmin(np.abs(wedge_angles(n_theta))))
    rings = np.arange(first_ring, n_radial)
    if rings.size == 0:
        raise SamplingError("The slice does not intersect any ring layer")
    layers = np.arange(layout["layers"])
    return (layers[:, None] * layout["per_layer"] + layout["core"]
            + (rings[None, :] - 1) * n_theta + wedge)


def extract_slice(solution: FieldSolution, wedge: Optional[int] = None,
                  first_ring: int = 2) -> Dict[str, np.ndarray]:
    """
    Reaction field on the theta ~ 0 plane of a 3D solution.

    Samples sit at the mid-chord of every element of the selected wedge;
    b_r = b . r_hat uses the sample's actual angle.

    Args:
        solution (FieldSolution): 3D solution (meta holds n_theta and n_radial).
        wedge (Optional[int]): Wedge index, nearest theta = 0 by default.
        first_ring (int): First ring layer sampled.

    Returns:
        Dict[str, np.ndarray]: Flattened "z", "r", "theta", "b_r", "b_z" and the
        (P, 3) "points".
    """
    mesh = solution.mesh
    elements = slice_elements(mesh, solution.meta["n_theta"], solution.meta["n_radial"],
                              wedge, first_ring).ravel()
    xi = np.zeros((elements.size, 3))
    values, _ = evaluate_points(mesh, elements, xi)
    points = np.einsum("pi,pid->pd", values, mesh.coords[mesh.elements[elements]])
    curl = curl_at_local(solution, elements, xi)
    theta = np.arctan2(points[:, 1], points[:, 0])
    b_r = curl["b_x"] * np.cos(theta) + curl["b_y"] * np.sin(theta)
    return {"z": points[:, 2], "r": np.hypot(points[:, 0], points[:, 1]), "theta": theta,
            "b_r": b_r, "b_z": curl["b_z"], "points": points}


def slice_deviation(solution3d: FieldSolution, solution2d: FieldSolution,
                    wedge: Optional[int] = None) -> float:
    """
    Relative L2 deviation of the 3D slice b_r from the axisymmetric b_r.

    The 2D solution is interpolated at the slice's (z, r) positions.

    Args:
        solution3d (FieldSolution): 3D solution.
        solution2d (FieldSolution): Axisymmetric solution on a (z, r) tensor mesh.
        wedge (Optional[int]): Wedge index.

    Returns:
        float: ||b_r^3D - b_r^2D|| / ||b_r^2D||.
    """
    profile = extract_slice(solution3d, wedge)
    reference = curl_at_points(solution2d, np.column_stack([profile["z"], profile["r"]]))["b_r"]
    norm = np.linalg.norm(reference)
    if norm == 0:
        return float(np.linalg.norm(profile["b_r"]))
    return float(np.linalg.norm(profile["b_r"] - reference) / norm)


def theta_spread(solution: FieldSolution) -> float:
    """
    Largest relative L2 difference of any wedge's b_r profile from the wedge mean.

    Args:
        solution (FieldSolution): 3D solution.

    Returns:
        float: Relative spread across angular planes.
    """
    n_theta = solution.meta["n_theta"]
    profiles = np.stack([extract_slice(solution, k)["b_r"] for k in range(n_theta)])
    mean = profiles.mean(axis=0)
    norm = np.linalg.norm(mean)
    if norm == 0:
        return 0.0
    return float(np.max(np.linalg.norm(profiles - mean[None], axis=1)) / norm)
