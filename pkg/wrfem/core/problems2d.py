"""
2D moving-conductor solvers.

Circulation of A: a conducting strip moves along z through a patch of
applied B_x; unknowns (phi, A_y, A_z) plus the auxiliary reaction field
b_x for the weighted-residual scheme. Coordinates are (z, y).

Axisymmetric TEAM-9a: a current loop inside the bore of a conductor that
moves along z; unknowns A_theta plus b_r and h_z for the weighted-residual
scheme. Coordinates are (z, r).
"""
import logging
import math
import time
from dataclasses import dataclass, replace
from typing import Dict, Optional, Tuple

import numpy as np

from wrfem.core.errors import ConfigError, SamplingError
from wrfem.core.linalg import BlockAssembler, DofLayout, SparseSystem, apply_dirichlet
from wrfem.core.mesh import (
    GradingSpec,
    Mesh,
    Segment,
    build_quad_mesh,
    evaluate_points,
    graded_axis,
    locate_points,
)
from wrfem.core.problems1d import FieldSolution
from wrfem.core.sources import loop_field, patch_field
from wrfem.core.weakforms import (
    MU0,
    Formulation,
    element_geometry,
    element_peclet,
    kernel_diffusion,
    kernel_load,
    kernel_mass_pair,
    MaterialRegion,
    MotionSource,
    kernel_advection,
    kernel_grad_weight_pair,
    kernel_pair,
    supg_tau,
)

logger = logging.getLogger(__name__)

AIR, CONDUCTOR = 0, 1
REGIONS = {"air": AIR, "conductor": CONDUCTOR}


@dataclass(frozen=True)
class CircAConfig:
    """
    Moving strip in a rectangular air box.

    Attributes:
        length (float): Domain extent along z in m.
        height (float): Domain extent along y in m.
        strip_width (float): Conductor width d, centred in y.
        sigma (float): Conductor conductivity in S/m.
        mu_r (float): Conductor relative permeability.
        velocity (float): u_z in m/s.
        amplitude (float): Applied B_x inside the patch in T.
        patch_center (float): z centre of the applied-field patch.
        patch_width (float): z width of the patch.
        nz (int): Elements along z.
        ny (int): Elements along y.
        formulation (Formulation): Scheme.
        quad_order (int): Gauss points per direction.
    """
    length: float = 1.0
    height: float = 0.4
    strip_width: float = 0.1
    sigma: float = 1.0e6
    mu_r: float = 1.0
    velocity: float = 10.0
    amplitude: float = 1.0
    patch_center: float = 0.5
    patch_width: float = 0.08
    nz: int = 160
    ny: int = 64
    formulation: Formulation = Formulation.WEIGHTED_RESIDUAL
    quad_order: int = 2

    def __post_init__(self):
        object.__setattr__(self, "formulation", Formulation.parse(self.formulation))
        if self.length <= 0 or self.height <= 0:
            raise ConfigError("Domain extents must be positive")
        if not 0 < self.strip_width < self.height:
            raise ConfigError(f"Strip width {self.strip_width} must lie inside the domain height {self.height}")
        lo, hi = self.patch_bounds
        if not (0 < lo < hi < self.length):
            raise ConfigError("Applied-field patch must lie strictly inside the domain")
        if self.sigma < 0 or self.mu_r <= 0:
            raise ConfigError("Conductivity must be >= 0 and permeability > 0")
        if self.nz < 2 or self.ny < 2:
            raise ConfigError("Need at least two elements per direction")

    @property
    def strip_bounds(self) -> Tuple[float, float]:
        mid = 0.5 * self.height
        return mid - 0.5 * self.strip_width, mid + 0.5 * self.strip_width

    @property
    def patch_bounds(self) -> Tuple[float, float]:
        return self.patch_center - 0.5 * self.patch_width, self.patch_center + 0.5 * self.patch_width

    @property
    def mu_sigma_u(self) -> float:
        return MU0 * self.mu_r * self.sigma * self.velocity

    def level(self, k: int) -> "CircAConfig":
        """Ladder level k: element count doubles per level, alternating z then y."""
        return replace(self, nz=self.nz * 2 ** ((k + 1) // 2), ny=self.ny * 2 ** (k // 2))


@dataclass(frozen=True)
class Team9aConfig:
    """
    Axisymmetric TEAM-9a: loop in the bore of an infinite moving conductor.

    Attributes:
        bore_radius (float): r_i in m.
        loop_radius (float): r_c in m.
        current (float): Loop current in A.
        sigma (float): Conductor conductivity in S/m.
        mu_r (float): Conductor relative permeability.
        velocity (float): Axial speed in m/s.
        z_extent (float): Domain is z in [-z_extent, z_extent].
        outer_radius (float): Truncation radius in m.
        nz_half (int): Elements on each side of the loop plane.
        z_ratio (float): Growth of z elements away from the loop plane.
        n_air (int): Uniform radial elements in the bore.
        n_conductor (int): Radial elements in the conductor.
        r_ratio (float): Growth of conductor elements away from the bore.
        refine (int): Uniform subdivision of every element.
        formulation (Formulation): Scheme.
        quad_order (int): Gauss points per direction.
    """
    bore_radius: float = 0.014
    loop_radius: float = 0.012
    current: float = 1.0
    sigma: float = 5.0e6
    mu_r: float = 1.0
    velocity: float = 100.0
    z_extent: float = 0.1
    outer_radius: float = 0.064
    nz_half: int = 28
    z_ratio: float = 1.14
    n_air: int = 7
    n_conductor: int = 20
    r_ratio: float = 1.15
    refine: int = 1
    formulation: Formulation = Formulation.WEIGHTED_RESIDUAL
    quad_order: int = 2

    def __post_init__(self):
        object.__setattr__(self, "formulation", Formulation.parse(self.formulation))
        if not 0 < self.loop_radius < self.bore_radius < self.outer_radius:
            raise ConfigError("Need 0 < loop radius < bore radius < outer radius")
        if self.z_extent <= 0:
            raise ConfigError("z extent must be positive")
        if min(self.nz_half, self.n_air, self.n_conductor, self.refine) < 1:
            raise ConfigError("Element counts and refinement must be positive")
        if self.sigma < 0 or self.mu_r <= 0:
            raise ConfigError("Conductivity must be >= 0 and permeability > 0")

    @property
    def mu_sigma_u(self) -> float:
        return MU0 * self.mu_r * self.sigma * self.velocity

    def grading(self) -> GradingSpec:
        """(z, r) axis grading, finest at the loop plane and at the bore."""
        grading = GradingSpec((
            graded_axis(-self.z_extent, self.z_extent, 0.0, self.nz_half, self.nz_half, self.z_ratio),
            (Segment(0.0, self.bore_radius, self.n_air),
             Segment(self.bore_radius, self.outer_radius, self.n_conductor, self.r_ratio)),
        ))
        return grading.refined(self.refine) if self.refine > 1 else grading


def build_circ_a_mesh(cfg: CircAConfig) -> Mesh:
    """Rectangle (z, y) with the conducting strip tagged."""
    lo, hi = cfg.strip_bounds

    def regions(centers: np.ndarray) -> np.ndarray:
        return np.where((centers[:, 1] > lo) & (centers[:, 1] < hi), CONDUCTOR, AIR)

    return build_quad_mesh(cfg.nz, cfg.ny, ((0.0, cfg.length), (0.0, cfg.height)),
                           region_fn=regions, region_names=REGIONS)


def build_team9a_mesh(cfg: Team9aConfig) -> Mesh:
    """Graded (z, r) mesh; elements beyond the bore radius are conductor."""
    grading = cfg.grading()
    nz, nr = grading.counts()

    def regions(centers: np.ndarray) -> np.ndarray:
        return np.where(centers[:, 1] > cfg.bore_radius, CONDUCTOR, AIR)

    return build_quad_mesh(nz, nr, ((-cfg.z_extent, cfg.z_extent), (0.0, cfg.outer_radius)),
                           grading=grading, region_fn=regions, region_names=REGIONS,
                           axis_names=("z", "r"))


def materials(sigma: float, mu_r: float) -> Dict[str, MaterialRegion]:
    return {"air": MaterialRegion("air", 0.0), "conductor": MaterialRegion("conductor", sigma, mu_r)}


def reluctivity(mesh: Mesh, regions: Dict[str, MaterialRegion]) -> np.ndarray:
    """Per-element 1/mu from the material of each tagged region."""
    nu = np.empty(mesh.n_elements)
    for name, material in regions.items():
        nu[mesh.region_mask(name)] = 1.0 / material.mu
    return nu


def streamline_weight(mesh: Mesh, elements: np.ndarray, advection: float,
                       formulation: Formulation) -> Optional[np.ndarray]:
    """tau * a per conductor element for SU/PG, None when nothing is added."""
    if formulation is not Formulation.SUPG:
        return None
    tau = supg_tau(mesh.spacing[elements], advection, 1.0)
    if not np.any(tau > 0):
        return None
    return tau * abs(advection)


def finish_solution(mesh: Mesh, layout: DofLayout, system: SparseSystem, formulation: Formulation,
            mu_sigma_u: np.ndarray, started: float, meta: Dict[str, object],
            scaled: Optional[Dict[str, float]] = None) -> FieldSolution:
    """
    Solve a constrained system and wrap the result.

    Fields named in `scaled` were solved as factor * field and are divided back.
    """
    x = system.solve()
    peclet = element_peclet(mesh, mu_sigma_u)
    moving = peclet[peclet > 0]
    solution = FieldSolution(mesh=mesh, layout=layout, nodal=layout.split(x), formulation=formulation,
                             residual=system.residual, peclet=peclet, matrix=system.matrix)
    for name, factor in (scaled or {}).items():
        solution.nodal[name] = solution.nodal[name] / factor
    solution.meta.update(meta)
    solution.meta.update({
        "n_nodes": mesh.n_nodes,
        "n_elements": mesh.n_elements,
        "n_dofs": layout.n_dofs,
        "pe_min": float(moving.min()) if moving.size else 0.0,
        "pe_max": float(moving.max()) if moving.size else 0.0,
        "residual": system.residual,
        "wall_time": time.perf_counter() - started,
    })
    logger.info(f"Solved {meta.get('problem')} ({formulation.value}): {mesh.n_elements} elements, "
                f"{layout.n_dofs} dofs, Pe [{solution.meta['pe_min']:.3g}, {solution.meta['pe_max']:.3g}], "
                f"residual {system.residual:.2e}")
    return solution


def ground_potential(system: SparseSystem, layout: DofLayout, mesh: Mesh) -> None:
    """phi lives on conductor nodes only: zero it elsewhere and pin one conductor node."""
    conducting = mesh.region_nodes([CONDUCTOR])
    if conducting.size == 0:
        apply_dirichlet(system, layout, np.arange(mesh.n_nodes), "phi", 0.0)
        return
    others = np.setdiff1d(np.arange(mesh.n_nodes), conducting)
    apply_dirichlet(system, layout, np.concatenate([others, conducting[:1]]), "phi", 0.0)


def solve_circ_a(cfg: CircAConfig) -> FieldSolution:
    """
    Solve the circulation-of-A moving strip.

    Args:
        cfg (CircAConfig): Problem configuration.

    Returns:
        FieldSolution: Nodal phi, A_y, A_z (and b_x for the weighted-residual
        scheme); element-centre b_x = dA_z/dy - dA_y/dz in `recovered`.
    """
    started = time.perf_counter()
    mesh = build_circ_a_mesh(cfg)
    form = cfg.formulation
    Z, Y = 0, 1
    cond = np.nonzero(mesh.region_mask("conductor"))[0]
    geo = element_geometry(mesh, cfg.quad_order)
    geoc = element_geometry(mesh, cfg.quad_order, elements=cond)
    regions = materials(cfg.sigma, cfg.mu_r)
    nu = reluctivity(mesh, regions)
    sigma = regions["conductor"].sigma
    motion = MotionSource(cfg.velocity, applied_field=lambda z: patch_field(cfg.amplitude, *cfg.patch_bounds, z))
    su = sigma * motion.velocity
    applied = motion.applied_field(geoc.points[:, :, Z])

    fields = ("phi", "A_y", "A_z", "b_x") if form is Formulation.WEIGHTED_RESIDUAL else ("phi", "A_y", "A_z")
    layout = DofLayout(fields, mesh.n_nodes)
    system = SparseSystem(layout.n_dofs)
    full = BlockAssembler(system, layout, mesh.elements)
    c = BlockAssembler(system, layout, mesh.elements[cond])

    stiff = kernel_diffusion(geo, nu)
    full.matrix("A_y", "A_y", stiff)
    full.matrix("A_z", "A_z", stiff)
    c.matrix("phi", "phi", kernel_diffusion(geoc, sigma))
    c.matrix("A_y", "phi", kernel_pair(geoc, sigma, None, Y))
    c.matrix("A_z", "phi", kernel_pair(geoc, sigma, None, Z))
    c.vector("phi", kernel_load(geoc, su * applied, test=Y))
    c.vector("A_y", kernel_load(geoc, su * applied))

    if form is Formulation.WEIGHTED_RESIDUAL:
        c.matrix("phi", "b_x", kernel_pair(geoc, su, Y, None), scale=-1.0)
        c.matrix("A_y", "b_x", kernel_mass_pair(geoc, su), scale=-1.0)
        # reaction-field equation, weighted by dN/dz; its advective term uses curl A
        full.matrix("b_x", "b_x", stiff)
        c.matrix("b_x", "phi", kernel_grad_weight_pair(geoc, sigma, Z, "gradient", Y))
        c.matrix("b_x", "phi", kernel_grad_weight_pair(geoc, sigma, Y, "gradient", Z), scale=-1.0)
        curl = kernel_grad_weight_pair(geoc, su, Z, "curl-x")
        c.matrix("b_x", "A_y", curl["first"], scale=-1.0)
        c.matrix("b_x", "A_z", curl["second"], scale=-1.0)
        c.vector("b_x", kernel_load(geoc, su * applied, test=Z))
    else:
        c.matrix("phi", "A_z", kernel_pair(geoc, su, Y, Y), scale=-1.0)
        c.matrix("phi", "A_y", kernel_pair(geoc, su, Y, Z))
        c.matrix("A_y", "A_z", kernel_pair(geoc, su, None, Y), scale=-1.0)
        c.matrix("A_y", "A_y", kernel_advection(geoc, np.array([su, 0.0])))
        w = streamline_weight(mesh, cond, cfg.mu_sigma_u, form)
        if w is not None:
            c.matrix("A_y", "phi", kernel_pair(geoc, w * sigma, Z, Y))
            c.matrix("A_y", "A_z", kernel_pair(geoc, w * su, Z, Y), scale=-1.0)
            c.matrix("A_y", "A_y", kernel_pair(geoc, w * su, Z, Z))
            c.vector("A_y", kernel_load(geoc, w[:, None] * su * applied, test=Z))

    system.finalize()
    outer = mesh.boundary["boundary"]
    apply_dirichlet(system, layout, outer, "A_y", 0.0)
    apply_dirichlet(system, layout, outer, "A_z", 0.0)
    ground_potential(system, layout, mesh)
    if form is Formulation.WEIGHTED_RESIDUAL:
        # dN/dz-weighted rows sum to zero along each z-line; the upstream edge closes them
        apply_dirichlet(system, layout, mesh.boundary["zmin"], "b_x", 0.0)

    mu_sigma_u = np.where(mesh.region == CONDUCTOR, cfg.mu_sigma_u, 0.0)
    solution = finish_solution(mesh, layout, system, form, mu_sigma_u, started,
                       {"problem": "circ_a", "geometry": "planar"})
    centres = np.zeros((mesh.n_elements, 2))
    solution.recovered.update(curl_at_local(solution, np.arange(mesh.n_elements), centres))
    return solution


def solve_team9a_axi(cfg: Team9aConfig) -> FieldSolution:
    """
    Solve the axisymmetric TEAM-9a problem.

    Args:
        cfg (Team9aConfig): Problem configuration.

    Returns:
        FieldSolution: Nodal A (the theta component), plus b_r and h_z for the
        weighted-residual scheme; element-centre b_r, b_z of curl A in `recovered`.
    """
    started = time.perf_counter()
    mesh = build_team9a_mesh(cfg)
    form = cfg.formulation
    Z, R = 0, 1
    cond = np.nonzero(mesh.region_mask("conductor"))[0]
    geo = element_geometry(mesh, cfg.quad_order, axisymmetric=True, radial_axis=R)
    geoc = element_geometry(mesh, cfg.quad_order, axisymmetric=True, radial_axis=R, elements=cond)
    regions = materials(cfg.sigma, cfg.mu_r)
    nu = reluctivity(mesh, regions)
    motion = MotionSource(cfg.velocity, loop_current=cfg.current, loop_radius=cfg.loop_radius)
    su = regions["conductor"].sigma * motion.velocity
    radius = geo.points[:, :, R]
    applied_r, _ = loop_field(motion.loop_radius, motion.loop_current, geoc.points[:, :, Z], geoc.points[:, :, R])

    fields = ("A", "b_r", "h_z") if form is Formulation.WEIGHTED_RESIDUAL else ("A",)
    layout = DofLayout(fields, mesh.n_nodes)
    system = SparseSystem(layout.n_dofs)
    full = BlockAssembler(system, layout, mesh.elements)
    c = BlockAssembler(system, layout, mesh.elements[cond])

    full.matrix("A", "A", kernel_diffusion(geo, nu) + kernel_mass_pair(geo, nu[:, None] / radius ** 2))
    c.vector("A", kernel_load(geoc, su * applied_r))

    if form is Formulation.WEIGHTED_RESIDUAL:
        c.matrix("A", "b_r", kernel_mass_pair(geoc, su), scale=-1.0)
        # b_r equation weighted by dN/dz
        full.matrix("b_r", "b_r", kernel_pair(geo, nu, Z, Z))
        full.matrix("b_r", "h_z", kernel_pair(geo, 1.0, Z, R), scale=-1.0 / MU0)
        c.matrix("b_r", "A", kernel_pair(geoc, su, Z, Z))
        c.vector("b_r", kernel_load(geoc, su * applied_r, test=Z))
        # mu h_z = dA/dr + A/r; the unknown is mu0 h_z and the row is scaled by 1/mu0
        full.matrix("h_z", "A", kernel_pair(geo, 1.0, None, R) + kernel_mass_pair(geo, 1.0 / radius),
                    scale=1.0 / MU0)
        full.matrix("h_z", "h_z", kernel_mass_pair(geo, 1.0 / nu), scale=-1.0 / MU0 ** 2)
    else:
        c.matrix("A", "A", kernel_advection(geoc, np.array([su, 0.0])))
        w = streamline_weight(mesh, cond, cfg.mu_sigma_u, form)
        if w is not None:
            c.matrix("A", "A", kernel_pair(geoc, w * su, Z, Z))
            c.vector("A", kernel_load(geoc, w[:, None] * su * applied_r, test=Z))

    system.finalize()
    apply_dirichlet(system, layout, mesh.boundary["boundary"], "A", 0.0)
    if form is Formulation.WEIGHTED_RESIDUAL:
        # dN/dz-weighted rows sum to zero along each z-line; the upstream edge closes them
        apply_dirichlet(system, layout, mesh.boundary["zmin"], "b_r", 0.0)

    mu_sigma_u = np.where(mesh.region == CONDUCTOR, cfg.mu_sigma_u, 0.0)
    solution = finish_solution(mesh, layout, system, form, mu_sigma_u, started,
                       {"problem": "team9a_axi", "geometry": "axisymmetric", "mu_r": cfg.mu_r},
                       scaled={"h_z": MU0} if form is Formulation.WEIGHTED_RESIDUAL else None)
    centres = np.zeros((mesh.n_elements, 2))
    solution.recovered.update(curl_at_local(solution, np.arange(mesh.n_elements), centres))
    return solution


def curl_at_local(solution: FieldSolution, elements: np.ndarray, xi: np.ndarray) -> Dict[str, np.ndarray]:
    """
    Curl of the interpolated vector potential at local element points.

    Args:
        solution (FieldSolution): Solution with meta["geometry"] set to
            "planar", "axisymmetric" or "cartesian".
        elements (np.ndarray): (P,) element ids.
        xi (np.ndarray): (P, dim) local points.

    Returns:
        Dict[str, np.ndarray]: "b_x" (planar), "b_r"/"b_z" (axisymmetric) or
        "b_x"/"b_y"/"b_z" (cartesian).
    """
    mesh = solution.mesh
    elements = np.asarray(elements, dtype=int)
    values, grads = evaluate_points(mesh, elements, xi)
    conn = mesh.elements[elements]

    def grad(name: str) -> np.ndarray:
        return np.einsum("pid,pi->pd", grads, solution[name][conn])

    geometry = solution.meta.get("geometry", "planar")
    if geometry == "planar":
        return {"b_x": grad("A_z")[:, 1] - grad("A_y")[:, 0]}
    if geometry == "axisymmetric":
        g = grad("A")
        a = np.einsum("pi,pi->p", values, solution["A"][conn])
        r = np.einsum("pi,pi->p", values, mesh.coords[conn][:, :, 1])
        # A/r -> dA/dr on the axis
        ratio = np.divide(a, r, out=g[:, 1].copy(), where=r > 0)
        return {"b_r": -g[:, 0], "b_z": g[:, 1] + ratio}
    if geometry == "cartesian":
        gx, gy, gz = grad("A_x"), grad("A_y"), grad("A_z")
        return {"b_x": gz[:, 1] - gy[:, 2], "b_y": gx[:, 2] - gz[:, 0], "b_z": gy[:, 0] - gx[:, 1]}
    raise SamplingError(f"Unknown geometry '{geometry}'")


def curl_at_points(solution: FieldSolution, points: np.ndarray) -> Dict[str, np.ndarray]:
    """
    Reaction field (curl A) at physical points of a tensor mesh.

    Args:
        solution (FieldSolution): 2D solution.
        points (np.ndarray): (P, 2) points in mesh coordinates.

    Returns:
        Dict[str, np.ndarray]: Curl components keyed by name.

    Raises:
        SamplingError: If a point lies outside the mesh.
    """
    elements, xi = locate_points(solution.mesh, points)
    return curl_at_local(solution, elements, xi)


def line_points(start, stop, n: int) -> np.ndarray:
    """n equally spaced points on the segment [start, stop]."""
    if n < 2:
        raise SamplingError(f"A sampling line needs at least 2 points, got {n}")
    t = np.linspace(0.0, 1.0, n)[:, None]
    return (1.0 - t) * np.asarray(start, dtype=float)[None] + t * np.asarray(stop, dtype=float)[None]


def line_samples(solution: FieldSolution, start, stop, n: int = 201) -> Dict[str, np.ndarray]:
    """
    Curl of A along a segment.

    Args:
        solution (FieldSolution): 2D solution.
        start: Segment start in mesh coordinates.
        stop: Segment end in mesh coordinates.
        n (int): Number of samples.

    Returns:
        Dict[str, np.ndarray]: "s" arc length, the point coordinates by axis
        name, and the curl components.
    """
    points = line_points(start, stop, n)
    out = {"s": np.linalg.norm(points - points[0], axis=1)}
    for d, name in enumerate(solution.mesh.axis_names):
        out[name] = points[:, d]
    out.update(curl_at_points(solution, points))
    return out


def team9a_total_field(solution: FieldSolution, cfg: Team9aConfig, points: np.ndarray) -> Dict[str, np.ndarray]:
    """
    Total flux density B^a + curl A at (z, r) points.

    Args:
        solution (FieldSolution): Axisymmetric solution.
        cfg (Team9aConfig): Configuration holding the loop.
        points (np.ndarray): (P, 2) points (z, r).

    Returns:
        Dict[str, np.ndarray]: "B_r" and "B_z".
    """
    points = np.atleast_2d(points)
    reaction = curl_at_points(solution, points)
    applied_r, applied_z = loop_field(cfg.loop_radius, cfg.current, points[:, 0], points[:, 1])
    return {"B_r": applied_r + reaction["b_r"], "B_z": applied_z + reaction["b_z"]}


def interface_layer_ratio(solution: FieldSolution, bore_radius: float) -> float:
    """
    Peak |b_r| in the last air element layer over the first conductor layer.

    Values are taken at element centres of the two element columns touching
    r = bore_radius.

    Args:
        solution (FieldSolution): Axisymmetric solution.
        bore_radius (float): Interface radius (an r-axis node).

    Returns:
        float: max|b_r| (air side) / max|b_r| (conductor side).
    """
    mesh = solution.mesh
    z_axis, r_axis = mesh.axes
    j = int(np.argmin(np.abs(r_axis - bore_radius)))
    if not 0 < j < len(r_axis) - 1 or abs(r_axis[j] - bore_radius) > 1e-9 * bore_radius:
        raise SamplingError(f"Radius {bore_radius} is not an interior mesh line")
    zc = 0.5 * (z_axis[:-1] + z_axis[1:])
    air = np.column_stack([zc, np.full(zc.size, 0.5 * (r_axis[j - 1] + r_axis[j]))])
    cond = np.column_stack([zc, np.full(zc.size, 0.5 * (r_axis[j] + r_axis[j + 1]))])
    peak_air = np.abs(curl_at_points(solution, air)["b_r"]).max()
    peak_cond = np.abs(curl_at_points(solution, cond)["b_r"]).max()
    if peak_cond == 0:
        return 0.0 if peak_air == 0 else math.inf
    return float(peak_air / peak_cond)


def circ_a_sample_points(cfg: CircAConfig) -> np.ndarray:
    """
    Error-measurement points: two interior points of every conductor element of `cfg`'s mesh.

    The points sit at fractions (1/3, 1/3) and (2/3, 2/3) of each element,
    which stay strictly inside elements under any number of halvings.

    Args:
        cfg (CircAConfig): Coarsest ladder configuration.

    Returns:
        np.ndarray: (P, 2) points (z, y).
    """
    z = np.linspace(0.0, cfg.length, cfg.nz + 1)
    y = np.linspace(0.0, cfg.height, cfg.ny + 1)
    lo, hi = cfg.strip_bounds
    rows = np.nonzero((0.5 * (y[:-1] + y[1:]) > lo) & (0.5 * (y[:-1] + y[1:]) < hi))[0]
    pts = []
    for frac in (1.0 / 3.0, 2.0 / 3.0):
        zz = z[:-1] + frac * np.diff(z)
        yy = y[rows] + frac * np.diff(y)[rows]
        gz, gy = np.meshgrid(zz, yy, indexing="ij")
        pts.append(np.column_stack([gz.ravel(), gy.ravel()]))
    return np.concatenate(pts)


def circ_a_midline(solution: FieldSolution, cfg: CircAConfig) -> Tuple[np.ndarray, np.ndarray]:
    """
    Recovered b_x at the centres of the element row on the strip mid-line.

    Args:
        solution (FieldSolution): Circulation-of-A solution.
        cfg (CircAConfig): Its configuration.

    Returns:
        Tuple[np.ndarray, np.ndarray]: z positions and b_x values.
    """
    z_axis, y_axis = solution.mesh.axes
    mid = 0.5 * cfg.height
    j = min(int(np.searchsorted(y_axis, mid, side="right")) - 1, len(y_axis) - 2)
    zc = 0.5 * (z_axis[:-1] + z_axis[1:])
    points = np.column_stack([zc, np.full(zc.size, 0.5 * (y_axis[j] + y_axis[j + 1]))])
    return zc, curl_at_points(solution, points)["b_x"]
