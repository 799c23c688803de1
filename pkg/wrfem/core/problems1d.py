"""
1D moving-conductor and transport solvers with closed-form reference solutions.

Moving conductor:  -A'' + c A' = c B,  c = mu*sigma*u_z,  b = -A'.
Transport:         -psi'' + r psi' = S/k,  r = u/k,  F = psi'.
"""
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from wrfem.core.errors import ConfigError, SolverError
from wrfem.core.linalg import DofLayout, SparseSystem, apply_dirichlet
from wrfem.core.mesh import Mesh, build_line_mesh
from wrfem.core.weakforms import (
    Formulation,
    SupgParams,
    element_geometry,
    element_peclet,
    kernel_diffusion,
    kernel_load,
    kernel_mass_pair,
    kernel_pair,
    kernel_supg,
    supg_tau,
)

logger = logging.getLogger(__name__)

BOUNDARY_CONDITIONS = ("dirichlet", "natural")
SOURCE_REPRESENTATIONS = ("exact", "interpolated")


@dataclass(eq=False)
class FieldSolution:
    """
    Nodal solution bound to its mesh and dof layout.

    Attributes:
        mesh (Mesh): The mesh.
        layout (DofLayout): Dof numbering.
        nodal (Dict[str, np.ndarray]): Nodal values per field.
        formulation (Formulation): Scheme used.
        residual (float): Relative solver residual.
        peclet (np.ndarray): Per-element Peclet numbers.
        recovered (Dict[str, np.ndarray]): Element-center derived fields.
        meta (Dict[str, object]): Run metadata.
        matrix (Optional[sp.csr_matrix]): Assembled matrix before Dirichlet elimination.
    """
    mesh: Mesh
    layout: DofLayout
    nodal: Dict[str, np.ndarray]
    formulation: Formulation
    residual: float = 0.0
    peclet: Optional[np.ndarray] = None
    recovered: Dict[str, np.ndarray] = field(default_factory=dict)
    meta: Dict[str, object] = field(default_factory=dict)
    matrix: Optional[sp.csr_matrix] = field(default=None, repr=False)

    def __post_init__(self):
        for name, values in self.nodal.items():
            if values.shape[0] != self.mesh.n_nodes:
                raise SolverError(f"Field '{name}' has {values.shape[0]} values for {self.mesh.n_nodes} nodes")

    def __getitem__(self, name: str) -> np.ndarray:
        return self.nodal[name]


@dataclass(frozen=True)
class Mc1dConfig:
    """
    1D moving-conductor problem.

    Attributes:
        mu_sigma_u (float): mu*sigma*u_z in 1/m.
        amplitude (float): Applied field B inside the support, in T.
        support (Tuple[float, float]): Source support [z_a, z_b].
        n_elems (int): Number of elements.
        domain (Tuple[float, float]): [z0, z1].
        formulation (Formulation): Scheme.
        outflow_bc (str): "dirichlet" (A = 0) or "natural" at the downstream end.
        source (str): "exact" integration of the step or "interpolated" nodal source.
        bx_sampling (str): Where b_x errors are measured: "midpoints" or "nodes".
    """
    mu_sigma_u: float = 1000.0
    amplitude: float = 1.0
    support: Tuple[float, float] = (0.4, 0.6)
    n_elems: int = 50
    domain: Tuple[float, float] = (0.0, 1.0)
    formulation: Formulation = Formulation.WEIGHTED_RESIDUAL
    outflow_bc: str = "dirichlet"
    source: str = "exact"
    bx_sampling: str = "midpoints"

    def __post_init__(self):
        object.__setattr__(self, "formulation", Formulation.parse(self.formulation))
        z0, z1 = self.domain
        za, zb = self.support
        if not z1 > z0:
            raise ConfigError(f"Domain end {z1} must exceed start {z0}")
        if not z0 <= za <= zb <= z1:
            raise ConfigError(f"Source support [{za}, {zb}] must lie inside [{z0}, {z1}]")
        if self.mu_sigma_u < 0:
            raise ConfigError(f"mu_sigma_u must be >= 0, got {self.mu_sigma_u}")
        if self.n_elems < 1:
            raise ConfigError(f"n_elems must be >= 1, got {self.n_elems}")
        if self.outflow_bc not in BOUNDARY_CONDITIONS:
            raise ConfigError(f"outflow_bc must be one of {BOUNDARY_CONDITIONS}")
        if self.source not in SOURCE_REPRESENTATIONS:
            raise ConfigError(f"source must be one of {SOURCE_REPRESENTATIONS}")
        if self.bx_sampling not in ("midpoints", "nodes"):
            raise ConfigError("bx_sampling must be 'midpoints' or 'nodes'")

    @property
    def peclet(self) -> float:
        return self.mu_sigma_u * (self.domain[1] - self.domain[0]) / self.n_elems / 2.0

    def applied_field(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        za, zb = self.support
        return np.where((z >= za) & (z <= zb), self.amplitude, 0.0)


@dataclass(frozen=True)
class Transport1dConfig:
    """
    1D steady transport problem.

    Attributes:
        u_over_k (float): Ratio r = u/k in 1/m.
        diffusivity (float): k; the source is divided by it.
        source (str): "zero" or "z2" (S = z^2).
        psi0 (float): psi at z0.
        psi1 (float): psi at z1.
        n_elems (int): Number of elements.
        domain (Tuple[float, float]): [z0, z1].
        formulation (Formulation): Scheme.
        flux_sign (float): Sign of the flux-diffusion term of the flux equation.
    """
    u_over_k: float = 400.0
    diffusivity: float = 1.0
    source: str = "zero"
    psi0: float = 0.0
    psi1: float = 1.0
    n_elems: int = 10
    domain: Tuple[float, float] = (0.0, 1.0)
    formulation: Formulation = Formulation.WEIGHTED_RESIDUAL
    flux_sign: float = -1.0

    def __post_init__(self):
        object.__setattr__(self, "formulation", Formulation.parse(self.formulation))
        if self.source not in ("zero", "z2"):
            raise ConfigError(f"Unsupported transport source '{self.source}'; expected zero or z2")
        if not self.domain[1] > self.domain[0]:
            raise ConfigError("Transport domain must have positive length")
        if self.n_elems < 1:
            raise ConfigError(f"n_elems must be >= 1, got {self.n_elems}")
        if self.diffusivity <= 0:
            raise ConfigError(f"diffusivity must be > 0, got {self.diffusivity}")
        if self.flux_sign not in (-1.0, 1.0):
            raise ConfigError(f"flux_sign must be -1 or +1, got {self.flux_sign}")

    def source_values(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return z ** 2 if self.source == "z2" else np.zeros_like(z)


def tp1(n_elems: int, formulation=Formulation.WEIGHTED_RESIDUAL) -> Transport1dConfig:
    """Transport test problem 1: S = 0, psi(0) = 0, psi(1) = 1, u/k = 400."""
    return Transport1dConfig(u_over_k=400.0, source="zero", psi0=0.0, psi1=1.0,
                             n_elems=n_elems, formulation=formulation)


def tp2(n_elems: int, formulation=Formulation.WEIGHTED_RESIDUAL) -> Transport1dConfig:
    """Transport test problem 2: S = z^2, psi = 0 at both ends, u/k = 200."""
    return Transport1dConfig(u_over_k=200.0, source="z2", psi0=0.0, psi1=0.0,
                             n_elems=n_elems, formulation=formulation)


def _sparse_blocks(rows: np.ndarray, cols: np.ndarray, blocks: np.ndarray, shape) -> sp.csr_matrix:
    e, n, m = blocks.shape
    r = np.broadcast_to(rows[:, :, None], (e, n, m)).ravel()
    c = np.broadcast_to(cols[:, None, :], (e, n, m)).ravel()
    return sp.coo_matrix((blocks.ravel(), (r, c)), shape=shape).tocsr()


def _step_loads(mesh: Mesh, amplitude: float, za: float, zb: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Exact integrals of a step source against N_i and dN_i/dz on each element.

    Returns:
        Tuple[np.ndarray, np.ndarray]: (E, 2) arrays of int N_i B and int N_i' B.
    """
    zl = mesh.coords[mesh.elements[:, 0], 0]
    zr = mesh.coords[mesh.elements[:, 1], 0]
    h = zr - zl
    p = np.clip(za, zl, zr)
    q = np.clip(zb, zl, zr)
    value = np.stack([((zr - p) ** 2 - (zr - q) ** 2) / (2.0 * h),
                      ((q - zl) ** 2 - (p - zl) ** 2) / (2.0 * h)], axis=1)
    slope = np.stack([-(q - p) / h, (q - p) / h], axis=1)
    return amplitude * value, amplitude * slope


@dataclass(eq=False)
class Assembled1d:
    """
    Assembled 1D system before boundary conditions.

    Attributes:
        system (SparseSystem): Finalized system including closure rows.
        layout (DofLayout): Dof numbering.
        source_matrix (sp.csr_matrix): Maps nodal source values to the right-hand side.
        upstream (int): Node index of the inflow boundary.
        tau (Optional[np.ndarray]): SU/PG parameter per element.
    """
    system: SparseSystem
    layout: DofLayout
    source_matrix: sp.csr_matrix
    upstream: int
    tau: Optional[np.ndarray] = None


def _assemble_advection_diffusion(mesh: Mesh, speed: float, formulation: Formulation,
                                  fields: Tuple[str, str], aux_mass_sign: float,
                                  aux_diffusion_sign: float, closure_sign: float,
                                  source_scale: float,
                                  exact_loads: Optional[Tuple[np.ndarray, np.ndarray]],
                                  nodal_source: Optional[np.ndarray]) -> Assembled1d:
    """
    Shared assembly of -u'' + a u' = a_src f in primary/auxiliary or single-field form.

    The weighted-residual pair is
        int N' u' + aux_mass_sign * a * int N w          = int N g
        aux_diffusion_sign * int N' w' + a * int N' u'   = int N' g
    where w is the auxiliary derivative field and g the scaled source.
    """
    geo = element_geometry(mesh, order=2)
    n = mesh.n_nodes
    conn = mesh.elements
    stiff = kernel_diffusion(geo, 1.0)
    mass = kernel_mass_pair(geo, 1.0)
    slope = kernel_pair(geo, 1.0, test=0, trial=None)

    upstream = 0 if speed >= 0 else n - 1
    if formulation is Formulation.WEIGHTED_RESIDUAL:
        layout = DofLayout(fields, n)
        system = SparseSystem(layout.n_dofs)
        u_dofs, w_dofs = conn, conn + n
        system.add_blocks(u_dofs, u_dofs, stiff)
        system.add_blocks(u_dofs, w_dofs, aux_mass_sign * speed * mass)
        system.add_blocks(w_dofs, w_dofs, aux_diffusion_sign * stiff)
        system.add_blocks(w_dofs, u_dofs, speed * stiff)
        source_matrix = sp.vstack([
            _sparse_blocks(conn, conn, source_scale * mass, (n, n)),
            _sparse_blocks(conn, conn, source_scale * slope, (n, n)),
        ]).tocsr()
        if exact_loads is not None:
            value, deriv = exact_loads
            system.add_vectors(u_dofs, source_scale * value)
            system.add_vectors(w_dofs, source_scale * deriv)
        tau = None
    else:
        layout = DofLayout(fields[:1], n)
        system = SparseSystem(layout.n_dofs)
        system.add_blocks(conn, conn, stiff + speed * kernel_pair(geo, 1.0, test=None, trial=0))
        source_blocks = source_scale * mass
        tau = None
        if formulation is Formulation.SUPG:
            tau = supg_tau(mesh.spacing, speed, 1.0)
            # tau = 0 must reproduce Galerkin bitwise
            if np.any(tau > 0):
                supg_matrix, _ = kernel_supg(geo, np.array([speed]), SupgParams(tau))
                system.add_blocks(conn, conn, supg_matrix)
                source_blocks = source_blocks + (tau * speed * source_scale)[:, None, None] * slope
        source_matrix = _sparse_blocks(conn, conn, source_blocks, (n, n))
        if exact_loads is not None:
            value, deriv = exact_loads
            loads = source_scale * value
            if tau is not None and np.any(tau > 0):
                loads = loads + (tau * speed * source_scale)[:, None] * deriv
            system.add_vectors(conn, loads)

    system.finalize()
    if nodal_source is not None:
        system.rhs = system.rhs + source_matrix @ nodal_source

    if formulation is Formulation.WEIGHTED_RESIDUAL:
        # the auxiliary rows sum to zero; the inflow one is replaced by the
        # primary equation carrying its boundary flux term
        u_row = layout.dofs(upstream, fields[0])
        w_row = layout.dofs(upstream, fields[1])
        closure = system.matrix[[u_row], :].tolil()
        boundary = -1.0 if upstream == 0 else 1.0
        closure[0, w_row] = closure[0, w_row] + closure_sign * boundary
        system.replace_rows([w_row], closure.tocsr(), [system.rhs[u_row]])
    return Assembled1d(system=system, layout=layout, source_matrix=source_matrix,
                       upstream=upstream, tau=tau)


def assemble_mc1d(cfg: Mc1dConfig, mesh: Optional[Mesh] = None,
                  nodal_source: Optional[np.ndarray] = None) -> Assembled1d:
    """
    Assemble the moving-conductor system without boundary conditions.

    Args:
        cfg (Mc1dConfig): Problem configuration.
        mesh (Optional[Mesh]): Mesh, built from the config by default.
        nodal_source (Optional[np.ndarray]): Nodal B values overriding the config's source.

    Returns:
        Assembled1d: The assembled system and source operator.
    """
    mesh = mesh or build_line_mesh(cfg.n_elems, *cfg.domain)
    c = cfg.mu_sigma_u
    exact = None
    if nodal_source is None:
        if cfg.source == "exact":
            exact = _step_loads(mesh, cfg.amplitude, *cfg.support)
        else:
            nodal_source = cfg.applied_field(mesh.coords[:, 0])
    return _assemble_advection_diffusion(
        mesh, c, cfg.formulation, ("A_y", "b_x"),
        aux_mass_sign=-1.0, aux_diffusion_sign=1.0, closure_sign=1.0,
        source_scale=c, exact_loads=exact, nodal_source=nodal_source)


def _finish(mesh: Mesh, assembled: Assembled1d, formulation: Formulation, peclet: np.ndarray,
            derivative_field: Tuple[str, float], started: float) -> FieldSolution:
    x = assembled.system.solve()
    nodal = assembled.layout.split(x)
    primary = assembled.layout.fields[0]
    name, sign = derivative_field
    grad = np.diff(nodal[primary]) / np.diff(mesh.coords[:, 0])
    recovered = {name: sign * grad}
    solution = FieldSolution(mesh=mesh, layout=assembled.layout, nodal=nodal, formulation=formulation,
                             residual=assembled.system.residual, peclet=peclet, recovered=recovered,
                             matrix=assembled.system.matrix)
    solution.meta.update({
        "n_nodes": mesh.n_nodes,
        "n_elements": mesh.n_elements,
        "n_dofs": assembled.layout.n_dofs,
        "pe_min": float(peclet.min()),
        "pe_max": float(peclet.max()),
        "residual": assembled.system.residual,
        "wall_time": time.perf_counter() - started,
    })
    if assembled.tau is not None:
        solution.meta["supg_tau"] = "optimal-1d"
    logger.info(f"Solved {formulation.value} 1D problem: {mesh.n_elements} elements, "
                f"Pe {peclet.max():.3g}, residual {assembled.system.residual:.2e}")
    return solution


def solve_mc1d(cfg: Mc1dConfig) -> FieldSolution:
    """
    Solve the 1D moving-conductor problem.

    Args:
        cfg (Mc1dConfig): Problem configuration.

    Returns:
        FieldSolution: Nodal A_y (and b_x for the weighted-residual scheme);
        the recovered b_x = -dA_y/dz per element is always available.
    """
    started = time.perf_counter()
    mesh = build_line_mesh(cfg.n_elems, *cfg.domain)
    assembled = assemble_mc1d(cfg, mesh)
    layout = assembled.layout
    downstream = mesh.n_nodes - 1 - assembled.upstream
    apply_dirichlet(assembled.system, layout, [assembled.upstream], "A_y", 0.0)
    if cfg.outflow_bc == "dirichlet":
        apply_dirichlet(assembled.system, layout, [downstream], "A_y", 0.0)
    peclet = element_peclet(mesh, cfg.mu_sigma_u)
    return _finish(mesh, assembled, cfg.formulation, peclet, ("b_x", -1.0), started)


def assemble_transport1d(cfg: Transport1dConfig, mesh: Optional[Mesh] = None) -> Assembled1d:
    """Assemble the transport system without boundary conditions."""
    mesh = mesh or build_line_mesh(cfg.n_elems, *cfg.domain)
    geo = element_geometry(mesh, order=3)
    s = cfg.source_values(geo.points[:, :, 0])
    loads = (kernel_load(geo, s), kernel_load(geo, s, test=0))
    return _assemble_advection_diffusion(
        mesh, cfg.u_over_k, cfg.formulation, ("psi", "F_z"),
        aux_mass_sign=1.0, aux_diffusion_sign=cfg.flux_sign, closure_sign=-1.0,
        source_scale=1.0 / cfg.diffusivity, exact_loads=loads, nodal_source=None)


def solve_transport1d(cfg: Transport1dConfig) -> FieldSolution:
    """
    Solve the 1D transport problem with Dirichlet psi at both ends.

    Args:
        cfg (Transport1dConfig): Problem configuration.

    Returns:
        FieldSolution: Nodal psi (and F_z for the weighted-residual scheme).
    """
    started = time.perf_counter()
    mesh = build_line_mesh(cfg.n_elems, *cfg.domain)
    assembled = assemble_transport1d(cfg, mesh)
    apply_dirichlet(assembled.system, assembled.layout, mesh.boundary["left"], "psi", cfg.psi0)
    apply_dirichlet(assembled.system, assembled.layout, mesh.boundary["right"], "psi", cfg.psi1)
    peclet = element_peclet(mesh, cfg.u_over_k)
    return _finish(mesh, assembled, cfg.formulation, peclet, ("F_z", 1.0), started)


def analytic_mc1d(cfg: Mc1dConfig, z: np.ndarray, outflow_bc: Optional[str] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Exact solution of -A'' + c A' = c B for a step source.

    On each of the three intervals A = alpha + beta * g(z) + B z with
    g(z) = expm1(c (z - z_right)) / c, so no exponential exceeds one.

    Args:
        cfg (Mc1dConfig): Problem configuration.
        z (np.ndarray): Evaluation points in the domain.
        outflow_bc (Optional[str]): Override of the config's downstream condition.

    Returns:
        Tuple[np.ndarray, np.ndarray]: (A_y, b_x) at z.
    """
    outflow_bc = outflow_bc or cfg.outflow_bc
    c = cfg.mu_sigma_u
    z0, z1 = cfg.domain
    za, zb = cfg.support
    edges = [z0, za, zb, z1]
    levels = [0.0, cfg.amplitude, 0.0]

    def g(zz, right):
        s = np.asarray(zz, dtype=float) - right
        return np.expm1(c * s) / c if c > 0 else s

    def dg(zz, right):
        s = np.asarray(zz, dtype=float) - right
        return np.exp(c * s) if c > 0 else np.ones_like(s)

    # unknowns (alpha_k, beta_k) for k = 0, 1, 2
    mat = np.zeros((6, 6))
    rhs = np.zeros(6)
    mat[0, 0:2] = [1.0, g(z0, za)]
    rhs[0] = -levels[0] * z0
    for k, zk in ((0, za), (1, zb)):
        right_k, right_n = edges[k + 1], edges[k + 2]
        row = 1 + 2 * k
        mat[row, 2 * k:2 * k + 2] = [1.0, g(zk, right_k)]
        mat[row, 2 * k + 2:2 * k + 4] = [-1.0, -g(zk, right_n)]
        rhs[row] = (levels[k + 1] - levels[k]) * zk
        mat[row + 1, 2 * k + 1] = dg(zk, right_k)
        mat[row + 1, 2 * k + 3] = -dg(zk, right_n)
        rhs[row + 1] = levels[k + 1] - levels[k]
    if outflow_bc == "dirichlet":
        mat[5, 4:6] = [1.0, g(z1, z1)]
        rhs[5] = -levels[2] * z1
    else:
        mat[5, 5] = dg(z1, z1)
        rhs[5] = -levels[2]
    coef = np.linalg.solve(mat, rhs)

    z = np.asarray(z, dtype=float)
    a = np.zeros_like(z)
    b = np.zeros_like(z)
    for k in range(3):
        lo, hi = edges[k], edges[k + 1]
        mask = (z >= lo) & (z <= hi) if k == 2 else (z >= lo) & (z < hi)
        alpha, beta = coef[2 * k], coef[2 * k + 1]
        a[mask] = alpha + beta * g(z[mask], hi) + levels[k] * z[mask]
        b[mask] = -(beta * dg(z[mask], hi) + levels[k])
    return a, b


def _transport_particular(cfg: Transport1dConfig) -> Tuple[Callable, Callable]:
    r = cfg.u_over_k
    k = cfg.diffusivity
    if cfg.source == "zero":
        return (lambda z: np.zeros_like(z)), (lambda z: np.zeros_like(z))
    if r == 0:
        return (lambda z: -z ** 4 / (12.0 * k)), (lambda z: -z ** 3 / (3.0 * k))
    return (lambda z: (z ** 3 / (3.0 * r) + z ** 2 / r ** 2 + 2.0 * z / r ** 3) / k,
            lambda z: (z ** 2 / r + 2.0 * z / r ** 2 + 2.0 / r ** 3) / k)


def analytic_transport(cfg: Transport1dConfig, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Exact solution of -psi'' + r psi' = S/k on [0, 1] with Dirichlet ends.

    Args:
        cfg (Transport1dConfig): Problem configuration (domain must be [0, 1]).
        z (np.ndarray): Evaluation points.

    Returns:
        Tuple[np.ndarray, np.ndarray]: (psi, F_z) at z.

    Raises:
        ConfigError: If the domain is not [0, 1].
    """
    if tuple(cfg.domain) != (0.0, 1.0):
        raise ConfigError("Closed-form transport solution is defined on [0, 1]")
    z = np.asarray(z, dtype=float)
    r = cfg.u_over_k
    p, dp = _transport_particular(cfg)
    jump = cfg.psi1 - cfg.psi0 - float(p(np.array(1.0)))
    if r == 0:
        return p(z) + cfg.psi0 + jump * z, dp(z) + jump
    if r > 0:
        # homogeneous pair (1, exp(r (z - 1)))
        beta = jump / (-math.expm1(-r))
        alpha = cfg.psi0 - beta * math.exp(-r)
        e = np.exp(r * (z - 1.0))
    else:
        beta = jump / math.expm1(r)
        alpha = cfg.psi0 - beta
        e = np.exp(r * z)
    return p(z) + alpha + beta * e, dp(z) + r * beta * e


def bx_samples(cfg: Mc1dConfig, solution: FieldSolution) -> Tuple[np.ndarray, np.ndarray]:
    """
    b_x values and positions used for error measurement.

    Weighted-residual solutions use the nodal b_x field (averaged to element
    midpoints when sampling there); the other schemes use -dA_y/dz.

    Args:
        cfg (Mc1dConfig): Problem configuration.
        solution (FieldSolution): Solved problem.

    Returns:
        Tuple[np.ndarray, np.ndarray]: (z, b_x).
    """
    z = solution.mesh.coords[:, 0]
    mid = 0.5 * (z[:-1] + z[1:])
    if "b_x" in solution.nodal:
        nodal = solution.nodal["b_x"]
        if cfg.bx_sampling == "nodes":
            return z, nodal
        return mid, 0.5 * (nodal[:-1] + nodal[1:])
    if cfg.bx_sampling == "nodes":
        # average of the adjacent element slopes, one-sided at the ends
        rec = solution.recovered["b_x"]
        nodal = np.concatenate([[rec[0]], 0.5 * (rec[:-1] + rec[1:]), [rec[-1]]])
        return z, nodal
    return mid, solution.recovered["b_x"]
