"""
Error norms, convergence ladders and oscillation metrics for every problem family.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from wrfem.core.errors import ConvergenceError, SamplingError
from wrfem.core.mesh import Mesh
from wrfem.core.problems1d import (
    FieldSolution,
    Mc1dConfig,
    Transport1dConfig,
    analytic_mc1d,
    analytic_transport,
    bx_samples,
    solve_mc1d,
    solve_transport1d,
)
from wrfem.core.problems2d import (
    CircAConfig,
    Team9aConfig,
    circ_a_midline,
    circ_a_sample_points,
    curl_at_points,
    interface_layer_ratio,
    line_points,
    solve_circ_a,
    solve_team9a_axi,
    team9a_total_field,
)
from wrfem.core.problems3d import Team9a3dConfig, extract_slice, solve_team9a_3d
from wrfem.core.weakforms import Formulation, element_peclet

logger = logging.getLogger(__name__)

ProblemConfig = Union[Mc1dConfig, Transport1dConfig, CircAConfig, Team9aConfig, Team9a3dConfig]

SIGN_THRESHOLD = 1e-3


def error_norms(numeric: np.ndarray, oracle: np.ndarray) -> Tuple[float, float]:
    """
    Discrete L2 (root mean square) and absolute (max) errors.

    Args:
        numeric (np.ndarray): Computed samples.
        oracle (np.ndarray): Reference samples at the same points.

    Returns:
        Tuple[float, float]: (L2, abs).

    Raises:
        SamplingError: On empty or misaligned sample sets.
    """
    numeric = np.asarray(numeric, dtype=float).ravel()
    oracle = np.asarray(oracle, dtype=float).ravel()
    if numeric.size == 0:
        raise SamplingError("Error norms need at least one sample")
    if numeric.shape != oracle.shape:
        raise SamplingError(f"Sample sets differ in length: {numeric.size} vs {oracle.size}")
    diff = numeric - oracle
    return float(np.sqrt(np.mean(diff ** 2))), float(np.max(np.abs(diff)))


def relative_l2(values: np.ndarray, reference: np.ndarray) -> float:
    """||values - reference|| / ||reference||."""
    values = np.asarray(values, dtype=float).ravel()
    reference = np.asarray(reference, dtype=float).ravel()
    if values.shape != reference.shape or values.size == 0:
        raise SamplingError("Relative L2 needs equal, non-empty sample sets")
    norm = np.linalg.norm(reference)
    if norm == 0:
        raise ConvergenceError("Reference samples are all zero")
    return float(np.linalg.norm(values - reference) / norm)


def eoc(h: Sequence[float], errors: Sequence[float]) -> List[Optional[float]]:
    """
    Experimental order of convergence between consecutive ladder levels.

    Args:
        h (Sequence[float]): Mesh sizes, one per level.
        errors (Sequence[float]): Errors, one per level.

    Returns:
        List[Optional[float]]: None for the first level, then
        log(e_{i-1}/e_i) / log(h_{i-1}/h_i).

    Raises:
        ConvergenceError: On fewer than two levels, a non-monotone ladder or a zero error.
    """
    if len(h) != len(errors):
        raise ConvergenceError("Need one error per mesh size")
    if len(h) < 2:
        raise ConvergenceError("Convergence order needs at least two levels")
    orders: List[Optional[float]] = [None]
    for i in range(1, len(h)):
        if not h[i] < h[i - 1]:
            raise ConvergenceError(f"Mesh sizes must decrease: {h[i - 1]} -> {h[i]}")
        if errors[i] <= 0 or errors[i - 1] <= 0:
            raise ConvergenceError(f"Zero error at level {i if errors[i] <= 0 else i - 1}")
        orders.append(math.log(errors[i - 1] / errors[i]) / math.log(h[i - 1] / h[i]))
    return orders


@dataclass
class ConvergenceRow:
    n_elems: int
    h: float
    l2: float
    abs: float
    eoc: Optional[float] = None


@dataclass
class ConvergenceReport:
    """
    Errors over a mesh ladder.

    Attributes:
        problem (str): Problem id.
        formulation (str): Scheme name.
        rows (List[ConvergenceRow]): Levels, coarse to fine.
        norms (str): Description of the measured quantity and norms.
    """
    problem: str
    formulation: str
    rows: List[ConvergenceRow] = field(default_factory=list)
    norms: str = "L2 = rms of sample differences, abs = max |difference|"

    def finalize(self) -> "ConvergenceReport":
        orders = eoc([r.h for r in self.rows], [r.abs for r in self.rows])
        for row, order in zip(self.rows, orders):
            row.eoc = order
        return self

    @staticmethod
    def header() -> List[str]:
        return ["n_elems", "h", "l2_error", "abs_error", "eoc"]

    def csv_rows(self) -> List[List[str]]:
        return [[str(r.n_elems), f"{r.h:.6e}", f"{r.l2:.6e}", f"{r.abs:.6e}",
                 "" if r.eoc is None else f"{r.eoc:.4f}"] for r in self.rows]


def sign_alternations(values: np.ndarray, threshold: float = SIGN_THRESHOLD) -> int:
    """
    Number of sign changes between successive significant samples.

    Samples with |v| <= threshold * max|v| are skipped.

    Args:
        values (np.ndarray): Ordered samples.
        threshold (float): Relative significance threshold.

    Returns:
        int: Sign alternation count.
    """
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        return 0
    peak = np.abs(values).max()
    if peak == 0:
        return 0
    signs = np.sign(values[np.abs(values) > threshold * peak])
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def oscillation_count(values: np.ndarray, threshold: float = SIGN_THRESHOLD) -> int:
    """Sign alternations of successive differences (direction reversals)."""
    return sign_alternations(np.diff(np.asarray(values, dtype=float).ravel()), threshold)


def oscillation_index(values: np.ndarray, threshold: float = SIGN_THRESHOLD) -> float:
    """Direction reversals per interior sample."""
    values = np.asarray(values, dtype=float).ravel()
    if values.size < 3:
        return 0.0
    return oscillation_count(values, threshold) / (values.size - 2)


def oscillation_metrics(values: np.ndarray, threshold: float = SIGN_THRESHOLD) -> Dict[str, float]:
    return {
        "sign_alternations": sign_alternations(values, threshold),
        "oscillation_count": oscillation_count(values, threshold),
        "oscillation_index": oscillation_index(values, threshold),
    }


def peclet_numbers(mesh: Mesh, mu_sigma_u) -> np.ndarray:
    """Per-element Pe = mu*sigma*|u|*h/2 with h the streamline element length."""
    return element_peclet(mesh, mu_sigma_u)


def problem_name(cfg: ProblemConfig) -> str:
    names = {Mc1dConfig: "mc1d", Transport1dConfig: "transport", CircAConfig: "circ_a",
             Team9aConfig: "team9a", Team9a3dConfig: "team9a_3d"}
    return names[type(cfg)]


def with_formulation(cfg: ProblemConfig, formulation) -> ProblemConfig:
    if isinstance(cfg, Team9a3dConfig):
        return replace(cfg, section=replace(cfg.section, formulation=formulation))
    return replace(cfg, formulation=formulation)


def solve_problem(cfg: ProblemConfig) -> FieldSolution:
    """Dispatch a configuration to its solver."""
    solvers: Dict[type, Callable] = {
        Mc1dConfig: solve_mc1d,
        Transport1dConfig: solve_transport1d,
        CircAConfig: solve_circ_a,
        Team9aConfig: solve_team9a_axi,
        Team9a3dConfig: solve_team9a_3d,
    }
    return solvers[type(cfg)](cfg)


def team9a_profile(solution: FieldSolution, cfg: Team9aConfig) -> Dict[str, np.ndarray]:
    """Reaction b_r at element centres of the first conductor layer, ordered along z."""
    z_axis, r_axis = solution.mesh.axes
    j = int(np.argmin(np.abs(r_axis - cfg.bore_radius)))
    zc = 0.5 * (z_axis[:-1] + z_axis[1:])
    r = np.full(zc.size, 0.5 * (r_axis[j] + r_axis[j + 1]))
    return {"z": zc, "r": r, "b_r": curl_at_points(solution, np.column_stack([zc, r]))["b_r"]}


def profile(cfg: ProblemConfig, solution: FieldSolution) -> Tuple[Dict[str, np.ndarray], str]:
    """
    Streamwise profile of the quantity whose oscillations are of interest.

    Args:
        cfg (ProblemConfig): Problem configuration.
        solution (FieldSolution): Its solution.

    Returns:
        Tuple[Dict[str, np.ndarray], str]: Columns and the name of the profiled column.
    """
    if isinstance(cfg, Mc1dConfig):
        z, b = bx_samples(cfg, solution)
        return {"z": z, "b_x": b}, "b_x"
    if isinstance(cfg, Transport1dConfig):
        return {"z": solution.mesh.coords[:, 0], "psi": solution["psi"]}, "psi"
    if isinstance(cfg, CircAConfig):
        z, b = circ_a_midline(solution, cfg)
        return {"z": z, "b_x": b}, "b_x"
    if isinstance(cfg, Team9aConfig):
        return team9a_profile(solution, cfg), "b_r"
    sliced = extract_slice(solution)
    sliced.pop("points")
    return sliced, "b_r"


def _map(fn: Callable, items: Sequence, workers: int) -> List:
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def mc1d_convergence(cfg: Mc1dConfig, levels: Sequence[int], workers: int = 1) -> ConvergenceReport:
    """
    b_x errors of the 1D moving-conductor problem against the closed form.

    Args:
        cfg (Mc1dConfig): Base configuration (n_elems is replaced per level).
        levels (Sequence[int]): Element counts, coarse to fine.
        workers (int): Levels solved concurrently.

    Returns:
        ConvergenceReport: One row per level.
    """
    length = cfg.domain[1] - cfg.domain[0]

    def run(n: int) -> ConvergenceRow:
        level = replace(cfg, n_elems=n)
        z, b = bx_samples(level, solve_mc1d(level))
        _, exact = analytic_mc1d(level, z)
        l2, ab = error_norms(b, exact)
        return ConvergenceRow(n, length / n, l2, ab)

    report = ConvergenceReport("mc1d", cfg.formulation.value, _map(run, list(levels), workers),
                               f"b_x at {cfg.bx_sampling}; L2 = rms, abs = max")
    return report.finalize()


def transport_convergence(cfg: Transport1dConfig, levels: Sequence[int], workers: int = 1) -> ConvergenceReport:
    """
    psi errors at element midpoints of the linear interpolant against the closed form.

    Args:
        cfg (Transport1dConfig): Base configuration.
        levels (Sequence[int]): Element counts, coarse to fine.
        workers (int): Levels solved concurrently.

    Returns:
        ConvergenceReport: One row per level.
    """
    length = cfg.domain[1] - cfg.domain[0]

    def run(n: int) -> ConvergenceRow:
        level = replace(cfg, n_elems=n)
        solution = solve_transport1d(level)
        z = solution.mesh.coords[:, 0]
        mid = 0.5 * (z[:-1] + z[1:])
        psi = 0.5 * (solution["psi"][:-1] + solution["psi"][1:])
        exact, _ = analytic_transport(level, mid)
        l2, ab = error_norms(psi, exact)
        return ConvergenceRow(n, length / n, l2, ab)

    report = ConvergenceReport("transport", cfg.formulation.value, _map(run, list(levels), workers),
                               "psi at element midpoints; L2 = rms, abs = max")
    return report.finalize()


def circ_a_convergence(cfg: CircAConfig, n_levels: int = 4, reference_levels: int = 2,
                       workers: int = 1) -> ConvergenceReport:
    """
    Recovered b_x errors against a self-reference two levels finer than the ladder.

    Args:
        cfg (CircAConfig): Coarsest ladder level.
        n_levels (int): Ladder length; each level doubles the element count.
        reference_levels (int): Extra refinements of the reference solve.
        workers (int): Levels solved concurrently.

    Returns:
        ConvergenceReport: One row per level, h = sqrt(area / n_elements).
    """
    points = circ_a_sample_points(cfg)
    reference = solve_circ_a(cfg.level(n_levels - 1 + reference_levels))
    exact = curl_at_points(reference, points)["b_x"]
    area = cfg.length * cfg.height

    def run(k: int) -> ConvergenceRow:
        level = cfg.level(k)
        b = curl_at_points(solve_circ_a(level), points)["b_x"]
        l2, ab = error_norms(b, exact)
        n = level.nz * level.ny
        return ConvergenceRow(n, math.sqrt(area / n), l2, ab)

    report = ConvergenceReport("circ_a", cfg.formulation.value, _map(run, list(range(n_levels)), workers),
                               "recovered b_x at two interior points per coarse conductor element "
                               f"vs {reference_levels}-level finer reference")
    return report.finalize()


def team9a_line(cfg: Team9aConfig, n: int = 201) -> np.ndarray:
    """Default sampling line: z across the domain, 1 mm inside the conductor."""
    r = cfg.bore_radius + 0.001
    return line_points((-0.5 * cfg.z_extent, r), (0.5 * cfg.z_extent, r), n)


def team9a_reference_error(cfg: Team9aConfig, factor: int = 4,
                           points: Optional[np.ndarray] = None) -> float:
    """
    Relative L2 difference of |B| along a line against a refined weighted-residual solve.

    Args:
        cfg (Team9aConfig): Configuration under test.
        factor (int): Refinement of the reference.
        points (Optional[np.ndarray]): (P, 2) sampling points, `team9a_line` by default.

    Returns:
        float: Relative L2 difference of the total flux density magnitude.
    """
    points = team9a_line(cfg) if points is None else points
    reference_cfg = replace(cfg, refine=cfg.refine * factor, formulation=Formulation.WEIGHTED_RESIDUAL)
    test = team9a_total_field(solve_team9a_axi(cfg), cfg, points)
    ref = team9a_total_field(solve_team9a_axi(reference_cfg), reference_cfg, points)
    return relative_l2(np.hypot(test["B_r"], test["B_z"]), np.hypot(ref["B_r"], ref["B_z"]))


def team9a_interface_ratio(cfg: Team9aConfig) -> float:
    """Interface-layer peak ratio of a TEAM-9a solve."""
    return interface_layer_ratio(solve_team9a_axi(cfg), cfg.bore_radius)


def convergence(cfg: ProblemConfig, levels: Sequence[int], reference_levels: int = 2,
                workers: int = 1) -> ConvergenceReport:
    """
    Run the convergence ladder of a problem.

    Args:
        cfg (ProblemConfig): Base configuration.
        levels (Sequence[int]): Element counts for 1D problems; for circ_a only
            len(levels) is used.
        reference_levels (int): Extra refinements of 2D self-references.
        workers (int): Levels solved concurrently.

    Returns:
        ConvergenceReport: The ladder.

    Raises:
        ConvergenceError: For problems without a ladder definition.
    """
    if isinstance(cfg, Mc1dConfig):
        return mc1d_convergence(cfg, levels, workers)
    if isinstance(cfg, Transport1dConfig):
        return transport_convergence(cfg, levels, workers)
    if isinstance(cfg, CircAConfig):
        return circ_a_convergence(cfg, len(levels), reference_levels, workers)
    raise ConvergenceError(f"No convergence ladder for problem '{problem_name(cfg)}'")


def compare(cfg: ProblemConfig, formulations: Sequence) -> Dict[str, Dict[str, object]]:
    """
    Solve one problem with several schemes.

    Args:
        cfg (ProblemConfig): Problem configuration.
        formulations (Sequence): Scheme names or Formulation members.

    Returns:
        Dict[str, Dict[str, object]]: Per scheme: "solution", "profile",
        "column" and the oscillation "metrics" of the profiled column.
    """
    results: Dict[str, Dict[str, object]] = {}
    for form in formulations:
        variant = with_formulation(cfg, form)
        solution = solve_problem(variant)
        columns, name = profile(variant, solution)
        metrics = oscillation_metrics(columns[name])
        if isinstance(variant, Team9aConfig):
            metrics["interface_ratio"] = interface_layer_ratio(solution, variant.bore_radius)
        results[solution.formulation.value] = {"solution": solution, "profile": columns,
                                               "column": name, "metrics": metrics}
        logger.info(f"{problem_name(cfg)} {solution.formulation.value}: "
                    f"{metrics['sign_alternations']} sign alternations in {name}")
    return results
