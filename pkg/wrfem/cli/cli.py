"""
Command-line interface for wrfem.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from wrfem.core.config import RunConfig, StabilitySettings, load_config
from wrfem.core.errors import (
    AssemblyError,
    ConfigError,
    ConvergenceError,
    MeshError,
    QuadratureError,
    ResourceError,
    SamplingError,
    SolverError,
    StabilityError,
    WrfemError,
)
from wrfem.core.harness import (
    compare,
    convergence,
    profile,
    solve_problem,
    team9a_interface_ratio,
    team9a_reference_error,
)
from wrfem.core.problems2d import Team9aConfig
from wrfem.core.stability import (
    analyze,
    effective_tf,
    format_tf,
    stability_header,
    sweep_rows,
)
from wrfem.core.weakforms import Formulation
from wrfem.utils.utils import (
    columns_to_rows,
    setup_logging,
    write_csv,
    write_matrix_market,
    write_metadata,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_NUMERICS = 3
EXIT_IO = 4
EXIT_OTHER = 5

NUMERIC_ERRORS = (SolverError, ConvergenceError, StabilityError, AssemblyError, MeshError,
                  QuadratureError, SamplingError, ResourceError)


def create_parser() -> argparse.ArgumentParser:
    """
    Create command-line argument parser.

    Returns:
        argparse.ArgumentParser: The argument parser.
    """
    parser = argparse.ArgumentParser(
        description="Weighted-residual finite elements for moving conductors", prog="wrfem"
    )
    subparsers = parser.add_subparsers(dest="command", help="Sub-command to run")

    def common(sub: argparse.ArgumentParser, config_required: bool = True) -> None:
        sub.add_argument("--config", required=config_required, help="INI run configuration")
        sub.add_argument("--out", default="out", help="Output directory")
        sub.add_argument("--quiet", action="store_true", help="Only log warnings and errors")
        sub.add_argument("--verbose", "-v", action="store_true", help="Log debug details")

    # Solve command
    solve_parser = subparsers.add_parser("solve", help="Solve one problem and write fields")
    common(solve_parser)
    solve_parser.add_argument(
        "--formulation", choices=["galerkin", "wr", "supg"], default=None,
        help="Override the configured scheme",
    )

    # Convergence command
    convergence_parser = subparsers.add_parser("convergence", help="Run a mesh ladder")
    common(convergence_parser)
    convergence_parser.add_argument(
        "--formulation", choices=["galerkin", "wr", "supg"], default=None,
        help="Override the configured scheme",
    )

    # Stability command
    stability_parser = subparsers.add_parser("stability", help="Pole sweep over element Pe")
    common(stability_parser, config_required=False)
    stability_parser.add_argument(
        "--formulation", choices=["galerkin", "wr", "supg"], default=None,
        help="Analyze one scheme instead of the configured list",
    )
    stability_parser.add_argument(
        "--pe", type=float, nargs="+", default=None, help="Peclet samples"
    )

    # Compare command
    compare_parser = subparsers.add_parser(
        "compare", help="Solve with several schemes and compare oscillation metrics"
    )
    common(compare_parser)
    compare_parser.add_argument(
        "--formulation", choices=["galerkin", "wr", "supg"], nargs="+", default=None,
        help="Schemes to compare",
    )

    return parser


def _load(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config)
    if isinstance(args.formulation, str):
        cfg = cfg.with_formulation(args.formulation)
    return cfg


def _needs_problem(cfg: RunConfig, command: str) -> None:
    if cfg.problem_config is None:
        raise ConfigError(f"'{command}' needs a problem other than '{cfg.problem}'")


def _trace(cfg: RunConfig, formulation: str) -> Dict[str, str]:
    return {"problem": cfg.problem, "formulation": formulation, "config_hash": cfg.config_hash}


def solve_command(args: argparse.Namespace) -> int:
    """
    Execute solve command.

    Args:
        args (argparse.Namespace): Command-line arguments.

    Returns:
        int: Exit code.
    """
    cfg = _load(args)
    _needs_problem(cfg, "solve")
    out = Path(args.out)
    solution = solve_problem(cfg.problem_config)
    form = solution.formulation.value
    stem = f"{cfg.name}_{form}"
    trace = _trace(cfg, form)

    mesh = solution.mesh
    columns = {name: mesh.coords[:, i] for i, name in enumerate(mesh.axis_names)}
    columns.update(solution.nodal)
    write_csv(out / f"{stem}_nodal.csv", list(columns), columns_to_rows(columns), trace)

    prof, _ = profile(cfg.problem_config, solution)
    write_csv(out / f"{stem}_profile.csv", list(prof), columns_to_rows(prof), trace)

    if cfg.vtk:
        cell_data = {k: v for k, v in solution.recovered.items() if np.asarray(v).size == mesh.n_elements}
        if solution.peclet is not None:
            cell_data["peclet"] = solution.peclet
        mesh.write_vtk(out / f"{stem}.vtk", point_data=solution.nodal, cell_data=cell_data,
                       header=f"wrfem {cfg.problem} {form} config_hash={cfg.config_hash}")
    if cfg.matrix_market and solution.matrix is not None:
        write_matrix_market(out / f"{stem}.mtx", solution.matrix)

    write_metadata(out / f"{stem}.meta.txt", {**trace, **solution.meta})
    print(f"Solved {cfg.problem} ({form}): {solution.meta.get('n_dofs')} dofs, "
          f"residual {solution.residual:.2e}, outputs in {out}")
    return EXIT_OK


def convergence_command(args: argparse.Namespace) -> int:
    """
    Execute convergence command.

    Args:
        args (argparse.Namespace): Command-line arguments.

    Returns:
        int: Exit code.
    """
    cfg = _load(args)
    _needs_problem(cfg, "convergence")
    out = Path(args.out)
    form = cfg.formulation.value
    trace = _trace(cfg, form)

    if isinstance(cfg.problem_config, Team9aConfig):
        error = team9a_reference_error(cfg.problem_config, cfg.refine_factor)
        ratio = team9a_interface_ratio(cfg.problem_config)
        write_csv(out / f"{cfg.name}_{form}_reference.csv",
                  ["formulation", "refine_factor", "relative_l2", "interface_ratio"],
                  [[form, cfg.refine_factor, error, ratio]], trace)
        print(f"{cfg.problem} ({form}): relative L2 {error:.3e} vs x{cfg.refine_factor} reference")
        return EXIT_OK

    if not cfg.levels:
        raise ConfigError("Convergence runs need [ladder] levels")
    report = convergence(cfg.problem_config, cfg.levels, cfg.reference_levels, cfg.workers)
    trace["norms"] = report.norms
    write_csv(out / f"{cfg.name}_{form}_convergence.csv", report.header(), report.csv_rows(), trace)
    for row in report.csv_rows():
        print("  ".join(row))
    return EXIT_OK


def stability_command(args: argparse.Namespace) -> int:
    """
    Execute stability command.

    Args:
        args (argparse.Namespace): Command-line arguments.

    Returns:
        int: Exit code.
    """
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = RunConfig(problem="stability")
    settings: StabilitySettings = cfg.stability
    pe_values = tuple(args.pe) if args.pe else settings.pe_values
    if any(pe < 0 for pe in pe_values):
        raise ConfigError("Peclet samples must be >= 0")
    forms = [Formulation.parse(args.formulation)] if args.formulation else list(cfg.formulations)
    out = Path(args.out)

    for form in forms:
        report = analyze(form, pe_values, settings.cancel_tol, settings.problem, settings.n_elems)
        trace = _trace(cfg, form.value)
        trace["cancel_tol"] = str(settings.cancel_tol)
        write_csv(out / f"{cfg.name}_{form.value}_stability.csv",
                  stability_header(report), sweep_rows(report), trace)
        oscillatory = [e.pe for e in report.entries if e.oscillatory]
        verdict = "non-oscillatory at every sample" if not oscillatory else \
            f"oscillatory at {len(oscillatory)} of {len(report.entries)} samples"
        print(f"{form.value}: {verdict}")
        top = max(pe_values)
        if top > 0:
            reduced = effective_tf(form, top, settings.cancel_tol, settings.problem, settings.n_elems)
            print(f"{form.value}: transfer function at Pe={top:g}: {format_tf(reduced)}")
    return EXIT_OK


def compare_command(args: argparse.Namespace) -> int:
    """
    Execute compare command.

    Args:
        args (argparse.Namespace): Command-line arguments.

    Returns:
        int: Exit code.
    """
    cfg = load_config(args.config)
    _needs_problem(cfg, "compare")
    forms = [Formulation.parse(f) for f in args.formulation] if args.formulation else list(cfg.formulations)
    if len(forms) < 2:
        raise ConfigError("compare needs at least two formulations")
    out = Path(args.out)
    results = compare(cfg.problem_config, forms)
    names = list(results)
    trace = _trace(cfg, ",".join(names))

    first = results[names[0]]
    column = first["column"]
    side_by_side = {k: v for k, v in first["profile"].items() if k != column}
    for name in names:
        side_by_side[f"{column}_{name}"] = results[name]["profile"][column]
    write_csv(out / f"{cfg.name}_compare.csv", list(side_by_side), columns_to_rows(side_by_side), trace)

    metric_names = list(first["metrics"])
    write_csv(out / f"{cfg.name}_metrics.csv", ["formulation"] + metric_names,
              [[name] + [results[name]["metrics"][m] for m in metric_names] for name in names], trace)
    for name in names:
        metrics = results[name]["metrics"]
        print(f"{name}: " + ", ".join(f"{m}={metrics[m]:.4g}" for m in metric_names))
    return EXIT_OK


def exit_code(error: BaseException) -> int:
    """Map an exception to the CLI exit code of its category."""
    if isinstance(error, ConfigError):
        return EXIT_CONFIG
    if isinstance(error, NUMERIC_ERRORS):
        return EXIT_NUMERICS
    if isinstance(error, OSError):
        return EXIT_IO
    return EXIT_OTHER


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main entry point for CLI.

    Args:
        argv (Optional[List[str]]): Arguments, sys.argv[1:] by default.

    Returns:
        int: Exit code.
    """
    parser = create_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    if args.command is None:
        parser.print_help()
        return EXIT_USAGE

    level = logging.WARNING if args.quiet else logging.DEBUG if args.verbose else logging.INFO
    setup_logging(level)

    commands = {
        "solve": solve_command,
        "convergence": convergence_command,
        "stability": stability_command,
        "compare": compare_command,
    }
    try:
        return commands[args.command](args)
    except (WrfemError, OSError) as e:
        code = exit_code(e)
        logger.error(f"{args.command} failed: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
