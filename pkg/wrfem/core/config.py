"""
INI run configuration parsing and validation.
"""
import configparser
import dataclasses
import logging
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from wrfem.core.errors import ConfigError
from wrfem.core.harness import with_formulation
from wrfem.core.problems1d import Mc1dConfig, Transport1dConfig
from wrfem.core.problems2d import CircAConfig, Team9aConfig
from wrfem.core.problems3d import Team9a3dConfig
from wrfem.core.stability import default_pe_grid
from wrfem.core.weakforms import Formulation
from wrfem.utils.utils import config_hash

logger = logging.getLogger(__name__)

PROBLEMS = {
    "mc1d": Mc1dConfig,
    "transport": Transport1dConfig,
    "circ_a": CircAConfig,
    "team9a": Team9aConfig,
    "team9a_3d": Team9a3dConfig,
    "stability": None,
}

SECTIONS = ("run", "physics", "mesh", "ladder", "stability")

RUN_KEYS = ("problem", "formulation", "name", "vtk", "matrix_market", "compare")
LADDER_KEYS = ("levels", "reference_levels", "workers", "refine_factor")
STABILITY_KEYS = ("pe", "pe_min", "pe_max", "n", "cancel_tol", "problem", "n_elems")


@dataclass(frozen=True)
class StabilitySettings:
    """
    Pe sweep of the stencil analyzer.

    Attributes:
        pe_values (Tuple[float, ...]): Sampled element Peclet numbers.
        cancel_tol (float): Relative pole/zero cancellation tolerance.
        problem (str): "moving_conductor" or "transport".
        n_elems (int): Mesh size the stencil is read from.
    """
    pe_values: Tuple[float, ...] = tuple(default_pe_grid())
    cancel_tol: float = 0.05
    problem: str = "moving_conductor"
    n_elems: int = 10


@dataclass(frozen=True)
class RunConfig:
    """
    A parsed run configuration.

    Attributes:
        problem (str): Problem id, a key of PROBLEMS.
        problem_config: Problem dataclass, None for stability-only runs.
        name (str): Output file stem.
        formulations (Tuple[Formulation, ...]): Schemes for `compare`.
        levels (Tuple[int, ...]): Convergence ladder.
        reference_levels (int): Extra refinements of 2D self-references.
        workers (int): Ladder levels solved concurrently.
        refine_factor (int): Refinement of the TEAM-9a reference solve.
        stability (StabilitySettings): Pe sweep settings.
        vtk (bool): Write a VTK file on `solve`.
        matrix_market (bool): Dump the system matrix on `solve`.
        config_hash (str): Hash of the canonical configuration text.
        source (Optional[Path]): File the configuration was read from.
    """
    problem: str
    problem_config: Any = None
    name: str = "run"
    formulations: Tuple[Formulation, ...] = (Formulation.GALERKIN, Formulation.WEIGHTED_RESIDUAL)
    levels: Tuple[int, ...] = ()
    reference_levels: int = 2
    workers: int = 1
    refine_factor: int = 4
    stability: StabilitySettings = field(default_factory=StabilitySettings)
    vtk: bool = False
    matrix_market: bool = False
    config_hash: str = ""
    source: Optional[Path] = None

    @property
    def formulation(self) -> Formulation:
        if self.problem_config is None:
            return Formulation.WEIGHTED_RESIDUAL
        return self.problem_config.formulation

    def with_formulation(self, formulation: Union[str, Formulation]) -> "RunConfig":
        """Override the scheme (CLI --formulation)."""
        if self.problem_config is None:
            return self
        cfg = with_formulation(self.problem_config, Formulation.parse(formulation))
        return dataclasses.replace(self, problem_config=cfg)


def parse_value(raw: str, hint, key: str):
    """
    Convert an INI string to the type named by a dataclass annotation.

    Args:
        raw (str): Raw value.
        hint: Annotation (float, int, str, bool, Formulation or a tuple type).
        key (str): Key name for diagnostics.

    Returns:
        Any: Typed value.

    Raises:
        ConfigError: If the value does not parse.
    """
    raw = raw.strip()
    try:
        if typing.get_origin(hint) is tuple:
            args = typing.get_args(hint)
            item = args[0]
            parts = [p for p in raw.replace(";", ",").split(",") if p.strip()]
            values = tuple(parse_value(p, item, key) for p in parts)
            if Ellipsis not in args and len(values) != len(args):
                raise ConfigError(f"Key '{key}' needs {len(args)} comma-separated values, got {len(values)}")
            return values
        if hint is bool:
            lowered = raw.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if hint is int:
            return int(raw)
        if hint is float:
            return float(raw)
        if hint is Formulation:
            return Formulation.parse(raw)
        return raw
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(f"Bad value for '{key}': {raw!r} ({e})") from e


def _typed(cls, values: Dict[str, str], section: str) -> Dict[str, Any]:
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls) if f.init}
    typed = {}
    for key, raw in values.items():
        if key not in names:
            raise ConfigError(f"Unknown key '{key}' in [{section}] for {cls.__name__}")
        typed[key] = parse_value(raw, hints[key], key)
    return typed


def _build_problem(problem: str, keys: Dict[str, str]):
    cls = PROBLEMS[problem]
    if cls is None:
        if keys:
            raise ConfigError(f"Stability runs take no [physics]/[mesh] keys, got {sorted(keys)}")
        return None
    if cls is Team9a3dConfig:
        outer = {k: keys.pop(k) for k in ("n_theta", "memory_cap_mb") if k in keys}
        section_values = _typed(Team9aConfig, keys, "physics/mesh")
        section_values.setdefault("mu_r", 50.0)
        return Team9a3dConfig(section=Team9aConfig(**section_values),
                              **_typed(Team9a3dConfig, outer, "mesh"))
    return cls(**_typed(cls, keys, "physics/mesh"))


def _read_parser(text: str, source: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as e:
        raise ConfigError(f"Malformed config {source}: {e}") from e
    unknown = [s for s in parser.sections() if s not in SECTIONS]
    if unknown:
        raise ConfigError(f"Unknown section(s) {unknown}; expected {list(SECTIONS)}")
    if not parser.has_section("run"):
        raise ConfigError("Config needs a [run] section")
    return parser


def _check_keys(section: str, values: Dict[str, str], allowed: Tuple[str, ...]) -> None:
    unknown = sorted(set(values) - set(allowed))
    if unknown:
        raise ConfigError(f"Unknown key(s) {unknown} in [{section}]")


def _stability_settings(values: Dict[str, str]) -> StabilitySettings:
    _check_keys("stability", values, STABILITY_KEYS)
    if "pe" in values:
        if {"pe_min", "pe_max", "n"} & set(values):
            raise ConfigError("Give either 'pe' or 'pe_min/pe_max/n' in [stability], not both")
        pe = parse_value(values["pe"], Tuple[float, ...], "pe")
    else:
        lo = parse_value(values.get("pe_min", "0.1"), float, "pe_min")
        hi = parse_value(values.get("pe_max", "1e4"), float, "pe_max")
        n = parse_value(values.get("n", "25"), int, "n")
        if not 0 < lo < hi or n < 2:
            raise ConfigError(f"Pe grid needs 0 < pe_min < pe_max and n >= 2, got {lo}, {hi}, {n}")
        pe = tuple(float(p) for p in default_pe_grid(n, lo, hi))
    if not pe or any(p < 0 or not np.isfinite(p) for p in pe):
        raise ConfigError("Stability Pe samples must be finite and >= 0")
    cancel_tol = parse_value(values.get("cancel_tol", "0.05"), float, "cancel_tol")
    if not 0 <= cancel_tol < 1:
        raise ConfigError(f"cancel_tol must be in [0, 1), got {cancel_tol}")
    problem = values.get("problem", "moving_conductor").strip()
    if problem not in ("moving_conductor", "transport"):
        raise ConfigError(f"Stability problem must be moving_conductor or transport, got {problem!r}")
    n_elems = parse_value(values.get("n_elems", "10"), int, "n_elems")
    return StabilitySettings(pe, cancel_tol, problem, n_elems)


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    """
    Parse and validate INI text.

    Args:
        text (str): Configuration text.
        source (str): Name used in diagnostics.

    Returns:
        RunConfig: The validated run configuration.

    Raises:
        ConfigError: On malformed text, unknown sections or keys, or invalid values.
    """
    parser = _read_parser(text, source)
    sections = {name: dict(parser.items(name)) for name in parser.sections()}

    run = sections.get("run", {})
    _check_keys("run", run, RUN_KEYS)
    problem = run.get("problem", "").strip()
    if problem not in PROBLEMS:
        raise ConfigError(f"Unknown problem {problem!r}; expected one of {sorted(PROBLEMS)}")

    physics = sections.get("physics", {})
    mesh = sections.get("mesh", {})
    duplicated = sorted(set(physics) & set(mesh))
    if duplicated:
        raise ConfigError(f"Key(s) {duplicated} appear in both [physics] and [mesh]")
    keys = {**physics, **mesh}
    if "formulation" in keys:
        raise ConfigError("'formulation' belongs in [run]")
    if "formulation" in run and PROBLEMS[problem] is not None:
        keys["formulation"] = run["formulation"]
    problem_config = _build_problem(problem, keys)

    ladder = sections.get("ladder", {})
    _check_keys("ladder", ladder, LADDER_KEYS)
    levels = parse_value(ladder.get("levels", ""), Tuple[int, ...], "levels")
    if any(n < 1 for n in levels):
        raise ConfigError(f"Ladder levels must be positive, got {levels}")
    reference_levels = parse_value(ladder.get("reference_levels", "2"), int, "reference_levels")
    workers = parse_value(ladder.get("workers", "1"), int, "workers")
    refine_factor = parse_value(ladder.get("refine_factor", "4"), int, "refine_factor")
    if reference_levels < 1 or workers < 1 or refine_factor < 2:
        raise ConfigError("reference_levels and workers must be >= 1, refine_factor >= 2")

    compare_names = parse_value(run.get("compare", "galerkin, wr"), Tuple[str, ...], "compare")
    formulations = tuple(Formulation.parse(n) for n in compare_names)

    cfg = RunConfig(
        problem=problem,
        problem_config=problem_config,
        name=run.get("name", problem).strip() or problem,
        formulations=formulations,
        levels=levels,
        reference_levels=reference_levels,
        workers=workers,
        refine_factor=refine_factor,
        stability=_stability_settings(sections.get("stability", {})),
        vtk=parse_value(run.get("vtk", "false"), bool, "vtk"),
        matrix_market=parse_value(run.get("matrix_market", "false"), bool, "matrix_market"),
        config_hash=config_hash(sections),
    )
    logger.debug(f"Parsed {source}: problem {problem}, hash {cfg.config_hash}")
    return cfg


def load_config(path: Union[str, Path]) -> RunConfig:
    """
    Read and validate a configuration file.

    Args:
        path (Union[str, Path]): INI file.

    Returns:
        RunConfig: The validated run configuration.

    Raises:
        ConfigError: On invalid content.
        OSError: If the file cannot be read.
    """
    path = Path(path)
    cfg = parse_config(path.read_text(), str(path))
    return dataclasses.replace(cfg, source=path)


def describe(cfg: RunConfig) -> List[Tuple[str, str]]:
    """Flat (key, value) listing of the effective problem configuration."""
    items = [("problem", cfg.problem), ("formulation", cfg.formulation.value),
             ("config_hash", cfg.config_hash)]
    pc = cfg.problem_config
    if isinstance(pc, Team9a3dConfig):
        items += [(f.name, str(getattr(pc.section, f.name))) for f in dataclasses.fields(pc.section)
                  if f.name != "formulation"]
        items += [("n_theta", str(pc.n_theta)), ("memory_cap_mb", str(pc.memory_cap_mb))]
    elif pc is not None:
        items += [(f.name, str(getattr(pc, f.name))) for f in dataclasses.fields(pc)
                  if f.name != "formulation"]
    return items
