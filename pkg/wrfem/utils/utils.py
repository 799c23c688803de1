"""
Utility functions for wrfem.
"""
import csv
import hashlib
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np
import scipy.io
import scipy.sparse as sp

from wrfem.core.errors import WrfemError

VTK_CELL_TYPES = {"line2": 3, "quad4": 9, "hex8": 12}


def setup_logging(level: int = logging.INFO) -> logging.Logger:
    """
    Set up logging for wrfem.

    Repeated calls only change the level.

    Args:
        level (int, optional): Logging level. Defaults to logging.INFO.

    Returns:
        logging.Logger: Logger instance.
    """
    logger = logging.getLogger("wrfem")
    logger.setLevel(level)

    handler = next((h for h in logger.handlers if getattr(h, "_wrfem", False)), None)
    if handler is None:
        handler = logging.StreamHandler()
        handler._wrfem = True
        handler.setFormatter(logging.Formatter(
            "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
        ))
        logger.addHandler(handler)
    handler.setLevel(level)

    return logger


def canonical_config(sections: Mapping[str, Mapping[str, Any]]) -> str:
    """
    Canonical text of a parsed configuration: sorted "section.key=value" lines.

    Args:
        sections (Mapping[str, Mapping[str, Any]]): Section name to key/value pairs.

    Returns:
        str: Newline-joined canonical lines.
    """
    lines = []
    for section in sorted(sections):
        for key in sorted(sections[section]):
            lines.append(f"{section}.{key}={str(sections[section][key]).strip()}")
    return "\n".join(lines)


def config_hash(sections: Mapping[str, Mapping[str, Any]]) -> str:
    """First 12 hex characters of the SHA-256 of the canonical configuration."""
    return hashlib.sha256(canonical_config(sections).encode("utf-8")).hexdigest()[:12]


def _format(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.10e}"
    if isinstance(value, complex):
        return f"{value.real:.10e}{value.imag:+.10e}j"
    if value is None:
        return ""
    return str(value)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence[Any]],
              meta: Optional[Mapping[str, Any]] = None) -> Path:
    """
    Write an RFC-4180 CSV preceded by "# key: value" comment lines.

    Args:
        path: Output file path; parent directories are created.
        header (Sequence[str]): Column names.
        rows (Iterable[Sequence[Any]]): Data rows; floats are written with 10 decimals.
        meta (Optional[Mapping[str, Any]]): Traceability lines (config hash, formulation).

    Returns:
        Path: The written path.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        for key, value in (meta or {}).items():
            f.write(f"# {key}: {value}\n")
        writer = csv.writer(f, lineterminator="\r\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([_format(v) for v in row])
    return path


def columns_to_rows(columns: Mapping[str, np.ndarray]) -> List[List[Any]]:
    """Transpose equal-length named columns into CSV rows."""
    arrays = [np.asarray(v).ravel() for v in columns.values()]
    lengths = {a.size for a in arrays}
    if len(lengths) > 1:
        raise WrfemError(f"Columns differ in length: {sorted(lengths)}")
    return [list(row) for row in zip(*arrays)]


def write_vtk(path, mesh, point_data: Dict[str, np.ndarray], cell_data: Dict[str, np.ndarray],
              header: str = "wrfem mesh") -> Path:
    """
    Write a mesh with fields as a legacy-VTK ASCII unstructured grid.

    Args:
        path: Output file path.
        mesh: Mesh with coords, elements and kind.
        point_data (Dict[str, np.ndarray]): Nodal scalar fields.
        cell_data (Dict[str, np.ndarray]): Element scalar fields.
        header (str): Title line; newlines are replaced.

    Returns:
        Path: The written path.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    coords = np.zeros((mesh.coords.shape[0], 3))
    coords[:, :mesh.coords.shape[1]] = mesh.coords
    elements = np.asarray(mesh.elements)
    n_cells, per_cell = elements.shape
    cell_type = VTK_CELL_TYPES[mesh.kind.value]

    lines = ["# vtk DataFile Version 3.0", header.replace("\n", " ")[:255], "ASCII",
             "DATASET UNSTRUCTURED_GRID", f"POINTS {coords.shape[0]} double"]
    lines += [" ".join(f"{c:.10e}" for c in p) for p in coords]
    lines.append(f"CELLS {n_cells} {n_cells * (per_cell + 1)}")
    lines += [f"{per_cell} " + " ".join(str(int(n)) for n in e) for e in elements]
    lines.append(f"CELL_TYPES {n_cells}")
    lines += [str(cell_type)] * n_cells

    for label, data, count in (("POINT_DATA", point_data, coords.shape[0]),
                               ("CELL_DATA", cell_data, n_cells)):
        if not data:
            continue
        lines.append(f"{label} {count}")
        for name, values in data.items():
            values = np.asarray(values, dtype=float).ravel()
            if values.size != count:
                raise WrfemError(f"{label} '{name}' has {values.size} values, expected {count}")
            lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
            lines += [f"{v:.10e}" for v in values]

    path.write_text("\n".join(lines) + "\n")
    return path


def write_matrix_market(path, matrix) -> Path:
    """
    Dump a sparse matrix in Matrix Market coordinate format.

    Args:
        path: Output file path.
        matrix: Sparse or dense matrix.

    Returns:
        Path: The written path.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    scipy.io.mmwrite(str(path), sp.coo_matrix(matrix))
    return path


def write_metadata(path, meta: Mapping[str, Any]) -> Path:
    """Write a "key: value" sidecar, keys in insertion order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{k}: {_format(v)}\n" for k, v in meta.items()))
    return path
