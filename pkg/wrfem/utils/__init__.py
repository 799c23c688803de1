"""
Utilities package for wrfem.
"""
from wrfem.utils.utils import (
    setup_logging,
    canonical_config,
    config_hash,
    write_csv,
    columns_to_rows,
    write_vtk,
    write_matrix_market,
    write_metadata
)

__all__ = [
    "setup_logging",
    "canonical_config",
    "config_hash",
    "write_csv",
    "columns_to_rows",
    "write_vtk",
    "write_matrix_market",
    "write_metadata"
]
