"""
Command-line interface package for wrfem.
"""
from wrfem.cli.cli import main

__all__ = ["main"]
