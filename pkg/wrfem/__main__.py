#!/usr/bin/env python3
"""
Entry point for wrfem CLI.
"""
import sys
from wrfem.cli import main

if __name__ == "__main__":
    sys.exit(main())
