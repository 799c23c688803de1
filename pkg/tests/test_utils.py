"""
Test file for utility functions.
"""
import logging
import tempfile
import unittest
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from wrfem.core.errors import WrfemError
from wrfem.core.mesh import build_line_mesh, build_quad_mesh
from wrfem.utils.utils import (
    canonical_config,
    columns_to_rows,
    config_hash,
    setup_logging,
    write_csv,
    write_matrix_market,
    write_metadata,
    write_vtk,
)


class TestUtils(unittest.TestCase):
    """Test cases for utility functions."""

    def setUp(self):
        """Set up test environment."""
        self.temp_dir = tempfile.TemporaryDirectory()
        self.temp_path = Path(self.temp_dir.name)

    def tearDown(self):
        """Clean up after tests."""
        self.temp_dir.cleanup()

    def test_setup_logging(self):
        """Test setup_logging function."""
        logger = setup_logging(level=logging.DEBUG)

        self.assertEqual(logger.name, "wrfem")
        self.assertEqual(logger.level, logging.DEBUG)
        handlers = [h for h in logger.handlers if getattr(h, "_wrfem", False)]
        self.assertEqual(len(handlers), 1)
        self.assertIsInstance(handlers[0], logging.StreamHandler)

        # A second call reuses the handler
        logger = setup_logging(level=logging.WARNING)
        handlers = [h for h in logger.handlers if getattr(h, "_wrfem", False)]
        self.assertEqual(len(handlers), 1)
        self.assertEqual(handlers[0].level, logging.WARNING)

    def test_config_hash(self):
        """Test canonical configuration text and its hash."""
        a = {"run": {"problem": "mc1d", "name": "x"}, "mesh": {"n_elems": " 50"}}
        b = {"mesh": {"n_elems": "50"}, "run": {"name": "x", "problem": "mc1d"}}

        self.assertEqual(canonical_config(a), "mesh.n_elems=50\nrun.name=x\nrun.problem=mc1d")
        self.assertEqual(config_hash(a), config_hash(b))
        self.assertEqual(len(config_hash(a)), 12)
        self.assertNotEqual(config_hash(a), config_hash({"run": {"problem": "transport"}}))

    def test_write_csv(self):
        """Test write_csv function."""
        path = write_csv(self.temp_path / "out" / "table.csv", ["n", "error"],
                         [[10, 0.5], [20, np.float64(0.125)]], meta={"config_hash": "abc"})

        raw = path.read_bytes().decode()
        self.assertTrue(raw.startswith("# config_hash: abc\n"))
        self.assertIn("n,error\r\n", raw)
        self.assertIn("10,5.0000000000e-01\r\n", raw)
        self.assertIn("20,1.2500000000e-01\r\n", raw)

    def test_columns_to_rows(self):
        """Test columns_to_rows function."""
        rows = columns_to_rows({"z": np.array([0.0, 1.0]), "b": np.array([2.0, 3.0])})
        self.assertEqual(rows, [[0.0, 2.0], [1.0, 3.0]])

        with self.assertRaises(WrfemError):
            columns_to_rows({"z": np.zeros(2), "b": np.zeros(3)})

    def test_write_vtk(self):
        """Test write_vtk function."""
        mesh = build_quad_mesh(2, 1, [(0.0, 1.0), (0.0, 0.5)])
        path = write_vtk(self.temp_path / "mesh.vtk", mesh,
                         {"A_y": np.arange(mesh.n_nodes, dtype=float)}, {"pe": np.ones(2)})

        lines = path.read_text().splitlines()
        self.assertEqual(lines[0], "# vtk DataFile Version 3.0")
        self.assertIn("POINTS 6 double", lines)
        self.assertIn("CELLS 2 10", lines)
        self.assertEqual(lines.count("9"), 2)
        self.assertIn("POINT_DATA 6", lines)
        self.assertIn("SCALARS pe double 1", lines)

        with self.assertRaises(WrfemError):
            write_vtk(self.temp_path / "bad.vtk", mesh, {"A_y": np.zeros(3)}, {})

    def test_write_vtk_line_mesh(self):
        """Test write_vtk pads 1D coordinates."""
        mesh = build_line_mesh(2, 0.0, 1.0)
        path = write_vtk(self.temp_path / "line.vtk", mesh, {}, {})

        lines = path.read_text().splitlines()
        self.assertIn("5.0000000000e-01 0.0000000000e+00 0.0000000000e+00", lines)
        self.assertNotIn("POINT_DATA 3", lines)

    def test_write_matrix_market(self):
        """Test write_matrix_market function."""
        matrix = sp.csr_matrix(np.array([[2.0, -1.0], [0.0, 3.0]]))
        path = write_matrix_market(self.temp_path / "k.mtx", matrix)

        np.testing.assert_array_equal(scipy.io.mmread(str(path)).toarray(), matrix.toarray())

    def test_write_metadata(self):
        """Test write_metadata function."""
        path = write_metadata(self.temp_path / "run.meta.txt", {"problem": "mc1d", "residual": 1e-15})

        self.assertEqual(path.read_text(), "problem: mc1d\nresidual: 1.0000000000e-15\n")


if __name__ == "__main__":
    unittest.main()
