"""
Test file for error norms, ladders and oscillation metrics.
"""
import math
import unittest

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from wrfem.core.errors import ConvergenceError, SamplingError
from wrfem.core.harness import (
    ConvergenceReport,
    ConvergenceRow,
    compare,
    convergence,
    eoc,
    error_norms,
    mc1d_convergence,
    oscillation_count,
    oscillation_index,
    oscillation_metrics,
    peclet_numbers,
    problem_name,
    profile,
    relative_l2,
    sign_alternations,
    solve_problem,
    team9a_line,
    team9a_reference_error,
    transport_convergence,
    with_formulation,
)
from wrfem.core.mesh import build_line_mesh
from wrfem.core.problems1d import Mc1dConfig, tp1, tp2
from wrfem.core.problems2d import CircAConfig, Team9aConfig
from wrfem.core.problems3d import Team9a3dConfig
from wrfem.core.weakforms import Formulation


class TestNorms(unittest.TestCase):
    """Test cases for error norms and convergence orders."""

    def test_error_norms(self):
        l2, ab = error_norms(np.array([1.0, 2.0, 3.0, 4.0]), np.array([1.0, 2.0, 3.0, 2.0]))
        self.assertAlmostEqual(l2, 1.0)
        self.assertAlmostEqual(ab, 2.0)

    def test_error_norm_inputs(self):
        with self.assertRaises(SamplingError):
            error_norms(np.array([]), np.array([]))
        with self.assertRaises(SamplingError):
            error_norms(np.ones(3), np.ones(4))

    def test_relative_l2(self):
        self.assertAlmostEqual(relative_l2(np.array([3.0, 4.0]), np.array([0.0, 4.0])), 0.75)
        with self.assertRaises(ConvergenceError):
            relative_l2(np.ones(2), np.zeros(2))

    @given(st.floats(min_value=0.5, max_value=4.0), st.floats(min_value=1e-6, max_value=1.0))
    @settings(max_examples=30, deadline=None)
    def test_eoc_recovers_power_law(self, order, scale):
        h = [0.1, 0.05, 0.025]
        errors = [scale * x ** order for x in h]
        orders = eoc(h, errors)
        self.assertIsNone(orders[0])
        assert_allclose(orders[1:], order, rtol=1e-9)

    def test_eoc_rejects_bad_ladders(self):
        with self.assertRaises(ConvergenceError):
            eoc([0.1], [1.0])
        with self.assertRaises(ConvergenceError):
            eoc([0.1, 0.2], [1.0, 0.5])
        with self.assertRaises(ConvergenceError):
            eoc([0.1, 0.05], [1.0, 0.0])
        with self.assertRaises(ConvergenceError):
            eoc([0.1, 0.05], [1.0])

    def test_report_rows(self):
        report = ConvergenceReport("mc1d", "wr", [ConvergenceRow(10, 0.1, 1e-2, 4e-2),
                                                  ConvergenceRow(20, 0.05, 2.5e-3, 1e-2)]).finalize()
        self.assertEqual(ConvergenceReport.header(), ["n_elems", "h", "l2_error", "abs_error", "eoc"])
        rows = report.csv_rows()
        self.assertEqual(rows[0][-1], "")
        self.assertEqual(rows[1][-1], "2.0000")
        self.assertEqual(rows[1][0], "20")


class TestOscillation(unittest.TestCase):
    """Test cases for oscillation metrics."""

    def test_sign_alternations(self):
        self.assertEqual(sign_alternations(np.array([1.0, -1.0, 1.0, -1.0])), 3)
        self.assertEqual(sign_alternations(np.array([1.0, -1e-5, 1.0])), 0)
        self.assertEqual(sign_alternations(np.zeros(5)), 0)
        self.assertEqual(sign_alternations(np.array([])), 0)

    def test_monotone_profile(self):
        values = np.exp(np.linspace(0.0, 3.0, 50))
        self.assertEqual(oscillation_count(values), 0)
        self.assertEqual(oscillation_index(values), 0.0)

    def test_zigzag(self):
        values = np.array([0.0, 1.0, 0.0, 1.0, 0.0])
        self.assertEqual(oscillation_count(values), 3)
        self.assertAlmostEqual(oscillation_index(values), 1.0)
        self.assertEqual(oscillation_index(np.array([1.0, 2.0])), 0.0)

    def test_metrics_keys(self):
        metrics = oscillation_metrics(np.array([1.0, -1.0, 2.0]))
        self.assertEqual(set(metrics), {"sign_alternations", "oscillation_count", "oscillation_index"})


class TestDispatch(unittest.TestCase):
    """Test cases for problem dispatch."""

    def test_problem_names(self):
        self.assertEqual(problem_name(Mc1dConfig()), "mc1d")
        self.assertEqual(problem_name(tp1(10)), "transport")
        self.assertEqual(problem_name(CircAConfig()), "circ_a")
        self.assertEqual(problem_name(Team9aConfig()), "team9a")
        self.assertEqual(problem_name(Team9a3dConfig()), "team9a_3d")

    def test_with_formulation(self):
        self.assertIs(with_formulation(Mc1dConfig(), "supg").formulation, Formulation.SUPG)
        cfg = with_formulation(Team9a3dConfig(), "galerkin")
        self.assertIs(cfg.formulation, Formulation.GALERKIN)
        self.assertEqual(cfg.section.mu_r, 50.0)

    def test_peclet_numbers(self):
        pe = peclet_numbers(build_line_mesh(800, 0.0, 1.0), 1000.0)
        self.assertEqual(pe.shape, (800,))
        assert_allclose(pe, 0.625)
        assert_allclose(peclet_numbers(build_line_mesh(10, 0.0, 1.0), -40.0), 2.0)

    def test_profile_columns(self):
        cfg = Mc1dConfig(n_elems=20)
        columns, name = profile(cfg, solve_problem(cfg))
        self.assertEqual(name, "b_x")
        self.assertEqual(columns["z"].shape, columns["b_x"].shape)
        cfg = tp2(12)
        columns, name = profile(cfg, solve_problem(cfg))
        self.assertEqual((name, columns["psi"].shape), ("psi", (13,)))


class TestLadders(unittest.TestCase):
    """Test cases for convergence ladders."""

    def test_mc1d_ladder(self):
        report = mc1d_convergence(Mc1dConfig(mu_sigma_u=100.0, outflow_bc="natural"), [50, 100, 200, 400])
        self.assertEqual([r.n_elems for r in report.rows], [50, 100, 200, 400])
        self.assertIsNone(report.rows[0].eoc)
        self.assertLess(report.rows[-1].l2, report.rows[0].l2)
        self.assertGreater(report.rows[-1].eoc, 0.0)

    def test_threaded_ladder_matches_serial(self):
        cfg = tp2(10, "galerkin")
        serial = transport_convergence(cfg, [10, 20, 40])
        threaded = transport_convergence(cfg, [10, 20, 40], workers=3)
        self.assertEqual([r.l2 for r in serial.rows], [r.l2 for r in threaded.rows])

    def test_transport_ladder_converges(self):
        report = convergence(tp1(10, "supg"), [10, 20, 40, 80])
        self.assertEqual(report.problem, "transport")
        self.assertLess(report.rows[-1].abs, report.rows[0].abs)

    def test_moving_conductor_reference_errors(self):
        # weighted-residual b_x at mu*sigma*u = 1000: L2 1.76e-3 on 100 and 7.84e-4 on 400 elements
        cfg = Mc1dConfig(mu_sigma_u=1000.0, outflow_bc="natural")
        report = mc1d_convergence(cfg, [100, 400])
        for row, expected in zip(report.rows, (1.76e-3, 7.84e-4)):
            self.assertGreater(row.l2, expected / 1.5, row.n_elems)
            self.assertLess(row.l2, expected * 1.5, row.n_elems)
        galerkin = mc1d_convergence(with_formulation(cfg, "galerkin"), [100])
        self.assertGreater(galerkin.rows[0].l2, 1.76e-3 * 1.5)

    def test_transport_reference_error(self):
        report = transport_convergence(tp1(20), [20, 40, 80, 160, 320])
        finest = report.rows[-1]
        self.assertEqual(finest.n_elems, 320)
        self.assertGreater(finest.l2, 1.55e-4 / 1.5)
        self.assertLess(finest.l2, 1.55e-4 * 1.5)

    def test_no_ladder_for_team9a(self):
        with self.assertRaises(ConvergenceError):
            convergence(Team9aConfig(), [1, 2])

    @pytest.mark.slow
    def test_circ_a_first_order(self):
        report = convergence(CircAConfig(nz=80, ny=32), [1, 2, 3], reference_levels=2)
        orders = [r.eoc for r in report.rows[1:]]
        self.assertEqual(len(orders), 2)
        for order in orders:
            self.assertGreaterEqual(order, 0.9)
            self.assertLessEqual(order, 1.3)

    @pytest.mark.slow
    def test_circ_a_ladder(self):
        report = convergence(CircAConfig(nz=8, ny=8, formulation="galerkin"), [1, 2, 3], reference_levels=1)
        self.assertEqual([r.n_elems for r in report.rows], [64, 128, 256])
        assert_allclose(report.rows[0].h, math.sqrt(0.4 / 64))
        self.assertTrue(all(r.l2 > 0 for r in report.rows))


class TestCompare(unittest.TestCase):
    """Test cases for side-by-side scheme comparison."""

    def test_compare_mc1d(self):
        results = compare(Mc1dConfig(mu_sigma_u=400.0, n_elems=20), ["galerkin", "wr", "supg"])
        self.assertEqual(set(results), {"galerkin", "wr", "supg"})
        for entry in results.values():
            self.assertEqual(entry["column"], "b_x")
            self.assertIn("oscillation_index", entry["metrics"])
        self.assertGreater(results["galerkin"]["metrics"]["sign_alternations"], 0)

    def test_compare_team9a_reports_interface_ratio(self):
        cfg = Team9aConfig(nz_half=4, n_air=2, n_conductor=4)
        results = compare(cfg, ["galerkin"])
        self.assertIn("interface_ratio", results["galerkin"]["metrics"])

    def test_team9a_line(self):
        points = team9a_line(Team9aConfig(), n=5)
        assert_allclose(points[:, 1], 0.015)
        assert_allclose(points[[0, -1], 0], [-0.05, 0.05])

    @pytest.mark.slow
    def test_team9a_reference_error(self):
        cfg = Team9aConfig(nz_half=6, n_air=3, n_conductor=6, formulation="galerkin")
        error = team9a_reference_error(cfg, factor=2)
        self.assertTrue(math.isfinite(error))
        self.assertGreater(error, 0.0)


if __name__ == "__main__":
    unittest.main()
