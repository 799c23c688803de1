"""
Test file for the Z-transform stability analysis.
"""
import math
import unittest

import numpy as np
from numpy.polynomial import polynomial as P
from numpy.testing import assert_allclose

from wrfem.core.errors import StabilityError
from wrfem.core.stability import (
    analyze,
    classify,
    default_pe_grid,
    determinant_poles,
    effective_tf,
    expand_peclet,
    extract_stencil,
    format_polynomial,
    format_tf,
    galerkin_pole,
    polynomial_roots,
    stability_header,
    sweep_rows,
    transfer_function,
)
from wrfem.core.weakforms import Formulation


class TestPolynomialRoots(unittest.TestCase):
    """Test cases for root finding."""

    def test_double_unit_root(self):
        roots = polynomial_roots(P.polyfromroots([1.0, 1.0, 3.0]))
        assert_allclose(roots, [1.0, 1.0, 3.0], atol=1e-12)

    def test_trailing_zeros_trimmed(self):
        roots = polynomial_roots(np.array([-2.0, 1.0, 0.0, 0.0]))
        assert_allclose(roots, [2.0])

    def test_constant_has_no_roots(self):
        self.assertEqual(polynomial_roots(np.array([3.0])).size, 0)


class TestStencils(unittest.TestCase):
    """Test cases for stencil extraction and transfer functions."""

    def test_galerkin_stencil(self):
        stencil = extract_stencil("galerkin", 2.0)
        self.assertEqual(stencil.fields, ("A_y",))
        assert_allclose(stencil.row("A_y")["A_y"], [-3.0, 2.0, 1.0], atol=1e-12)

    def test_centre_coefficient_normalized(self):
        stencil = extract_stencil("wr", 0.7)
        self.assertEqual(stencil.fields, ("A_y", "b_x"))
        for name in stencil.fields:
            self.assertAlmostEqual(stencil.row(name)[name][1], 2.0)

    def test_galerkin_poles(self):
        for pe in (0.5, 2.0, 10.0):
            tf = transfer_function(extract_stencil("galerkin", pe))
            self.assertEqual(tf.n_fields, 1)
            assert_allclose(np.sort(tf.poles.real), np.sort([1.0, galerkin_pole(pe)]), rtol=1e-9)
            assert_allclose(tf.poles.imag, 0.0, atol=1e-12)

    def test_supg_pole_is_exponential(self):
        for pe in (0.3, 1.0, 3.0):
            tf = transfer_function(extract_stencil("supg", pe))
            assert_allclose(np.sort(tf.poles.real), [1.0, math.exp(2.0 * pe)], rtol=1e-8)

    def test_determinant_agrees_with_elimination(self):
        for formulation in Formulation:
            stencil = extract_stencil(formulation, 0.5)
            eliminated = transfer_function(stencil).poles
            direct = determinant_poles(stencil)
            self.assertEqual(len(direct), len(eliminated))
            assert_allclose(np.sort(direct.real), np.sort(eliminated.real), atol=1e-6)

    def test_transport_stencil(self):
        stencil = extract_stencil("wr", 1.0, problem="transport")
        self.assertEqual(stencil.fields, ("psi", "F_z"))

    def test_bad_arguments(self):
        with self.assertRaises(StabilityError):
            extract_stencil("galerkin", 1.0, n_elems=5)
        with self.assertRaises(StabilityError):
            extract_stencil("galerkin", -1.0)
        with self.assertRaises(StabilityError):
            extract_stencil("galerkin", 1.0, problem="heat")


class TestClassification(unittest.TestCase):
    """Test cases for oscillation verdicts over Pe sweeps."""

    def test_galerkin_oscillates_above_unit_peclet(self):
        report = analyze("galerkin", [0.5, 2.0, 100.0])
        self.assertEqual([e.oscillatory for e in report.entries], [False, True, True])
        self.assertFalse(report.stable)

    def test_supg_never_oscillates(self):
        self.assertTrue(analyze("supg", default_pe_grid(9)).stable)

    def test_weighted_residual_never_oscillates(self):
        report = analyze("wr", default_pe_grid(41, 0.1, 1e4))
        self.assertEqual(len(report.entries), 41)
        self.assertTrue(report.stable, [e.pe for e in report.entries if e.oscillatory])

    def test_weighted_residual_exact_poles_are_reported(self):
        # exact characteristic roots go negative above Pe^2 = 3/2; the verdict follows the reduced function
        report = analyze("wr", [3.0])
        entry = report.entries[0]
        self.assertEqual(len(entry.poles), 4)
        self.assertTrue(any(p.real < 0 for p in entry.poles))
        assert_allclose(np.real(entry.effective_poles), [1.0, 1.0], atol=1e-9)
        self.assertFalse(entry.oscillatory)

    def test_report_rows(self):
        report = analyze("galerkin", [0.5, 2.0])
        header = stability_header(report)
        rows = sweep_rows(report)
        self.assertEqual(header, ["pe", "pole_1", "pole_2", "verdict"])
        self.assertEqual(len(rows), 2)
        self.assertEqual(rows[0][-1], "non-oscillatory")
        self.assertEqual(rows[1][-1], "oscillatory")
        self.assertEqual(set(report.trajectories()), {0.5, 2.0})

    def test_classify_cancels_only_coupled_poles(self):
        galerkin = transfer_function(extract_stencil("galerkin", 2.0))
        wr = transfer_function(extract_stencil("wr", 100.0))
        report = classify([galerkin], Formulation.GALERKIN)
        self.assertEqual(report.entries[0].cancelled, ())
        self.assertTrue(report.entries[0].oscillatory)
        report = classify([wr], Formulation.WEIGHTED_RESIDUAL)
        entry = report.entries[0]
        self.assertGreater(len(entry.cancelled), 0)
        self.assertEqual(len(entry.effective_poles) + len(entry.cancelled), len(entry.poles))
        self.assertFalse(entry.oscillatory)

    def test_classify_uses_reduced_functions(self):
        wr = transfer_function(extract_stencil("wr", 3.0))
        self.assertTrue(classify([wr], Formulation.WEIGHTED_RESIDUAL).entries[0].oscillatory)
        reduced = effective_tf("wr", 3.0)
        entry = classify([wr], Formulation.WEIGHTED_RESIDUAL, reduced=[reduced]).entries[0]
        self.assertFalse(entry.oscillatory)
        self.assertEqual(entry.poles, tuple(wr.poles.tolist()))
        with self.assertRaises(StabilityError):
            classify([wr], Formulation.WEIGHTED_RESIDUAL, reduced=[])

    def test_galerkin_pole_at_unit_peclet(self):
        self.assertEqual(galerkin_pole(1.0), float("inf"))
        self.assertAlmostEqual(galerkin_pole(3.0), -2.0)

    def test_default_grid(self):
        grid = default_pe_grid()
        self.assertEqual(len(grid), 25)
        self.assertAlmostEqual(grid[0], 0.1)
        self.assertAlmostEqual(grid[-1], 1e4)


class TestAsymptote(unittest.TestCase):
    """Test cases for the large-Pe weighted-residual transfer function."""

    def test_large_peclet_limit(self):
        tf = transfer_function(extract_stencil("wr", 1e4))
        for z in (2.0 + 0.5j, -0.3 + 1.2j, 4.0):
            assert_allclose(tf(z), (z * z - 1.0) / (2.0 * (z - 1.0) ** 2), rtol=1e-3)

    def test_reduction_keeps_unit_poles(self):
        reduced = effective_tf("wr", 1e4)
        assert_allclose(reduced.poles.real, [1.0, 1.0], atol=1e-6)
        assert_allclose(np.sort(reduced.zeros.real), [-1.0, 1.0], atol=1e-6)
        assert_allclose(reduced.num, [-1.0, 0.0, 1.0], atol=1e-6)
        assert_allclose(reduced.den, [2.0, -4.0, 2.0], atol=1e-6)
        self.assertEqual(len(reduced.cancelled), 2)

    def test_expansion_in_peclet(self):
        expansion = expand_peclet("wr")
        self.assertEqual(len(expansion.den), 3)
        # the pure-diffusion part of the denominator is -(Z - 1)^4
        assert_allclose(expansion.den[0], -P.polyfromroots([1.0, 1.0, 1.0, 1.0]), atol=1e-9)
        assert_allclose(expansion.den[1], 0.0, atol=1e-9)
        self.assertIsNone(expand_peclet("galerkin"))
        self.assertIsNone(expand_peclet("supg"))

    def test_low_peclet_keeps_diffusion_poles(self):
        reduced = effective_tf("wr", 0.1)
        assert_allclose(reduced.poles.real, [1.0, 1.0, 1.0, 1.0], atol=1e-6)
        self.assertEqual(reduced.cancelled, ())

    def test_single_field_is_not_cancelled(self):
        tf = transfer_function(extract_stencil("galerkin", 2.0))
        reduced = effective_tf("galerkin", 2.0)
        assert_allclose(np.sort(reduced.poles.real), np.sort(tf.poles.real))
        assert_allclose(reduced(2.0 + 0.5j), tf(2.0 + 0.5j), rtol=1e-9)

    def test_format(self):
        self.assertEqual(format_polynomial(np.array([-1.0, 0.0, 1.0])), "-1 + 1 Z^2")
        self.assertEqual(format_polynomial(np.array([2.0, -4.0, 2.0])), "2 - 4 Z + 2 Z^2")
        self.assertEqual(format_polynomial(np.zeros(3)), "0")
        self.assertEqual(format_tf(effective_tf("wr", 1e6)), "(-1 + 1 Z^2) / (2 - 4 Z + 2 Z^2)")

if __name__ == "__main__":
    unittest.main()
