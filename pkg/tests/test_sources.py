"""
Test file for the applied-field sources.
"""
import math
import unittest

import numpy as np
from numpy.testing import assert_allclose

from wrfem.core.errors import SamplingError
from wrfem.core.sources import loop_field, loop_field_cartesian, loop_field_filament, patch_field
from wrfem.core.weakforms import MU0


class TestLoopField(unittest.TestCase):
    """Test cases for the filament loop field."""

    def setUp(self):
        self.r_c = 0.012
        self.current = 3000.0

    def test_centre_value(self):
        b_r, b_z = loop_field(self.r_c, self.current, np.array([0.0]), np.array([0.0]))
        self.assertEqual(b_r[0], 0.0)
        self.assertAlmostEqual(b_z[0] / (MU0 * self.current / (2.0 * self.r_c)), 1.0, places=12)

    def test_on_axis_profile(self):
        z = np.linspace(-0.05, 0.05, 11)
        b_r, b_z = loop_field(self.r_c, self.current, z, np.zeros_like(z))
        expected = MU0 * self.current * self.r_c ** 2 / (2.0 * (self.r_c ** 2 + z ** 2) ** 1.5)
        assert_allclose(b_z, expected, rtol=1e-12)
        assert_allclose(b_r, 0.0)

    def test_matches_biot_savart_quadrature(self):
        z = np.array([0.005, -0.01, 0.02, 0.0, 0.003])
        r = np.array([0.0081, 0.0081, 0.03, 0.02, 0.015])
        closed = loop_field(self.r_c, self.current, z, r)
        summed = loop_field_filament(self.r_c, self.current, z, r)
        assert_allclose(closed[0], summed[0], rtol=1e-8, atol=1e-14)
        assert_allclose(closed[1], summed[1], rtol=1e-8, atol=1e-14)

    def test_radial_field_is_odd_in_z(self):
        r = np.full(4, 0.009)
        z = np.array([0.001, 0.004, 0.01, 0.03])
        above, _ = loop_field(self.r_c, self.current, z, r)
        below, _ = loop_field(self.r_c, self.current, -z, r)
        assert_allclose(above, -below)

    def test_loop_plane_shift(self):
        shifted = loop_field(self.r_c, 1.0, np.array([0.03]), np.array([0.01]), z_loop=0.02)
        centred = loop_field(self.r_c, 1.0, np.array([0.01]), np.array([0.01]))
        assert_allclose(shifted, centred)

    def test_on_filament(self):
        with self.assertRaises(SamplingError):
            loop_field(self.r_c, 1.0, np.array([0.0]), np.array([self.r_c]))

    def test_cartesian_consistency(self):
        angle = math.radians(30.0)
        rho, z = 0.02, 0.007
        points = np.array([[rho * math.cos(angle), rho * math.sin(angle), z],
                           [0.0, 0.0, z]])
        field = loop_field_cartesian(self.r_c, self.current, points)
        b_r, b_z = loop_field(self.r_c, self.current, np.array([z]), np.array([rho]))
        assert_allclose(np.hypot(field[0, 0], field[0, 1]), abs(b_r[0]))
        self.assertAlmostEqual(math.atan2(field[0, 1], field[0, 0]) % math.pi, angle)
        self.assertEqual(field[0, 2], b_z[0])
        assert_allclose(field[1, :2], 0.0)


class TestPatchField(unittest.TestCase):
    """Test cases for the patch excitation."""

    def test_patch(self):
        values = patch_field(0.5, 0.25, 0.75, np.array([0.0, 0.25, 0.5, 0.75, 1.0]))
        assert_allclose(values, [0.0, 0.5, 0.5, 0.5, 0.0])


if __name__ == "__main__":
    unittest.main()
