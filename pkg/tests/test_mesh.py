"""
Test file for the mesh module.
"""
import math
import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from wrfem.core.errors import MeshError, QuadratureError, SamplingError
from wrfem.core.mesh import (
    ElementKind,
    GradingSpec,
    Segment,
    axis_coordinates,
    build_cylinder_mesh,
    build_hex_mesh,
    build_line_mesh,
    build_quad_mesh,
    evaluate_points,
    gauss_rule,
    graded_axis,
    locate_points,
    reference_nodes,
    shape_eval,
    shape_gradients,
    shape_values,
)

local = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False)


class TestShapeFunctions(unittest.TestCase):
    """Test cases for reference shape functions."""

    @given(st.tuples(local, local, local))
    @settings(max_examples=50, deadline=None)
    def test_partition_of_unity(self, xi):
        """Shape values sum to one and gradients to zero everywhere."""
        for kind in ElementKind:
            point = np.array([xi[:kind.dim]])
            self.assertAlmostEqual(shape_values(kind, point).sum(), 1.0, places=12)
            assert_allclose(shape_gradients(kind, point).sum(axis=1), 0.0, atol=1e-12)

    def test_kronecker_at_nodes(self):
        """N_i is one at node i and zero at the other nodes."""
        for kind in ElementKind:
            values = shape_values(kind, reference_nodes(kind))
            assert_allclose(values, np.eye(kind.n_nodes), atol=1e-14)

    @given(st.tuples(local, local, local))
    @settings(max_examples=25, deadline=None)
    def test_hex_gradients_match_finite_differences(self, xi):
        """Reference gradients of hex8 match central differences."""
        point = np.array(xi) * 0.99
        grads = shape_gradients(ElementKind.HEX8, point[None])[0]
        eps = 1e-6
        for j in range(3):
            step = np.zeros(3)
            step[j] = eps
            fd = (shape_values(ElementKind.HEX8, (point + step)[None])[0]
                  - shape_values(ElementKind.HEX8, (point - step)[None])[0]) / (2 * eps)
            assert_allclose(grads[:, j], fd, atol=1e-8)


class TestQuadrature(unittest.TestCase):
    """Test cases for Gauss rules."""

    def test_weights_sum_to_reference_volume(self):
        for kind in ElementKind:
            for order in (1, 2, 3):
                rule = gauss_rule(kind, order)
                self.assertAlmostEqual(rule.weights.sum(), kind.reference_volume)
                self.assertEqual(rule.points.shape, (order ** kind.dim, kind.dim))

    def test_polynomial_exactness(self):
        """An n-point rule integrates x^k exactly for k <= 2n - 1."""
        for order in (1, 2, 3):
            rule = gauss_rule(ElementKind.LINE2, order)
            for k in range(2 * order):
                exact = 0.0 if k % 2 else 2.0 / (k + 1)
                self.assertAlmostEqual(float(rule.weights @ rule.points[:, 0] ** k), exact, places=13)

    def test_quad_tensor_exactness(self):
        rule = gauss_rule(ElementKind.QUAD4, 2)
        x, y = rule.points[:, 0], rule.points[:, 1]
        self.assertAlmostEqual(float(rule.weights @ (x ** 2 * y ** 2)), 4.0 / 9.0, places=13)

    def test_unsupported_order(self):
        with self.assertRaises(QuadratureError):
            gauss_rule(ElementKind.QUAD4, 4)


class TestGrading(unittest.TestCase):
    """Test cases for graded axes."""

    def test_uniform_line_spacing(self):
        mesh = build_line_mesh(800, 0.0, 1.0)
        self.assertEqual(mesh.n_elements, 800)
        self.assertEqual(mesh.n_nodes, 801)
        assert_allclose(mesh.spacing, 1.25e-3)

    def test_geometric_segment(self):
        coords = Segment(0.0, 1.0, 4, 2.0).coordinates()
        sizes = np.diff(coords)
        assert_allclose(sizes[1:] / sizes[:-1], 2.0)
        self.assertEqual(coords[0], 0.0)
        self.assertEqual(coords[-1], 1.0)

    def test_graded_axis_is_finest_at_focus(self):
        axis = axis_coordinates(graded_axis(-0.1, 0.1, 0.0, 28, 28, 1.14))
        sizes = np.diff(axis)
        self.assertEqual(len(sizes), 56)
        self.assertIn(0.0, axis)
        self.assertAlmostEqual(sizes.min(), sizes[27])
        self.assertAlmostEqual(sizes[27], sizes[28])
        assert_allclose(sizes[29:] / sizes[28:-1], 1.14)

    def test_refined_grading_subdivides(self):
        grading = GradingSpec((graded_axis(0.0, 1.0, 0.5, 3, 3, 1.2),))
        fine = grading.refined(2)
        self.assertEqual(fine.counts(), (12,))
        coarse = grading.coordinates()[0]
        self.assertTrue(np.all(np.isin(np.round(coarse, 14), np.round(fine.coordinates()[0], 14))))

    def test_noncontiguous_segments(self):
        with self.assertRaises(MeshError):
            axis_coordinates([Segment(0.0, 1.0, 2), Segment(1.5, 2.0, 2)])

    def test_bad_counts(self):
        with self.assertRaises(MeshError):
            build_line_mesh(0, 0.0, 1.0)
        with self.assertRaises(MeshError):
            build_line_mesh(4, 1.0, 1.0)
        with self.assertRaises(MeshError):
            build_quad_mesh(0, 2, [(0, 1), (0, 1)])


class TestMeshes(unittest.TestCase):
    """Test cases for mesh builders and point evaluation."""

    def test_quad_measures_sum_to_area(self):
        mesh = build_quad_mesh(6, 4, [(0.0, 1.5), (0.0, 0.4)])
        self.assertAlmostEqual(mesh.measures().sum(), 0.6)
        self.assertTrue(np.all(mesh.check_jacobians() > 0))
        self.assertEqual(set(mesh.boundary), {"zmin", "zmax", "ymin", "ymax", "boundary"})

    def test_hex_boundary_sets(self):
        mesh = build_hex_mesh(2, 3, 4, [(0, 1), (0, 1), (0, 2)])
        self.assertEqual(mesh.n_nodes, 3 * 4 * 5)
        self.assertEqual(len(mesh.boundary["zmin"]), 12)
        assert_allclose(mesh.coords[mesh.boundary["zmax"], 2], 2.0)
        self.assertEqual(mesh.flow_axis, 2)

    def test_shape_eval_rejects_outside_point(self):
        mesh = build_quad_mesh(2, 2, [(0, 1), (0, 1)])
        with self.assertRaises(MeshError):
            shape_eval(mesh, 0, [1.5, 0.0])

    def test_locate_points_and_interpolate(self):
        mesh = build_quad_mesh(5, 3, [(0.0, 1.0), (0.0, 0.6)],
                               grading=GradingSpec((graded_axis(0.0, 1.0, 0.3, 2, 3, 1.3),
                                                    (Segment(0.0, 0.6, 3),))))
        rng = np.random.default_rng(3)
        points = rng.uniform([0.0, 0.0], [1.0, 0.6], size=(20, 2))
        elements, xi = locate_points(mesh, points)
        values, grads = evaluate_points(mesh, elements, xi)
        nodal = 2.0 * mesh.coords[:, 0] - 3.0 * mesh.coords[:, 1] + 0.5
        element_nodal = nodal[mesh.elements[elements]]
        assert_allclose(np.einsum("pn,pn->p", values, element_nodal), 2.0 * points[:, 0] - 3.0 * points[:, 1] + 0.5)
        assert_allclose(np.einsum("pnd,pn->pd", grads, element_nodal), np.tile([2.0, -3.0], (20, 1)), atol=1e-10)

    def test_locate_outside_point(self):
        mesh = build_quad_mesh(2, 2, [(0, 1), (0, 1)])
        with self.assertRaises(SamplingError):
            locate_points(mesh, np.array([[1.2, 0.5]]))

    def test_cylinder_volume(self):
        r_axis = np.array([0.0, 0.01, 0.02, 0.04])
        mesh = build_cylinder_mesh(np.linspace(0.0, 0.1, 5), r_axis, 16)
        volume = mesh.measures().sum()
        # polygonal cross-section approaches the disc from inside
        exact = math.pi * 0.04 ** 2 * 0.1
        self.assertLess(volume, exact)
        self.assertGreater(volume, 0.95 * exact)
        assert_allclose(np.hypot(*mesh.coords[mesh.boundary["outer"], :2].T), 0.04)

    def test_cylinder_rejects_bad_angles(self):
        with self.assertRaises(MeshError):
            build_cylinder_mesh(np.linspace(0, 1, 3), np.array([0.0, 0.1, 0.2]), 6)


if __name__ == "__main__":
    unittest.main()
