"""
Test file for the 2D planar and axisymmetric solvers.
"""
import unittest

import numpy as np
from numpy.testing import assert_allclose

from wrfem.core.errors import ConfigError, SamplingError
from wrfem.core.linalg import DofLayout
from wrfem.core.mesh import build_quad_mesh
from wrfem.core.problems1d import FieldSolution
from wrfem.core.problems2d import (
    CONDUCTOR,
    CircAConfig,
    Team9aConfig,
    build_circ_a_mesh,
    build_team9a_mesh,
    circ_a_midline,
    circ_a_sample_points,
    curl_at_local,
    curl_at_points,
    interface_layer_ratio,
    line_points,
    line_samples,
    materials,
    reluctivity,
    solve_circ_a,
    solve_team9a_axi,
    team9a_total_field,
)
from wrfem.core.sources import loop_field
from wrfem.core.weakforms import MU0, Formulation


def small_circ_a(**kwargs) -> CircAConfig:
    return CircAConfig(nz=10, ny=8, **kwargs)


def small_team9a(**kwargs) -> Team9aConfig:
    return Team9aConfig(nz_half=6, n_air=3, n_conductor=6, **kwargs)


class TestCircA(unittest.TestCase):
    """Test cases for the moving strip."""

    def test_config_validation(self):
        with self.assertRaises(ConfigError):
            CircAConfig(strip_width=0.5)
        with self.assertRaises(ConfigError):
            CircAConfig(patch_center=0.99)
        with self.assertRaises(ConfigError):
            CircAConfig(mu_r=0.0)
        with self.assertRaises(ConfigError):
            CircAConfig(nz=1)

    def test_ladder_levels(self):
        cfg = small_circ_a()
        self.assertEqual((cfg.level(0).nz, cfg.level(0).ny), (10, 8))
        self.assertEqual((cfg.level(1).nz, cfg.level(1).ny), (20, 8))
        self.assertEqual((cfg.level(2).nz, cfg.level(2).ny), (20, 16))

    def test_mesh_regions(self):
        cfg = small_circ_a()
        mesh = build_circ_a_mesh(cfg)
        self.assertEqual(int(mesh.region_mask("conductor").sum()), 20)
        nu = reluctivity(mesh, materials(cfg.sigma, 4.0))
        assert_allclose(nu[mesh.region_mask("conductor")], 1.0 / (4.0 * MU0))
        assert_allclose(nu[mesh.region_mask("air")], 1.0 / MU0)

    def test_solve_each_formulation(self):
        for formulation in Formulation:
            solution = solve_circ_a(small_circ_a(formulation=formulation))
            expected = {"phi", "A_y", "A_z"}
            if formulation is Formulation.WEIGHTED_RESIDUAL:
                expected.add("b_x")
            self.assertEqual(set(solution.nodal), expected)
            outer = solution.mesh.boundary["boundary"]
            assert_allclose(solution["A_y"][outer], 0.0, atol=1e-14)
            self.assertEqual(solution.recovered["b_x"].shape, (80,))
            self.assertTrue(all(np.all(np.isfinite(v)) for v in solution.nodal.values()))
            self.assertEqual(solution.meta["problem"], "circ_a")
            self.assertGreater(solution.meta["pe_max"], 0.0)

    def test_potential_vanishes_off_conductor(self):
        solution = solve_circ_a(small_circ_a())
        air_only = np.setdiff1d(np.arange(solution.mesh.n_nodes), solution.mesh.region_nodes([CONDUCTOR]))
        assert_allclose(solution["phi"][air_only], 0.0, atol=1e-14)

    def test_no_motion_no_reaction(self):
        for formulation in Formulation:
            solution = solve_circ_a(small_circ_a(velocity=0.0, formulation=formulation))
            for values in solution.nodal.values():
                assert_allclose(values, 0.0, atol=1e-14)

    def test_upstream_constraint_leaves_interior_unchanged(self):
        # only the weighted-residual scheme carries b_x = 0 on the zmin edge
        cfg = CircAConfig(nz=40, ny=16, velocity=1.0)
        wr = solve_circ_a(cfg)
        galerkin = solve_circ_a(CircAConfig(nz=40, ny=16, velocity=1.0, formulation="galerkin"))
        zmin = wr.mesh.boundary["zmin"]
        assert_allclose(wr["b_x"][zmin], 0.0, atol=1e-14)
        points = circ_a_sample_points(cfg)
        b_wr = curl_at_points(wr, points)["b_x"]
        b_galerkin = curl_at_points(galerkin, points)["b_x"]
        self.assertGreater(np.abs(b_galerkin).max(), 0.0)
        self.assertLess(np.linalg.norm(b_wr - b_galerkin), 0.1 * np.linalg.norm(b_galerkin))

    def test_sample_points_lie_in_strip(self):
        cfg = small_circ_a()
        points = circ_a_sample_points(cfg)
        self.assertEqual(points.shape, (2 * 10 * 2, 2))
        lo, hi = cfg.strip_bounds
        self.assertTrue(np.all((points[:, 1] > lo) & (points[:, 1] < hi)))

    def test_midline_and_line_samples(self):
        cfg = small_circ_a()
        solution = solve_circ_a(cfg)
        z, values = circ_a_midline(solution, cfg)
        self.assertEqual(z.shape, (10,))
        self.assertEqual(values.shape, (10,))
        samples = line_samples(solution, (0.0, 0.2), (1.0, 0.2), n=11)
        self.assertEqual(set(samples), {"s", "z", "y", "b_x"})
        assert_allclose(samples["s"][-1], 1.0)


class TestTeam9aAxisymmetric(unittest.TestCase):
    """Test cases for the axisymmetric loop-in-bore problem."""

    def test_config_validation(self):
        with self.assertRaises(ConfigError):
            Team9aConfig(loop_radius=0.02)
        with self.assertRaises(ConfigError):
            Team9aConfig(refine=0)

    def test_mesh_interface_is_a_node_line(self):
        cfg = small_team9a(refine=2)
        mesh = build_team9a_mesh(cfg)
        self.assertEqual(mesh.axis_names, ("z", "r"))
        self.assertIn(cfg.bore_radius, np.round(mesh.axes[1], 15))
        self.assertEqual(mesh.n_elements, (4 * 6) * (2 * 9))

    def test_solve_each_formulation(self):
        for formulation in Formulation:
            solution = solve_team9a_axi(small_team9a(formulation=formulation))
            self.assertEqual(solution.meta["geometry"], "axisymmetric")
            self.assertIn("b_r", solution.recovered)
            ratio = interface_layer_ratio(solution, 0.014)
            self.assertTrue(np.isfinite(ratio))
            self.assertGreater(ratio, 0.0)

    def test_weighted_residual_default_mesh(self):
        solution = solve_team9a_axi(Team9aConfig(formulation="wr"))
        self.assertEqual(set(solution.nodal), {"A", "b_r", "h_z"})
        self.assertLess(solution.residual, 1e-8)
        self.assertTrue(all(np.all(np.isfinite(v)) for v in solution.nodal.values()))
        # mu0 h_z is a projection of the curl of A; mu_r is 1 everywhere by default
        b_z = MU0 * solution["h_z"][solution.mesh.elements].mean(axis=1)
        curl_z = solution.recovered["b_z"]
        self.assertGreater(np.abs(curl_z).max(), 0.0)
        self.assertLess(np.linalg.norm(b_z - curl_z), 0.25 * np.linalg.norm(curl_z))

    def test_upstream_constraint_matches_galerkin_at_low_peclet(self):
        wr = solve_team9a_axi(small_team9a(velocity=1.0))
        galerkin = solve_team9a_axi(small_team9a(velocity=1.0, formulation="galerkin"))
        assert_allclose(wr["b_r"][wr.mesh.boundary["zmin"]], 0.0, atol=1e-14)
        b_wr = wr.recovered["b_r"]
        b_galerkin = galerkin.recovered["b_r"]
        self.assertGreater(np.abs(b_galerkin).max(), 0.0)
        self.assertLess(np.linalg.norm(b_wr - b_galerkin), 0.1 * np.linalg.norm(b_galerkin))

    def test_nonconducting_total_field_is_applied(self):
        cfg = small_team9a(sigma=0.0)
        solution = solve_team9a_axi(cfg)
        points = np.array([[0.01, 0.02], [-0.03, 0.005]])
        total = team9a_total_field(solution, cfg, points)
        b_r, b_z = loop_field(cfg.loop_radius, cfg.current, points[:, 0], points[:, 1])
        assert_allclose(total["B_r"], b_r)
        assert_allclose(total["B_z"], b_z)

    def test_interface_must_be_mesh_line(self):
        solution = solve_team9a_axi(small_team9a(formulation="galerkin"))
        with self.assertRaises(SamplingError):
            interface_layer_ratio(solution, 0.0141)


class TestSampling(unittest.TestCase):
    """Test cases for sampling helpers."""

    def test_line_points(self):
        points = line_points((0.0, 0.0), (1.0, 2.0), 3)
        assert_allclose(points, [[0, 0], [0.5, 1.0], [1.0, 2.0]])
        with self.assertRaises(SamplingError):
            line_points((0, 0), (1, 1), 1)

    def test_unknown_geometry(self):
        solution = solve_circ_a(small_circ_a(formulation="galerkin"))
        solution.meta["geometry"] = "spherical"
        with self.assertRaises(SamplingError):
            curl_at_local(solution, np.array([0]), np.zeros((1, 2)))


class TestCurl(unittest.TestCase):
    """Test cases for curl recovery from nodal potentials."""

    def setUp(self):
        self.mesh = build_quad_mesh(4, 3, [(0.0, 1.0), (0.0, 0.6)])
        self.points = np.array([[0.1, 0.05], [0.37, 0.29], [0.9, 0.55]])

    def planar(self, a_y: np.ndarray, a_z: np.ndarray) -> FieldSolution:
        layout = DofLayout(("A_y", "A_z"), self.mesh.n_nodes)
        return FieldSolution(self.mesh, layout, {"A_y": a_y, "A_z": a_z}, Formulation.GALERKIN,
                             meta={"geometry": "planar"})

    def test_linear_potential(self):
        y = self.mesh.coords[:, 1]
        b = curl_at_points(self.planar(np.zeros_like(y), y), self.points)
        assert_allclose(b["b_x"], 1.0, atol=1e-12)

    def test_constant_potential_has_no_curl(self):
        ones = np.ones(self.mesh.n_nodes)
        b = curl_at_points(self.planar(2.0 * ones, -ones), self.points)
        assert_allclose(b["b_x"], 0.0, atol=1e-12)

    def test_bilinear_potential(self):
        z, y = self.mesh.coords[:, 0], self.mesh.coords[:, 1]
        b = curl_at_points(self.planar(3.0 * z, 2.0 * z * y + y), self.points)
        assert_allclose(b["b_x"], 2.0 * self.points[:, 0] + 1.0 - 3.0, atol=1e-12)

    def test_axisymmetric_curl(self):
        mesh = build_quad_mesh(4, 3, [(0.0, 1.0), (0.0, 0.6)], axis_names=("z", "r"))
        layout = DofLayout(("A",), mesh.n_nodes)
        solution = FieldSolution(mesh, layout, {"A": mesh.coords[:, 1].copy()}, Formulation.GALERKIN,
                                 meta={"geometry": "axisymmetric"})
        b = curl_at_points(solution, self.points)
        assert_allclose(b["b_r"], 0.0, atol=1e-12)
        assert_allclose(b["b_z"], 2.0, atol=1e-12)

    def test_point_outside_mesh(self):
        y = self.mesh.coords[:, 1]
        with self.assertRaises(SamplingError):
            curl_at_points(self.planar(y, y), np.array([[2.0, 0.1]]))


if __name__ == "__main__":
    unittest.main()
