"""Grid construction: node placement, quadrature mass, snapping."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy import stats

from relbayes.grids import (ParameterGrid, box_nodes, build_grid,
                            midpoint_nodes, toy_grid)
from relbayes.models import linear_model


class TestMidpointNodes:
    def test_unit_interval_two_cells(self):
        assert_allclose(midpoint_nodes(0.0, 1.0, 2), [0.25, 0.75])

    def test_single_cell_is_center(self):
        assert_allclose(midpoint_nodes(-3.0, 5.0, 1), [1.0])

    @given(st.integers(min_value=1, max_value=60),
           st.floats(min_value=-50, max_value=50),
           st.floats(min_value=0.1, max_value=100))
    @settings(max_examples=40, deadline=None)
    def test_nodes_tile_the_interval(self, count, low, width):
        """Midpoints are evenly spaced, symmetric in [low, high], and the
        first and last sit half a cell inside the endpoints."""
        high = low + width
        nodes = midpoint_nodes(low, high, count)
        h = width / count
        assert nodes.size == count
        assert_allclose(nodes[0] - low, h / 2, rtol=1e-9, atol=1e-12)
        assert_allclose(high - nodes[-1], h / 2, rtol=1e-9, atol=1e-12)
        if count > 1:
            assert_allclose(np.diff(nodes), h, rtol=1e-9, atol=1e-12)

    def test_rejects_zero_count(self):
        with pytest.raises(ValueError):
            midpoint_nodes(0.0, 1.0, 0)


class TestBoxNodes:
    def test_one_dimensional_box_keeps_column_shape(self):
        nodes = box_nodes(np.array([[0.0, 1.0]]), 4)
        assert nodes.shape == (4, 1)

    def test_two_dimensional_box_is_cartesian_product(self):
        nodes = box_nodes(np.array([[0.0, 1.0], [10.0, 12.0]]), 2)
        assert nodes.shape == (4, 2)
        assert_allclose(nodes, [[0.25, 10.5], [0.25, 11.5],
                                [0.75, 10.5], [0.75, 11.5]])


class TestParameterGrid:
    def test_mass_must_sum_to_one(self):
        with pytest.raises(ValueError, match="sums to"):
            ParameterGrid(np.zeros((2, 1)), np.zeros((1, 1)),
                          np.array([0.5, 0.4]), np.array([1.0]))

    def test_mass_must_be_nonnegative(self):
        with pytest.raises(ValueError, match="negative"):
            ParameterGrid(np.zeros((2, 1)), np.zeros((1, 1)),
                          np.array([1.5, -0.5]), np.array([1.0]))

    def test_node_and_mass_counts_must_agree(self):
        with pytest.raises(ValueError, match="nodes but"):
            ParameterGrid(np.zeros((3, 1)), np.zeros((1, 1)),
                          np.array([0.5, 0.5]), np.array([1.0]))

    def test_log_prior_handles_zero_mass(self):
        grid = ParameterGrid(np.zeros((2, 1)), np.zeros((1, 1)),
                             np.array([1.0, 0.0]), np.array([1.0]))
        lp = grid.log_theta_prior()
        assert lp[0] == 0.0
        assert lp[1] == -np.inf

    def test_nearest_theta_reports_index_and_distance(self):
        grid = ParameterGrid(np.array([[-1.0], [0.0], [2.0]]), np.zeros((1, 1)),
                             np.full(3, 1 / 3), np.array([1.0]))
        idx, dist = grid.nearest_theta(1.9)
        assert idx == 2
        assert_allclose(dist, 0.1, atol=1e-12)
        idx, dist = grid.nearest_theta(-1.0)
        assert idx == 0
        assert dist == 0.0


class TestBuildGrid:
    def test_quadrature_matches_normal_mass_ratios(self):
        """Renormalized midpoint quadrature preserves density ratios
        exactly, so node masses must match pdf ratios to float precision."""
        model = linear_model()
        grid = build_grid(model, lambda t: float(stats.norm.logpdf(t[0])),
                          lambda p: float(stats.norm.logpdf(p[0])),
                          theta_resolution=41, psi_resolution=11)
        assert grid.n_theta == 41
        assert grid.n_psi == 11
        assert_allclose(grid.theta_prior_mass.sum(), 1.0, rtol=0, atol=1e-12)
        pdf = stats.norm.pdf(grid.theta_nodes[:, 0])
        assert_allclose(grid.theta_prior_mass / grid.theta_prior_mass[20],
                        pdf / pdf[20], rtol=1e-10)

    def test_symmetric_prior_gives_symmetric_mass(self):
        model = linear_model()
        grid = build_grid(model, lambda t: -0.5 * t[0] ** 2,
                          lambda p: -abs(p[0]), theta_resolution=21,
                          psi_resolution=21)
        assert_allclose(grid.theta_prior_mass, grid.theta_prior_mass[::-1],
                        rtol=0, atol=1e-15)
        assert_allclose(grid.psi_prior_mass, grid.psi_prior_mass[::-1],
                        rtol=0, atol=1e-15)

    def test_vanishing_prior_raises(self):
        model = linear_model()
        with pytest.raises(ValueError, match="vanished"):
            build_grid(model, lambda t: -np.inf, lambda p: 0.0,
                       theta_resolution=5, psi_resolution=5)


class TestToyGrid:
    def test_defaults_are_uniform_index_grids(self):
        grid = toy_grid(3, 4)
        assert_allclose(grid.theta_nodes[:, 0], [0.0, 1.0, 2.0])
        assert_allclose(grid.theta_prior_mass, 1 / 3)
        assert_allclose(grid.psi_prior_mass, 0.25)

    def test_explicit_priors_pass_through(self):
        grid = toy_grid(2, 2, theta_prior=[0.3, 0.7], psi_prior=[0.9, 0.1])
        assert_allclose(grid.theta_prior_mass, [0.3, 0.7])
        assert_allclose(grid.psi_prior_mass, [0.9, 0.1])

    def test_explicit_prior_must_normalize(self):
        with pytest.raises(ValueError):
            toy_grid(2, 2, theta_prior=[0.3, 0.3])
