import numpy as np
import pytest

from fluxrecon.errors import ConfigurationError
from fluxrecon.geometry import (MIN_CELLS, DomainKind, DomainSpec, boundary_nodes,
                                build_grid, interval, make_grid, rectangle)


class TestDomainSpec:
    def test_factories(self):
        dom = interval(2.0)
        assert dom.kind is DomainKind.INTERVAL
        assert dom.lengths == (2.0,) and dom.dim == 1 and dom.volume == 2.0
        rect = rectangle(1.0, 3.0)
        assert rect.dim == 2 and rect.volume == 3.0

    def test_rejects_nonpositive_lengths(self):
        with pytest.raises(ConfigurationError):
            interval(0.0)
        with pytest.raises(ConfigurationError):
            rectangle(1.0, -2.0)

    def test_rejects_wrong_length_count(self):
        with pytest.raises(ConfigurationError):
            DomainSpec(DomainKind.INTERVAL, (1.0, 2.0))
        with pytest.raises(ConfigurationError):
            DomainSpec(DomainKind.RECTANGLE, (1.0,))


class TestGrids:
    def test_interval_layout(self):
        grid = make_grid(interval(1.0), 4)
        assert np.allclose(grid.axes[0], [0.0, 0.25, 0.5, 0.75, 1.0])
        assert grid.h == (0.25,) and grid.shape == (5,)
        assert grid.axes[0][grid.interior()[0]].tolist() == [0.25, 0.5, 0.75]

    def test_weights_integrate_linear_exactly(self):
        grid = make_grid(interval(2.0), 10)
        assert np.isclose(grid.integrate(grid.axes[0]), 2.0, rtol=0, atol=1e-14)

    def test_rectangle_layout(self):
        grid = make_grid(rectangle(1.0, 2.0), (4, 8))
        assert grid.shape == (5, 9)
        assert grid.h == (0.25, 0.25)
        X, Y = np.meshgrid(*grid.axes, indexing="ij")
        # bilinear fields integrate exactly under tensor trapezoid
        assert np.isclose(grid.integrate(X * Y), 0.5 * 2.0, rtol=0, atol=1e-13)

    def test_make_grid_minimum(self):
        with pytest.raises(ConfigurationError):
            make_grid(interval(), 1)
        with pytest.raises(ConfigurationError):
            make_grid(rectangle(), (4,))

    def test_build_grid_enforces_min_cells(self):
        with pytest.raises(ConfigurationError):
            build_grid(interval(), MIN_CELLS - 1)
        grid = build_grid(interval(), MIN_CELLS)
        assert grid.n == (MIN_CELLS,)


class TestBoundaryNodes:
    def test_interval_endpoints(self):
        nodes = boundary_nodes(interval(2.0))
        assert nodes.count == 2
        assert np.allclose(nodes.nodes, [[0.0], [2.0]])
        assert np.allclose(nodes.normals, [[-1.0], [1.0]])
        assert np.allclose(nodes.weights, [1.0, 1.0])
        assert nodes.side.tolist() == [0, 1]

    def test_interval_integrate_is_two_point_sum(self):
        nodes = boundary_nodes(interval())
        assert np.isclose(nodes.integrate(np.array([3.0, 4.0])), 7.0)

    def test_rectangle_midpoints(self):
        nodes = boundary_nodes(rectangle(1.0, 2.0), m=4)
        assert nodes.count == 16
        # side order x=0, x=lx, y=0, y=ly with cell-midpoint tangential coords
        first = nodes.nodes[nodes.side == 0]
        assert np.allclose(first[:, 0], 0.0)
        assert np.allclose(first[:, 1], [0.25, 0.75, 1.25, 1.75])
        # per-side weights sum to the side length
        for s, length in [(0, 2.0), (1, 2.0), (2, 1.0), (3, 1.0)]:
            assert np.isclose(np.sum(nodes.weights[nodes.side == s]), length)

    def test_rectangle_perimeter(self):
        nodes = boundary_nodes(rectangle(1.0, 2.0), m=8)
        assert np.isclose(nodes.integrate(np.ones(nodes.count)), 6.0)

    def test_rectangle_normals_outward(self):
        nodes = boundary_nodes(rectangle(), m=4)
        assert np.allclose(nodes.normals[nodes.side == 1], [1.0, 0.0])
        assert np.allclose(nodes.normals[nodes.side == 2], [0.0, -1.0])

    def test_rectangle_rejects_few_nodes(self):
        with pytest.raises(ConfigurationError):
            boundary_nodes(rectangle(), m=3)
