import numpy as np
import pytest

from cellmotion.errors import NoInteriorData
from cellmotion.extension import (
    extend_constant_normal,
    extend_velocity,
    node_values_from_cells,
    sample_on_interface,
)
from cellmotion.grid import Grid, cut_cell_geometry
from cellmotion.levelset import LevelSetField, circle_level_set

H = 0.05


@pytest.fixture(scope="module")
def disk():
    grid = Grid.square(2.0, H)
    field = circle_level_set(grid, (0.0, 0.0), 1.0)
    geom = cut_cell_geometry(field.values, grid)
    return grid, field, geom


class TestSampling:
    def test_constant_reproduced(self, disk):
        grid, field, geom = disk
        u = np.where(geom.alive, 5.0, np.nan)
        _, vals = sample_on_interface(u, geom, field)
        assert np.abs(vals - 5.0).max() < 1e-10

    def test_linear_reproduced(self, disk):
        grid, field, geom = disk
        X, _ = grid.cell_mesh()
        u = np.where(geom.alive, X, np.nan)
        pts, vals = sample_on_interface(u, geom, field)
        assert np.abs(vals - pts[:, 0]).max() < 10 * H**2

    def test_isolated_cell_nearest_fallback(self):
        grid = Grid(9, 9, 0.25, (-1.0, -1.0), 1.0)
        # one interior node negative: a 2x2 block of cut cells around it,
        # but only give u on a single cell
        phi = np.ones((9, 9))
        phi[4, 4] = -0.25
        field = LevelSetField(grid, phi)
        geom = cut_cell_geometry(phi, grid)
        u = np.full(grid.cell_shape, np.nan)
        alive = geom.alive.copy()
        keep = np.zeros_like(alive)
        ii, jj = np.nonzero(alive)
        keep[ii[0], jj[0]] = True
        # mask the others out of the geometry view used for sampling
        geom.area = np.where(keep, geom.area, 0.0)
        u[keep] = 7.5
        _, vals = sample_on_interface(u, geom, field)
        assert np.abs(vals - 7.5).max() == 0.0

    def test_no_interior_data_raises(self, disk):
        grid, field, geom = disk
        import copy

        empty = copy.copy(geom)
        empty.area = np.zeros_like(geom.area)
        u = np.full(grid.cell_shape, np.nan)
        with pytest.raises(NoInteriorData):
            sample_on_interface(u, empty, field)


class TestExtension:
    def test_constant_everywhere(self, disk):
        grid, field, geom = disk
        u = np.where(geom.alive, 3.25, np.nan)
        ext = extend_velocity(u, geom, field)
        assert ext.converged
        assert np.abs(ext.values - 3.25).max() < 1e-9

    def test_radial_constancy_for_angular_data(self, disk):
        # boundary value g(theta) = cos(theta) extends along rays
        grid, field, geom = disk
        X, Y = grid.cell_mesh()
        u = np.where(geom.alive, X, np.nan)  # on the unit circle u = cos(theta)
        ext = extend_velocity(u, geom, field)
        Xn, Yn = grid.node_mesh()
        r = np.hypot(Xn, Yn)
        sel = (r > 1.15) & (r < 1.9)
        expect = Xn / np.maximum(r, 1e-12)
        assert np.abs(ext.values - expect)[sel].max() < 0.6 * H

    def test_directional_derivative_bound(self, disk):
        grid, field, geom = disk
        X, _ = grid.cell_mesh()
        u = np.where(geom.alive, X, np.nan)
        ext = extend_velocity(u, geom, field)
        gx = np.gradient(ext.values, H, axis=0)
        gy = np.gradient(ext.values, H, axis=1)
        px = np.gradient(field.values, H, axis=0)
        py = np.gradient(field.values, H, axis=1)
        norm = np.maximum(np.hypot(px, py), 1e-12)
        band = (np.abs(field.values) > 2 * H) & (np.abs(field.values) < 10 * H) & (
            field.values > 0
        )
        directional = np.abs((px * gx + py * gy) / norm)[band]
        assert directional.max() < 0.1 * np.nanmax(np.abs(u))

    def test_no_new_extrema(self, disk):
        grid, field, geom = disk
        rng = np.random.default_rng(11)
        u = np.where(geom.alive, rng.uniform(0.2, 0.9, grid.cell_shape), np.nan)
        pts, vals = sample_on_interface(u, geom, field)
        ext = extend_velocity(u, geom, field)
        outside = field.values > 0
        assert ext.values[outside].min() >= vals.min() - 1e-12
        assert ext.values[outside].max() <= vals.max() + 1e-12

    def test_idempotence(self, disk):
        grid, field, geom = disk
        X, Y = grid.cell_mesh()
        u = np.where(geom.alive, 0.5 + 0.3 * np.sin(2 * np.arctan2(Y, X)), np.nan)
        ext = extend_velocity(u, geom, field)
        _, vals = sample_on_interface(u, geom, field)
        interior = np.where(field.values < 0, ext.values, np.nan)
        again = extend_constant_normal(
            vals, field, interior_node_values=interior, initial=ext.values
        )
        assert np.abs(again.values - ext.values).max() < 1e-6

    def test_mirror_symmetry(self, disk):
        grid, field, geom = disk
        X, Y = grid.cell_mesh()
        u = np.where(geom.alive, 0.4 + 0.2 * Y + 0.1 * X**2, np.nan)  # even in x
        ext = extend_velocity(u, geom, field)
        assert np.abs(ext.values - ext.values[::-1, :]).max() < 1e-7


class TestNodeInterpolation:
    def test_interior_mean_of_four(self, disk):
        grid, field, geom = disk
        u = np.where(geom.alive, 2.0, np.nan)
        nodes = node_values_from_cells(u, geom.alive, grid)
        inside = field.values < -2 * H
        assert np.allclose(nodes[inside], 2.0)

    def test_nodes_without_data_are_nan(self):
        grid = Grid(9, 9, 0.25, (-1.0, -1.0), 1.0)
        alive = np.zeros(grid.cell_shape, dtype=bool)
        u = np.full(grid.cell_shape, np.nan)
        nodes = node_values_from_cells(u, alive, grid)
        assert np.isnan(nodes).all()
