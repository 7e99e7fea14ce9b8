import numpy as np
import pytest

from cellmotion.grid import Grid, cut_cell_geometry
from cellmotion.levelset import circle_level_set


@pytest.fixture(scope="session")
def unit_disk():
    """Grid, level set and geometry for a unit disk at the origin, h=0.05."""
    grid = Grid.square(2.0, 0.05)
    field = circle_level_set(grid, (0.0, 0.0), 1.0)
    geom = cut_cell_geometry(field.values, grid)
    return grid, field, geom


def make_disk(radius=1.0, center=(0.0, 0.0), L=2.0, h=0.05):
    grid = Grid.square(L, h)
    field = circle_level_set(grid, center, radius)
    geom = cut_cell_geometry(field.values, grid)
    return grid, field, geom


def gradient_norm(values, h):
    gx = np.gradient(values, h, axis=0)
    gy = np.gradient(values, h, axis=1)
    return np.hypot(gx, gy)
