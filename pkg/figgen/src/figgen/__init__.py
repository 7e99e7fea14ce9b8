"""Figure generation for cellmotion simulation outputs."""

from .plots import plot_area, plot_fields, plot_mass, plot_trajectory, plot_velocity
from .readers import DataError, Snapshot, read_snapshot, read_timeseries

__all__ = [
    "DataError",
    "Snapshot",
    "plot_area",
    "plot_fields",
    "plot_mass",
    "plot_trajectory",
    "plot_velocity",
    "read_snapshot",
    "read_timeseries",
]
