"""Sharp-interface cell polarization and movement simulator.

A level-set method tracks the moving cell boundary (normal speed
u - u* - chi*curvature) while a cut-cell finite-volume scheme advances the
wave-pinning reaction-diffusion system for the active/inactive protein
pair on the moving region.
"""

from .config import SimulationConfig, parse_config, preset_runs, resolve
from .driver import RunResult, SimState, classify_trajectory, run
from .errors import CellMotionError
from .grid import Grid, CutCellGeometry, cut_cell_geometry, integrate_cell_region, region_area
from .kinetics import DimensionalParams, Params, StimulusConfig, nondimensionalize, reaction_f, stimulus
from .levelset import LevelSetField, LevelSetStepConfig, advance, circle_level_set, polar_level_set, redistance

__all__ = [
    "CellMotionError",
    "CutCellGeometry",
    "DimensionalParams",
    "Grid",
    "LevelSetField",
    "LevelSetStepConfig",
    "Params",
    "RunResult",
    "SimState",
    "SimulationConfig",
    "StimulusConfig",
    "advance",
    "circle_level_set",
    "classify_trajectory",
    "cut_cell_geometry",
    "integrate_cell_region",
    "nondimensionalize",
    "parse_config",
    "polar_level_set",
    "preset_runs",
    "reaction_f",
    "redistance",
    "region_area",
    "resolve",
    "run",
    "stimulus",
]

__version__ = "0.1.0"
