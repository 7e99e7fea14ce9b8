"""On-disk formats: diagnostics CSV and plain-text field snapshots.

Floating-point values are written with %.17g so every double round-trips
bit-exactly.  Snapshots are restartable: they carry the grid header, the
node-sampled level set, and the two cell-centered concentration fields
with `nan` marking cells outside the region (an all-nan v section marks a
one-species run).
"""

from __future__ import annotations

import numpy as np

from .driver import Diagnostics, SimState
from .errors import DimensionMismatch, FormatError
from .grid import Grid
from .levelset import LevelSetField

CSV_HEADER = "t,U,V,mass,area,xc,yc,vx,vy"
_COLUMNS = ("t", "U", "V", "mass", "area", "xc", "yc", "vx", "vy")


def _fmt(x: float) -> str:
    return "%.17g" % x


def write_timeseries(diag: Diagnostics, path) -> None:
    arrays = diag.arrays()
    n = arrays["t"].size
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for k in range(n):
            fh.write(",".join(_fmt(arrays[c][k]) for c in _COLUMNS) + "\n")


def read_timeseries(path) -> dict:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise FormatError(f"unexpected CSV header {header!r}")
        cols = {c: [] for c in _COLUMNS}
        for line_no, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(_COLUMNS):
                raise FormatError(f"line {line_no}: expected {len(_COLUMNS)} fields")
            try:
                vals = [float(p) for p in parts]
            except ValueError:
                raise FormatError(f"line {line_no}: non-numeric field") from None
            for c, v in zip(_COLUMNS, vals):
                cols[c].append(v)
    return {c: np.asarray(v) for c, v in cols.items()}


def write_field_snapshot(state: SimState, path) -> None:
    grid = state.field.grid
    nx, ny = grid.nx, grid.ny
    with open(path, "w") as fh:
        fh.write(
            f"{nx} {ny} {_fmt(grid.h)} {_fmt(grid.origin[0])} {_fmt(grid.origin[1])} "
            f"{_fmt(state.t)} {_fmt(state.world_offset[0])} {_fmt(state.world_offset[1])}\n"
        )
        for i in range(nx):
            fh.write(" ".join(_fmt(v) for v in state.field.values[i]) + "\n")
        for i in range(nx - 1):
            fh.write(" ".join(_fmt(v) for v in state.u[i]) + "\n")
        v = state.v
        if v is None:
            v = np.full((nx - 1, ny - 1), np.nan)
        for i in range(nx - 1):
            fh.write(" ".join(_fmt(x) for x in v[i]) + "\n")


def read_field_snapshot(path, expected_grid: Grid | None = None) -> SimState:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FormatError("empty snapshot file")
    head = lines[0].split()
    if len(head) != 8:
        raise FormatError("snapshot header must have 8 fields")
    try:
        nx, ny = int(head[0]), int(head[1])
        h, ox, oy, t, wx, wy = (float(x) for x in head[2:])
    except ValueError:
        raise FormatError("malformed snapshot header") from None
    if nx < 2 or ny < 2 or h <= 0:
        raise FormatError("nonsensical snapshot header")

    expected_lines = 1 + nx + 2 * (nx - 1)
    if len(lines) < expected_lines:
        raise FormatError(
            f"truncated snapshot: {len(lines)} lines, expected {expected_lines}"
        )

    def block(start, rows, cols):
        out = np.empty((rows, cols))
        for r in range(rows):
            parts = lines[start + r].split()
            if len(parts) != cols:
                raise FormatError(f"line {start + r + 1}: expected {cols} values")
            out[r] = [float(p) for p in parts]
        return out

    phi = block(1, nx, ny)
    u = block(1 + nx, nx - 1, ny - 1)
    v = block(1 + nx + (nx - 1), nx - 1, ny - 1)

    grid = Grid(nx, ny, h, (ox, oy), -ox)
    if expected_grid is not None:
        if (nx, ny) != (expected_grid.nx, expected_grid.ny) or abs(h - expected_grid.h) > 1e-15:
            raise DimensionMismatch(
                f"snapshot grid {nx}x{ny} (h={h}) does not match expected "
                f"{expected_grid.nx}x{expected_grid.ny} (h={expected_grid.h})"
            )
    field = LevelSetField(grid, phi)
    v_out = None if np.isnan(v).all() else v
    return SimState(field, u, v_out, (wx, wy), t)
