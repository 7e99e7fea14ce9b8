"""Readers for the simulator's on-disk formats.

These scripts consume the files only: a diagnostics CSV with header
t,U,V,mass,area,xc,yc,vx,vy and plain-text field snapshots whose header is
`nx ny h ox oy t world_offset_x world_offset_y` followed by the row-major
level-set node grid and the two cell-centered concentration grids (nan
marks cells outside the region).
"""

from dataclasses import dataclass

import numpy as np

CSV_COLUMNS = ("t", "U", "V", "mass", "area", "xc", "yc", "vx", "vy")


class DataError(Exception):
    pass


def read_timeseries(path):
    try:
        with open(path) as fh:
            header = fh.readline().strip()
            if header != ",".join(CSV_COLUMNS):
                raise DataError(f"{path}: unexpected header {header!r}")
            rows = []
            for line_no, line in enumerate(fh, start=2):
                line = line.strip()
                if not line:
                    continue
                parts = line.split(",")
                if len(parts) != len(CSV_COLUMNS):
                    raise DataError(f"{path}:{line_no}: expected {len(CSV_COLUMNS)} fields")
                try:
                    rows.append([float(p) for p in parts])
                except ValueError:
                    raise DataError(f"{path}:{line_no}: non-numeric field") from None
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    data = np.asarray(rows, dtype=float).reshape(-1, len(CSV_COLUMNS))
    return {c: data[:, k] for k, c in enumerate(CSV_COLUMNS)}


@dataclass
class Snapshot:
    nx: int
    ny: int
    h: float
    origin: tuple
    t: float
    world_offset: tuple
    phi: np.ndarray  # (nx, ny) node values
    u: np.ndarray    # (nx-1, ny-1) cell values, nan outside
    v: np.ndarray

    @property
    def node_x(self):
        return self.origin[0] + self.h * np.arange(self.nx)

    @property
    def node_y(self):
        return self.origin[1] + self.h * np.arange(self.ny)

    @property
    def cell_x(self):
        return self.origin[0] + self.h * (np.arange(self.nx - 1) + 0.5)

    @property
    def cell_y(self):
        return self.origin[1] + self.h * (np.arange(self.ny - 1) + 0.5)


def read_snapshot(path) -> Snapshot:
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    if not lines:
        raise DataError(f"{path}: empty snapshot")
    head = lines[0].split()
    if len(head) != 8:
        raise DataError(f"{path}: snapshot header must have 8 fields")
    try:
        nx, ny = int(head[0]), int(head[1])
        h, ox, oy, t, wx, wy = (float(x) for x in head[2:])
    except ValueError:
        raise DataError(f"{path}: malformed header") from None
    need = 1 + nx + 2 * (nx - 1)
    if len(lines) < need:
        raise DataError(f"{path}: truncated ({len(lines)} of {need} lines)")

    def block(start, rows, cols):
        out = np.empty((rows, cols))
        for r in range(rows):
            parts = lines[start + r].split()
            if len(parts) != cols:
                raise DataError(f"{path}:{start + r + 1}: expected {cols} values")
            out[r] = [float(p) for p in parts]
        return out

    phi = block(1, nx, ny)
    u = block(1 + nx, nx - 1, ny - 1)
    v = block(1 + nx + nx - 1, nx - 1, ny - 1)
    return Snapshot(nx, ny, h, (ox, oy), t, (wx, wy), phi, u, v)
