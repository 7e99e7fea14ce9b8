"""Interface sampling and constant-normal velocity extension.

The level-set step needs the active concentration u at every node of the
box.  Inside the cell region nodes take the bilinear interpolant of the
surrounding cell-center values (a node is equidistant from its four
neighboring centers, so this is their mean).  Values of u at the interface
crossings are obtained by local quadratic interpolation from nearby cell
centers and propagated outward, constant along normals, by Gauss-Seidel
fast sweeping of the upwind discretization of grad(u).grad(phi) = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ._polyfit import ls_fit_eval
from .errors import NoInteriorData
from .grid import CutCellGeometry, Grid, perturbed_nodes
from .levelset import LevelSetField

SWEEP_TOL = 1e-11
MAX_SWEEP_PASSES = 8
SAMPLE_WINDOW = 2  # cells on each side of the crossing


@dataclass
class ExtensionResult:
    values: np.ndarray  # node field over the whole box
    converged: bool
    passes: int


def _crossing_edges(phi_values: np.ndarray, h: float):
    """Edge-indexed crossing data: (orient, i, j, t) with orient 0 for
    horizontal edges (nodes (i,j)-(i+1,j)) and 1 for vertical ones.

    Ordering matches grid.interface_crossings.
    """
    phi = perturbed_nodes(phi_values, h)
    out = []
    a, b = phi[:-1, :], phi[1:, :]
    ii, jj = np.nonzero((a < 0) != (b < 0))
    t = a[ii, jj] / (a[ii, jj] - b[ii, jj])
    out.append((np.zeros(ii.size, dtype=np.int64), ii, jj, t))
    a, b = phi[:, :-1], phi[:, 1:]
    ii, jj = np.nonzero((a < 0) != (b < 0))
    t = a[ii, jj] / (a[ii, jj] - b[ii, jj])
    out.append((np.ones(ii.size, dtype=np.int64), ii, jj, t))
    orient = np.concatenate([o for o, _, _, _ in out])
    ei = np.concatenate([i for _, i, _, _ in out])
    ej = np.concatenate([j for _, _, j, _ in out])
    et = np.concatenate([t for _, _, _, t in out])
    return orient, ei, ej, et


@njit(cache=True)
def _sample_kernel(orient, ei, ej, et, alive, u, h, ox, oy, window):
    ncx, ncy = alive.shape
    n = orient.shape[0]
    vals = np.empty(n)
    status = np.zeros(n, dtype=np.int64)  # 0 ok, 1 no data
    max_pts = (2 * window + 1) * (2 * window + 1)
    px = np.empty(max_pts)
    py = np.empty(max_pts)
    pv = np.empty(max_pts)
    for k in range(n):
        if orient[k] == 0:
            x = ox + (ei[k] + et[k]) * h
            y = oy + ej[k] * h
        else:
            x = ox + ei[k] * h
            y = oy + (ej[k] + et[k]) * h
        # nearest cell center index
        ci = int(np.floor((x - ox) / h - 0.5 + 0.5))
        cj = int(np.floor((y - oy) / h - 0.5 + 0.5))
        if ci < 0:
            ci = 0
        elif ci > ncx - 1:
            ci = ncx - 1
        if cj < 0:
            cj = 0
        elif cj > ncy - 1:
            cj = ncy - 1
        cnt = 0
        for di in range(-window, window + 1):
            ii = ci + di
            if ii < 0 or ii >= ncx:
                continue
            for dj in range(-window, window + 1):
                jj = cj + dj
                if jj < 0 or jj >= ncy:
                    continue
                if alive[ii, jj]:
                    px[cnt] = ox + (ii + 0.5) * h
                    py[cnt] = oy + (jj + 0.5) * h
                    pv[cnt] = u[ii, jj]
                    cnt += 1
        if cnt == 0:
            status[k] = 1
            vals[k] = np.nan
        else:
            vals[k] = ls_fit_eval(px[:cnt], py[:cnt], pv[:cnt], x, y, h)
    return vals, status


def sample_on_interface(
    u: np.ndarray,
    geom: CutCellGeometry,
    field: LevelSetField,
    edges=None,
) -> tuple[np.ndarray, np.ndarray]:
    """Interpolate u to the interface crossing points.

    Returns (points, values); point order matches interface_crossings.
    """
    grid = field.grid
    orient, ei, ej, et = edges if edges is not None else _crossing_edges(field.values, grid.h)
    alive = geom.alive
    u_arr = np.where(alive, np.nan_to_num(u, nan=0.0), 0.0)
    vals, status = _sample_kernel(
        orient, ei, ej, et, alive, u_arr, grid.h,
        grid.origin[0], grid.origin[1], SAMPLE_WINDOW,
    )
    if (status == 1).any():
        k = int(np.argmax(status == 1))
        raise NoInteriorData(
            f"interface crossing #{k} has no interior cell value within "
            f"{SAMPLE_WINDOW} cells"
        )
    ox, oy = grid.origin
    h = grid.h
    x = np.where(orient == 0, ox + (ei + et) * h, ox + ei * h)
    y = np.where(orient == 0, oy + ej * h, oy + (ej + et) * h)
    return np.column_stack([x, y]), vals


def node_values_from_cells(u: np.ndarray, alive: np.ndarray, grid: Grid) -> np.ndarray:
    """Per-node mean of the available surrounding cell values (NaN where no
    surrounding cell carries data)."""
    ncx, ncy = alive.shape
    vals = np.zeros((grid.nx, grid.ny))
    cnts = np.zeros((grid.nx, grid.ny))
    w = np.where(alive, np.nan_to_num(u, nan=0.0), 0.0)
    c = alive.astype(np.float64)
    for di in (0, 1):
        for dj in (0, 1):
            vals[di:ncx + di, dj:ncy + dj] += w
            cnts[di:ncx + di, dj:ncy + dj] += c
    out = np.full((grid.nx, grid.ny), np.nan)
    has = cnts > 0
    out[has] = vals[has] / cnts[has]
    return out


@njit(cache=True)
def _seed_closest_point(orient, ei, ej, et, values, u, frozen, h):
    nx, ny = u.shape
    best = np.full((nx, ny), np.inf)
    seeded = np.zeros((nx, ny), dtype=np.bool_)
    for k in range(orient.shape[0]):
        i = ei[k]
        j = ej[k]
        t = et[k]
        for c in range(2):
            if c == 0:
                ni, nj, dist = i, j, t * h
            elif orient[k] == 0:
                ni, nj, dist = i + 1, j, (1.0 - t) * h
            else:
                ni, nj, dist = i, j + 1, (1.0 - t) * h
            if frozen[ni, nj]:
                continue
            if dist < best[ni, nj]:
                best[ni, nj] = dist
                u[ni, nj] = values[k]
                seeded[ni, nj] = True
    return seeded


@njit(cache=True)
def _fast_sweep(u, frozen, gx, gy, phi, tol, max_passes):
    nx, ny = u.shape
    passes = 0
    for _ in range(max_passes):
        passes += 1
        max_upd = 0.0
        for ordering in range(4):
            if ordering == 0:
                i0, i1, istep = 0, nx, 1
                j0, j1, jstep = 0, ny, 1
            elif ordering == 1:
                i0, i1, istep = nx - 1, -1, -1
                j0, j1, jstep = 0, ny, 1
            elif ordering == 2:
                i0, i1, istep = 0, nx, 1
                j0, j1, jstep = ny - 1, -1, -1
            else:
                i0, i1, istep = nx - 1, -1, -1
                j0, j1, jstep = ny - 1, -1, -1
            for i in range(i0, i1, istep):
                for j in range(j0, j1, jstep):
                    if frozen[i, j]:
                        continue
                    wx = abs(gx[i, j])
                    ii = i - 1 if gx[i, j] > 0.0 else i + 1
                    if ii < 0 or ii >= nx:
                        wx = 0.0
                        ii = i
                    wy = abs(gy[i, j])
                    jj = j - 1 if gy[i, j] > 0.0 else j + 1
                    if jj < 0 or jj >= ny:
                        wy = 0.0
                        jj = j
                    if wx + wy > 1e-14:
                        unew = (wx * u[ii, j] + wy * u[i, jj]) / (wx + wy)
                    else:
                        # degenerate gradient: copy the neighbor nearest to
                        # the interface
                        best = np.inf
                        unew = u[i, j]
                        if i > 0 and abs(phi[i - 1, j]) < best:
                            best = abs(phi[i - 1, j])
                            unew = u[i - 1, j]
                        if i < nx - 1 and abs(phi[i + 1, j]) < best:
                            best = abs(phi[i + 1, j])
                            unew = u[i + 1, j]
                        if j > 0 and abs(phi[i, j - 1]) < best:
                            best = abs(phi[i, j - 1])
                            unew = u[i, j - 1]
                        if j < ny - 1 and abs(phi[i, j + 1]) < best:
                            best = abs(phi[i, j + 1])
                            unew = u[i, j + 1]
                    upd = abs(unew - u[i, j])
                    if upd > max_upd:
                        max_upd = upd
                    u[i, j] = unew
        if max_upd < tol:
            return passes, True
    return passes, False


def extend_constant_normal(
    crossing_values: np.ndarray,
    field: LevelSetField,
    interior_node_values: np.ndarray | None = None,
    initial: np.ndarray | None = None,
    tol: float = SWEEP_TOL,
    max_passes: int = MAX_SWEEP_PASSES,
    edges=None,
) -> ExtensionResult:
    """Extend interface values to the whole box, constant along normals.

    ``crossing_values`` must align with the crossings of ``field``.  Nodes
    with finite entries in ``interior_node_values`` are kept as-is; outside
    nodes adjacent to the interface are seeded by closest-point assignment
    and everything else is filled by fast sweeping.
    """
    grid = field.grid
    # the zero-node nudge keeps sign classes consistent with the geometry
    # (a node exactly on the interface counts as outside)
    phi = perturbed_nodes(field.values, grid.h)
    h = grid.h
    nx, ny = grid.nx, grid.ny

    orient, ei, ej, et = edges if edges is not None else _crossing_edges(phi, h)
    if orient.shape[0] != crossing_values.shape[0]:
        raise ValueError("crossing values do not match the interface")

    u = np.zeros((nx, ny))
    frozen = np.zeros((nx, ny), dtype=bool)
    if interior_node_values is not None:
        keep = np.isfinite(interior_node_values) & (phi < 0)
        u[keep] = interior_node_values[keep]
        frozen |= keep

    # closest-point seeding of interface-adjacent nodes lacking data
    seeded = _seed_closest_point(orient, ei, ej, et, crossing_values, u, frozen, h)
    frozen |= seeded

    if initial is not None:
        free = ~frozen
        u[free] = initial[free]
    elif crossing_values.size:
        u[~frozen] = float(np.mean(crossing_values))

    gx = np.gradient(phi, h, axis=0)
    gy = np.gradient(phi, h, axis=1)
    passes, converged = _fast_sweep(u, frozen, gx, gy, phi, tol, max_passes)
    return ExtensionResult(u, converged, passes)


def extend_velocity(u: np.ndarray, geom: CutCellGeometry, field: LevelSetField) -> ExtensionResult:
    """Full pipeline: sample u on the interface, keep interior node values,
    and sweep the sampled values outward."""
    edges = _crossing_edges(field.values, field.grid.h)
    _, vals = sample_on_interface(u, geom, field, edges=edges)
    interior = node_values_from_cells(u, geom.alive, field.grid)
    return extend_constant_normal(vals, field, interior_node_values=interior, edges=edges)
