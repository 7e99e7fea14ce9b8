"""Cut-cell finite-volume reaction-diffusion stepping on the cell region.

The semi-implicit update integrates the diffusion flux over each partial
cell by the divergence theorem: zero-flux interface conditions are natural
because cut edges simply contribute their shortened lengths and the
interface segment contributes nothing.  Reactions (and the stimulus) are
explicit; each species then requires one SPD solve per step:

    (area/dt) u' - D * sum_edges (L/h)(u'_nbr - u') = (area/dt) u + area*(f + S v)

When the region grows, cells newly covered receive second-order
least-squares extrapolations of the old field before stepping, and the
inactive species is shifted uniformly so the discrete total mass stays at
its target.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ._polyfit import ls_fit_eval
from .errors import DisconnectedCell, EmptyRegion, IsolatedNewCell, SolverDiverged
from .grid import CutCellGeometry, integrate_cell_region
from .kinetics import Params, reaction_f
from .solvers import ICPreconditioner, SparseMatrix, solve_spd

EXTRAP_WINDOW = 2  # 5x5 neighborhood
# concentrations below this are flushed to zero after each solve; decayed
# regions otherwise drift into denormal range and degrade the Krylov
# recurrences
TINY_CONC = 1e-200


@dataclass
class ConcentrationState:
    """Cell-centered concentrations on the positive-area cells (NaN
    elsewhere); v is None in the one-species model."""

    u: np.ndarray
    v: np.ndarray | None
    mass_target: float

    def copy(self) -> "ConcentrationState":
        return ConcentrationState(
            self.u.copy(), None if self.v is None else self.v.copy(), self.mass_target
        )


@njit(cache=True)
def _extrapolate_kernel(values, old_alive, new_i, new_j, h, window):
    ncx, ncy = old_alive.shape
    n = new_i.shape[0]
    out = np.empty(n)
    status = np.zeros(n, dtype=np.int64)
    max_pts = (2 * window + 1) * (2 * window + 1)
    px = np.empty(max_pts)
    py = np.empty(max_pts)
    pv = np.empty(max_pts)
    for k in range(n):
        ci = new_i[k]
        cj = new_j[k]
        xq = (ci + 0.5) * h
        yq = (cj + 0.5) * h
        cnt = 0
        for di in range(-window, window + 1):
            ii = ci + di
            if ii < 0 or ii >= ncx:
                continue
            for dj in range(-window, window + 1):
                jj = cj + dj
                if jj < 0 or jj >= ncy:
                    continue
                if old_alive[ii, jj]:
                    px[cnt] = (ii + 0.5) * h
                    py[cnt] = (jj + 0.5) * h
                    pv[cnt] = values[ii, jj]
                    cnt += 1
        if cnt == 0:
            status[k] = 1
            out[k] = np.nan
        else:
            out[k] = ls_fit_eval(px[:cnt], py[:cnt], pv[:cnt], xq, yq, h)
    return out, status


def extend_to_new_region(
    state: ConcentrationState,
    geom_old: CutCellGeometry,
    geom_new: CutCellGeometry,
) -> ConcentrationState:
    """Carry the fields over to the new region: surviving cells keep their
    values, newly covered cells are extrapolated, vanished cells drop."""
    old_alive = geom_old.alive
    new_alive = geom_new.alive
    h = geom_new.grid.h
    fresh = new_alive & ~old_alive
    ni, nj = np.nonzero(fresh)

    def carry(vals):
        out = np.where(new_alive, vals, np.nan)
        if ni.size:
            ext, status = _extrapolate_kernel(
                np.nan_to_num(vals, nan=0.0),
                old_alive,
                ni.astype(np.int64),
                nj.astype(np.int64),
                h,
                EXTRAP_WINDOW,
            )
            if (status == 1).any():
                k = int(np.argmax(status == 1))
                raise IsolatedNewCell(
                    f"new cell ({ni[k]}, {nj[k]}) has no previously valid "
                    f"neighbor within {EXTRAP_WINDOW} cells"
                )
            out[ni, nj] = ext
        return out

    u = carry(state.u)
    v = None if state.v is None else carry(state.v)
    return ConcentrationState(u, v, state.mass_target)


def mass_correct(state: ConcentrationState, geom: CutCellGeometry) -> ConcentrationState:
    """Uniform additive shift to v so the discrete mass matches its target."""
    if state.v is None:
        raise ValueError("mass correction applies to the two-species state")
    area = float(np.sum(geom.area))
    if area <= 0.0:
        raise EmptyRegion("cannot correct mass on an empty region")
    current = integrate_cell_region(np.nan_to_num(state.u, nan=0.0), geom) + \
        integrate_cell_region(np.nan_to_num(state.v, nan=0.0), geom)
    shift = (state.mass_target - current) / area
    v = np.where(geom.alive, state.v + shift, np.nan)
    return ConcentrationState(state.u, v, state.mass_target)


@dataclass
class DiffusionSystem:
    """Assembled SPD system for one species on one geometry."""

    matrix: SparseMatrix
    precond: ICPreconditioner
    cell_ids: tuple[np.ndarray, np.ndarray]  # (i, j) of each unknown
    area_over_dt: np.ndarray


@njit(cache=True)
def _assemble_csr(alive, area, edge_v, edge_h, index, ai, aj, D, dt, h):
    """Direct CSR assembly, one row per positive-area cell, columns sorted
    (compressed ids follow lexicographic cell order, so the neighbor order
    (i-1,j), (i,j-1), diag, (i,j+1), (i+1,j) is already sorted)."""
    ncx, ncy = alive.shape
    n = ai.shape[0]
    indptr = np.empty(n + 1, dtype=np.int64)
    indices = np.empty(5 * n, dtype=np.int64)
    data = np.empty(5 * n)
    pos = 0
    for k in range(n):
        indptr[k] = pos
        i = ai[k]
        j = aj[k]
        l_left = 0.0
        if i > 0 and alive[i - 1, j]:
            l_left = edge_v[i, j]
        l_right = 0.0
        if i < ncx - 1 and alive[i + 1, j]:
            l_right = edge_v[i + 1, j]
        l_down = 0.0
        if j > 0 and alive[i, j - 1]:
            l_down = edge_h[i, j]
        l_up = 0.0
        if j < ncy - 1 and alive[i, j + 1]:
            l_up = edge_h[i, j + 1]
        scale = D / h
        if l_left > 0.0:
            indices[pos] = index[i - 1, j]
            data[pos] = -scale * l_left
            pos += 1
        if l_down > 0.0:
            indices[pos] = index[i, j - 1]
            data[pos] = -scale * l_down
            pos += 1
        indices[pos] = k
        data[pos] = area[i, j] / dt + scale * (l_left + l_right + l_down + l_up)
        pos += 1
        if l_up > 0.0:
            indices[pos] = index[i, j + 1]
            data[pos] = -scale * l_up
            pos += 1
        if l_right > 0.0:
            indices[pos] = index[i + 1, j]
            data[pos] = -scale * l_right
            pos += 1
    indptr[n] = pos
    return indptr, indices[:pos], data[:pos]


@njit(cache=True)
def _connected_from_csr(indptr, indices):
    """True when the off-diagonal adjacency graph is a single component."""
    n = indptr.shape[0] - 1
    if n <= 1:
        return True
    seen = np.zeros(n, dtype=np.bool_)
    stack = np.empty(n, dtype=np.int64)
    top = 0
    stack[top] = 0
    top += 1
    seen[0] = True
    count = 1
    while top > 0:
        top -= 1
        i = stack[top]
        for k in range(indptr[i], indptr[i + 1]):
            j = indices[k]
            if j != i and not seen[j]:
                seen[j] = True
                stack[top] = j
                top += 1
                count += 1
    return count == n


def assemble_diffusion_system(
    geom: CutCellGeometry, D: float, dt: float, check_connected: bool = True
) -> DiffusionSystem:
    """Row for cell (i,j):  area/dt + D*sum(L/h) on the diagonal and
    -D*L/h toward each neighbor sharing a positive-length edge."""
    alive = geom.alive
    area = geom.area
    h = geom.grid.h
    ncx, ncy = alive.shape

    index = np.full((ncx, ncy), -1, dtype=np.int64)
    ai, aj = np.nonzero(alive)
    n = ai.size
    index[ai, aj] = np.arange(n)

    indptr, indices, data = _assemble_csr(
        alive, area, geom.edge_v, geom.edge_h, index,
        ai.astype(np.int64), aj.astype(np.int64), float(D), float(dt), float(h),
    )
    A = SparseMatrix.from_csr_arrays(indptr, indices, data, check_symmetry=True)
    if not A.symmetric:
        raise AssertionError("assembled diffusion matrix must be symmetric")

    if check_connected and not _connected_from_csr(indptr, indices):
        raise DisconnectedCell("positive-area cells form disconnected components")

    return DiffusionSystem(A, ICPreconditioner(A), (ai, aj), area[ai, aj] / dt)


def _solve_species(system: DiffusionSystem, rhs, x0, tol, label):
    res = solve_spd(system.matrix, rhs, tol=tol, x0=x0, precond=system.precond)
    if not res.converged:
        raise SolverDiverged(
            f"{label} diffusion solve stalled at residual {res.residual:.3e} "
            f"after {res.iterations} iterations",
            iterations=res.iterations,
            residual=res.residual,
        )
    res.x[np.abs(res.x) < TINY_CONC] = 0.0
    return res


def step_two_species(
    state: ConcentrationState,
    geom: CutCellGeometry,
    params: Params,
    dt: float,
    stimulus_values: np.ndarray | None = None,
    tol: float = 1e-12,
    systems: tuple[DiffusionSystem, DiffusionSystem] | None = None,
):
    """Advance (u, v) one step on a fixed geometry.

    ``stimulus_values`` is S(x, y, t) at cell centers (explicit, like the
    reaction).  Returns the new state and the two solver iteration counts.
    """
    if state.v is None:
        raise ValueError("two-species step needs a v field")
    if systems is None:
        sys_u = assemble_diffusion_system(geom, params.D_u, dt)
        sys_v = assemble_diffusion_system(geom, params.D_v, dt, check_connected=False)
    else:
        sys_u, sys_v = systems
    ai, aj = sys_u.cell_ids
    u0 = state.u[ai, aj]
    v0 = state.v[ai, aj]
    area = geom.area[ai, aj]

    f = reaction_f(u0, v0, params.K, params.C)
    s = np.zeros_like(u0) if stimulus_values is None else stimulus_values[ai, aj]
    rhs_u = area * (u0 / dt + f + s * v0)
    rhs_v = area * (v0 / dt - f - s * v0)

    res_u = _solve_species(sys_u, rhs_u, u0, tol, "active species")
    res_v = _solve_species(sys_v, rhs_v, v0, tol, "inactive species")

    u = np.full_like(state.u, np.nan)
    v = np.full_like(state.v, np.nan)
    u[ai, aj] = res_u.x
    v[ai, aj] = res_v.x
    new_state = ConcentrationState(u, v, state.mass_target)
    return new_state, (res_u.iterations, res_v.iterations)


def mean_inactive(u: np.ndarray, geom: CutCellGeometry, mass_target: float) -> float:
    """Closure of the one-species model: the well-mixed inactive
    concentration implied by mass conservation."""
    area = float(np.sum(geom.area))
    if area <= 0.0:
        raise EmptyRegion("cannot form the mean inactive concentration")
    return (mass_target - integrate_cell_region(np.nan_to_num(u, nan=0.0), geom)) / area


def step_one_species(
    state: ConcentrationState,
    geom: CutCellGeometry,
    params: Params,
    dt: float,
    tol: float = 1e-12,
    system: DiffusionSystem | None = None,
):
    """Advance u with the well-mixed closure; returns (state, v_bar, iters)."""
    if system is None:
        system = assemble_diffusion_system(geom, params.D_u, dt)
    ai, aj = system.cell_ids
    u0 = state.u[ai, aj]
    area = geom.area[ai, aj]
    v_bar = mean_inactive(state.u, geom, state.mass_target)

    f = reaction_f(u0, v_bar, params.K, params.C)
    rhs = area * (u0 / dt + f)
    res = _solve_species(system, rhs, u0, tol, "one-species")

    u = np.full_like(state.u, np.nan)
    u[ai, aj] = res.x
    return ConcentrationState(u, None, state.mass_target), v_bar, res.iterations
