"""Level-set storage and evolution for the moving cell boundary.

The boundary moves with outward normal speed V = (u - u*) - chi*kappa.
Writing the curvature term as Delta(phi) - N(phi) lets the update treat
the stiff Laplacian implicitly while keeping the advective part and the
nonlinear N explicit:

    (phi' - phi)/dt = -(u - u*)|grad phi| + chi*Lap(phi') - chi*N_eps(phi)

|grad phi| uses fifth-order WENO one-sided differences combined by
Godunov upwinding on the sign of the normal speed; Lap and N_eps use
second-order central differences.  The box boundary carries homogeneous
Neumann conditions via second-order mirrored ghosts, which is what makes
the implicit matrix nonsymmetric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ShapeOutsideBox, SolverDiverged
from .grid import Grid, interface_crossings
from .solvers import ILUPreconditioner, SparseMatrix, SolveResult, solve_nonsymmetric

DEFAULT_EPS_CURV = 1e-6
REDISTANCE_ITERS = 10


@dataclass
class LevelSetField:
    """Node-sampled level-set values; negative inside the cell region."""

    grid: Grid
    values: np.ndarray
    negative_inside: bool = True

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.grid.nx, self.grid.ny):
            raise ValueError("level-set array does not match the grid")

    def copy(self) -> "LevelSetField":
        return LevelSetField(self.grid, self.values.copy(), self.negative_inside)

    def crossings(self) -> np.ndarray:
        return interface_crossings(self.values, self.grid)


@dataclass(frozen=True)
class LevelSetStepConfig:
    chi: float
    u_star: float
    dt: float
    eps_curv: float = DEFAULT_EPS_CURV
    tol: float = 1e-10
    max_iter: int | None = None

    def __post_init__(self):
        if self.chi < 0 or self.eps_curv <= 0 or self.dt <= 0:
            raise ValueError("need chi >= 0, eps_curv > 0, dt > 0")


def _mirror_pad(a: np.ndarray, width: int, axis: int) -> np.ndarray:
    """Even reflection about the boundary nodes (ghost k mirrors node k)."""
    return np.pad(a, [(width, width) if ax == axis else (0, 0) for ax in range(a.ndim)],
                  mode="reflect")


@njit(cache=True, inline="always")
def _weno5_scalar(v1, v2, v3, v4, v5):
    s1 = 13.0 / 12.0 * (v1 - 2 * v2 + v3) ** 2 + 0.25 * (v1 - 4 * v2 + 3 * v3) ** 2
    s2 = 13.0 / 12.0 * (v2 - 2 * v3 + v4) ** 2 + 0.25 * (v2 - v4) ** 2
    s3 = 13.0 / 12.0 * (v3 - 2 * v4 + v5) ** 2 + 0.25 * (3 * v3 - 4 * v4 + v5) ** 2
    # scale-invariant regularization (Jiang & Peng)
    m = v1 * v1
    for v in (v2, v3, v4, v5):
        if v * v > m:
            m = v * v
    eps = 1e-6 * m + 1e-99
    a1 = 0.1 / (eps + s1) ** 2
    a2 = 0.6 / (eps + s2) ** 2
    a3 = 0.3 / (eps + s3) ** 2
    p1 = v1 / 3.0 - 7.0 * v2 / 6.0 + 11.0 * v3 / 6.0
    p2 = -v2 / 6.0 + 5.0 * v3 / 6.0 + v4 / 3.0
    p3 = v3 / 3.0 + 5.0 * v4 / 6.0 - v5 / 6.0
    return (a1 * p1 + a2 * p2 + a3 * p3) / (a1 + a2 + a3)


@njit(cache=True, inline="always")
def _weno_pair_1d(w0, w1, w2, w3, w4, w5, w6, i, n, h):
    """One-sided derivative pair at position i of a line whose stencil
    values w0..w6 are phi[i-3..i+3] (mirrored fetches already applied).

    Within three nodes of the line ends the stencils degrade to one-sided
    second/first-order differences.
    """
    if i == 0:
        dm = (w4 - w3) / h
    elif i == 1:
        dm = (w3 - w2) / h
    elif i == 2:
        dm = (3 * w3 - 4 * w2 + w1) / (2 * h)
    elif i >= n - 2:
        dm = (3 * w3 - 4 * w2 + w1) / (2 * h)
    else:
        dm = _weno5_scalar(
            (w1 - w0) / h, (w2 - w1) / h, (w3 - w2) / h, (w4 - w3) / h, (w5 - w4) / h
        )
    if i == n - 1:
        dp = (w3 - w2) / h
    elif i == n - 2:
        dp = (w4 - w3) / h
    elif i == n - 3 or i <= 1:
        dp = (-3 * w3 + 4 * w4 - w5) / (2 * h)
    else:
        dp = _weno5_scalar(
            (w6 - w5) / h, (w5 - w4) / h, (w4 - w3) / h, (w3 - w2) / h, (w2 - w1) / h
        )
    return dm, dp


@njit(cache=True, inline="always")
def _mirror_idx(i, n):
    if i < 0:
        return -i
    if i >= n:
        return 2 * (n - 1) - i
    return i


@njit(cache=True)
def _godunov_kernel(phi, h, speed):
    nx, ny = phi.shape
    out = np.empty((nx, ny))
    for i in range(nx):
        im3 = _mirror_idx(i - 3, nx)
        im2 = _mirror_idx(i - 2, nx)
        im1 = _mirror_idx(i - 1, nx)
        ip1 = _mirror_idx(i + 1, nx)
        ip2 = _mirror_idx(i + 2, nx)
        ip3 = _mirror_idx(i + 3, nx)
        for j in range(ny):
            dmx, dpx = _weno_pair_1d(
                phi[im3, j], phi[im2, j], phi[im1, j], phi[i, j],
                phi[ip1, j], phi[ip2, j], phi[ip3, j], i, nx, h,
            )
            jm3 = _mirror_idx(j - 3, ny)
            jm2 = _mirror_idx(j - 2, ny)
            jm1 = _mirror_idx(j - 1, ny)
            jp1 = _mirror_idx(j + 1, ny)
            jp2 = _mirror_idx(j + 2, ny)
            jp3 = _mirror_idx(j + 3, ny)
            dmy, dpy = _weno_pair_1d(
                phi[i, jm3], phi[i, jm2], phi[i, jm1], phi[i, j],
                phi[i, jp1], phi[i, jp2], phi[i, jp3], j, ny, h,
            )
            if speed[i, j] >= 0.0:
                ax = max(dmx, 0.0)
                bx = min(dpx, 0.0)
                ay = max(dmy, 0.0)
                by = min(dpy, 0.0)
            else:
                ax = min(dmx, 0.0)
                bx = max(dpx, 0.0)
                ay = min(dmy, 0.0)
                by = max(dpy, 0.0)
            gx = max(ax * ax, bx * bx)
            gy = max(ay * ay, by * by)
            out[i, j] = np.sqrt(gx + gy)
    return out


def godunov_gradnorm(values: np.ndarray, h: float, normal_speed) -> np.ndarray:
    """Godunov-upwinded |grad phi| for motion with the given outward normal
    speed (positive speed expands the region phi < 0): fifth-order WENO
    one-sided differences, per-axis max-of-squares upwinding."""
    speed = np.broadcast_to(
        np.asarray(normal_speed, dtype=np.float64), values.shape
    )
    return _godunov_kernel(
        np.ascontiguousarray(values), float(h), np.ascontiguousarray(speed)
    )


def central_derivatives(values: np.ndarray, h: float):
    """Second-order phi_x, phi_y, phi_xx, phi_yy, phi_xy with mirrored ghosts."""
    p = _mirror_pad(values, 1, 0)
    p = _mirror_pad(p, 1, 1)
    c = p[1:-1, 1:-1]
    px = (p[2:, 1:-1] - p[:-2, 1:-1]) / (2 * h)
    py = (p[1:-1, 2:] - p[1:-1, :-2]) / (2 * h)
    pxx = (p[2:, 1:-1] - 2 * c + p[:-2, 1:-1]) / h**2
    pyy = (p[1:-1, 2:] - 2 * c + p[1:-1, :-2]) / h**2
    pxy = (p[2:, 2:] + p[:-2, :-2] - p[2:, :-2] - p[:-2, 2:]) / (4 * h**2)
    return px, py, pxx, pyy, pxy


def curvature_split(values: np.ndarray, h: float, eps_curv: float = DEFAULT_EPS_CURV):
    """Return (Lap(phi), N_eps(phi)) so that kappa*|grad phi| = Lap - N.

    N_eps = (px^2 pxx + 2 px py pxy + py^2 pyy)/(px^2 + py^2 + eps).
    """
    px, py, pxx, pyy, pxy = central_derivatives(values, h)
    lap = pxx + pyy
    num = px**2 * pxx + 2.0 * px * py * pxy + py**2 * pyy
    n_eps = num / (px**2 + py**2 + eps_curv)
    return lap, n_eps


# ---------------------------------------------------------------------------
# semi-implicit step

_matrix_cache: dict = {}


def _implicit_matrix(grid: Grid, coef: float):
    """(I - coef * Lap_h) with mirrored-ghost Neumann rows; cached with its
    ILU(0) factors."""
    key = (grid.nx, grid.ny, float(grid.h), float(coef))
    hit = _matrix_cache.get(key)
    if hit is not None:
        return hit
    nx, ny = grid.nx, grid.ny
    inv_h2 = 1.0 / grid.h**2
    n = nx * ny
    rows, cols, vals = [], [], []

    idx = np.arange(n).reshape(nx, ny)
    diag = np.full((nx, ny), 1.0 + 4.0 * coef * inv_h2)
    rows.append(idx.ravel())
    cols.append(idx.ravel())
    vals.append(diag.ravel())

    def add(src, dst, c):
        rows.append(idx[src].ravel())
        cols.append(idx[dst].ravel())
        vals.append(np.full(idx[src].size, -coef * c * inv_h2))

    # x direction: interior rows get both neighbors, edge rows a doubled one
    add((slice(1, nx - 1), slice(None)), (slice(0, nx - 2), slice(None)), 1.0)
    add((slice(1, nx - 1), slice(None)), (slice(2, nx), slice(None)), 1.0)
    add((slice(0, 1), slice(None)), (slice(1, 2), slice(None)), 2.0)
    add((slice(nx - 1, nx), slice(None)), (slice(nx - 2, nx - 1), slice(None)), 2.0)
    # y direction
    add((slice(None), slice(1, ny - 1)), (slice(None), slice(0, ny - 2)), 1.0)
    add((slice(None), slice(1, ny - 1)), (slice(None), slice(2, ny)), 1.0)
    add((slice(None), slice(0, 1)), (slice(None), slice(1, 2)), 2.0)
    add((slice(None), slice(ny - 1, ny)), (slice(None), slice(ny - 2, ny - 1)), 2.0)

    import scipy.sparse as sp

    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    A = SparseMatrix.from_scipy(mat)
    prec = ILUPreconditioner(A)
    _matrix_cache[key] = (A, prec)
    return A, prec


def advance(
    field: LevelSetField,
    u_ext: np.ndarray,
    cfg: LevelSetStepConfig,
) -> tuple[LevelSetField, SolveResult]:
    """One semi-implicit step of the boundary motion.

    ``u_ext`` must already be extended to every node of the box.
    """
    grid = field.grid
    phi = field.values
    speed = np.asarray(u_ext) - cfg.u_star
    grad = godunov_gradnorm(phi, grid.h, speed)
    _, n_eps = curvature_split(phi, grid.h, cfg.eps_curv)
    rhs = phi - cfg.dt * speed * grad - cfg.dt * cfg.chi * n_eps

    A, prec = _implicit_matrix(grid, cfg.dt * cfg.chi)
    result = solve_nonsymmetric(
        A, rhs.ravel(), tol=cfg.tol, max_iter=cfg.max_iter,
        x0=phi.ravel().copy(), precond=prec,
    )
    if not result.converged:
        raise SolverDiverged(
            f"level-set solve stalled at relative residual {result.residual:.3e} "
            f"after {result.iterations} iterations",
            iterations=result.iterations,
            residual=result.residual,
        )
    out = LevelSetField(grid, result.x.reshape(grid.nx, grid.ny))
    return out, result


# ---------------------------------------------------------------------------
# redistancing

@njit(cache=True, inline="always")
def _minmod(a, b):
    if a * b <= 0.0:
        return 0.0
    if abs(a) <= abs(b):
        return a
    return b


@njit(cache=True)
def _reinit_iterations(d, adjacent, smooth_sign, inside, h, dtau, n_iters):
    """Godunov reinitialization flow with minmod-limited second-order
    one-sided differences; interface-adjacent nodes stay fixed."""
    nx, ny = d.shape
    buf = np.empty_like(d)
    inv_h2 = 1.0 / (h * h)
    for _ in range(n_iters):
        for i in range(nx):
            im2 = _mirror_idx(i - 2, nx)
            im1 = _mirror_idx(i - 1, nx)
            ip1 = _mirror_idx(i + 1, nx)
            ip2 = _mirror_idx(i + 2, nx)
            for j in range(ny):
                if adjacent[i, j]:
                    buf[i, j] = d[i, j]
                    continue
                jm2 = _mirror_idx(j - 2, ny)
                jm1 = _mirror_idx(j - 1, ny)
                jp1 = _mirror_idx(j + 1, ny)
                jp2 = _mirror_idx(j + 2, ny)
                c = d[i, j]
                wl = d[im1, j]
                wr = d[ip1, j]
                wd = d[i, jm1]
                wu = d[i, jp1]

                ddx = (wr - 2.0 * c + wl) * inv_h2
                ddx_m = (c - 2.0 * wl + d[im2, j]) * inv_h2
                ddx_p = (d[ip2, j] - 2.0 * wr + c) * inv_h2
                dmx = (c - wl) / h + 0.5 * h * _minmod(ddx, ddx_m)
                dpx = (wr - c) / h - 0.5 * h * _minmod(ddx, ddx_p)

                ddy = (wu - 2.0 * c + wd) * inv_h2
                ddy_m = (c - 2.0 * wd + d[i, jm2]) * inv_h2
                ddy_p = (d[i, jp2] - 2.0 * wu + c) * inv_h2
                dmy = (c - wd) / h + 0.5 * h * _minmod(ddy, ddy_m)
                dpy = (wu - c) / h - 0.5 * h * _minmod(ddy, ddy_p)

                if inside[i, j]:
                    ax = min(dmx, 0.0)
                    bx = max(dpx, 0.0)
                    ay = min(dmy, 0.0)
                    by = max(dpy, 0.0)
                else:
                    ax = max(dmx, 0.0)
                    bx = min(dpx, 0.0)
                    ay = max(dmy, 0.0)
                    by = min(dpy, 0.0)
                grad = np.sqrt(max(ax * ax, bx * bx) + max(ay * ay, by * by))
                buf[i, j] = c - dtau * smooth_sign[i, j] * (grad - 1.0)
        d[:, :] = buf
    return d


@njit(cache=True)
def _segment_distance_targets(adj_i, adj_j, segs, h, ox, oy, fallback):
    """Min distance from each node to the reconstructed interface polyline;
    nodes with no segment within reach keep their fallback estimate."""
    n = adj_i.shape[0]
    out = np.empty(n)
    reach = 2.5 * h
    for k in range(n):
        x = ox + adj_i[k] * h
        y = oy + adj_j[k] * h
        best = np.inf
        for s in range(segs.shape[0]):
            ax = segs[s, 0]
            ay = segs[s, 1]
            if abs(ax - x) > reach and abs(segs[s, 2] - x) > reach:
                continue
            if abs(ay - y) > reach and abs(segs[s, 3] - y) > reach:
                continue
            bx = segs[s, 2] - ax
            by = segs[s, 3] - ay
            denom = bx * bx + by * by
            if denom < 1e-300:
                t = 0.0
            else:
                t = ((x - ax) * bx + (y - ay) * by) / denom
                if t < 0.0:
                    t = 0.0
                elif t > 1.0:
                    t = 1.0
            dx = x - (ax + t * bx)
            dy = y - (ay + t * by)
            dd = np.sqrt(dx * dx + dy * dy)
            if dd < best:
                best = dd
        out[k] = best if best < np.inf else abs(fallback[k])
    return out


def redistance(field: LevelSetField, n_iters: int = REDISTANCE_ITERS) -> LevelSetField:
    """Pseudo-time reinitialization toward a signed distance function.

    Interface-adjacent nodes are rescaled by one common factor (the mean
    ratio of reconstructed-interface distance to |phi|) and then held
    fixed: a shared scale leaves every linear-interpolation crossing
    exactly where it was, so repeated reinitialization cannot walk the
    interface, while the scale itself restores distance magnitudes near
    the zero set.  The outer nodes relax by the usual upwind flow.
    """
    from .grid import perturbed_nodes

    grid = field.grid
    h = grid.h
    # keep sign classes consistent with the geometry extraction
    phi0 = perturbed_nodes(field.values, h)
    d = phi0.copy()

    smooth_sign = phi0 / np.sqrt(phi0**2 + h**2)
    inside = phi0 < 0

    adjacent = np.zeros_like(phi0, dtype=bool)
    flip_x = inside[1:, :] != inside[:-1, :]
    flip_y = inside[:, 1:] != inside[:, :-1]
    adjacent[1:, :] |= flip_x
    adjacent[:-1, :] |= flip_x
    adjacent[:, 1:] |= flip_y
    adjacent[:, :-1] |= flip_y

    adj_i, adj_j = np.nonzero(adjacent)
    if adj_i.size:
        from .grid import _build_segments

        segs = _build_segments(phi0, h, grid.origin[0], grid.origin[1])
        # adjacent nodes always see a segment in one of their cut cells;
        # the |phi| fallback only guards exotic degeneracies
        fallback = phi0[adj_i, adj_j]
        dist = _segment_distance_targets(
            adj_i.astype(np.int64), adj_j.astype(np.int64), segs, h,
            grid.origin[0], grid.origin[1], fallback,
        )
        ring_abs = np.abs(phi0[adj_i, adj_j])
        denom = float(np.sum(ring_abs))
        scale = float(np.sum(dist)) / denom if denom > 0 else 1.0
        d[adj_i, adj_j] = scale * phi0[adj_i, adj_j]

    d = _reinit_iterations(d, adjacent, smooth_sign, inside, h, 0.5 * h, n_iters)
    return LevelSetField(grid, d, field.negative_inside)


# ---------------------------------------------------------------------------
# initial shapes

def circle_level_set(grid: Grid, center: tuple[float, float], radius: float) -> LevelSetField:
    """Exact signed distance to a circle, negative inside."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    L = grid.box_half_width
    cx, cy = center
    if abs(cx) + radius >= L or abs(cy) + radius >= L:
        raise ShapeOutsideBox(
            f"circle center {center} radius {radius} does not fit strictly inside the box"
        )
    X, Y = grid.node_mesh()
    return LevelSetField(grid, np.hypot(X - cx, Y - cy) - radius)


def polar_level_set(
    grid: Grid,
    base: float = 1.0,
    cos2_amplitude: float = 0.3,
    n_samples: int = 4096,
    redistance_iters: int = REDISTANCE_ITERS,
) -> LevelSetField:
    """Signed distance to the curve r(theta) = base - amp*cos(2 theta),
    centered at the origin, built from dense boundary sampling."""
    theta = np.linspace(0.0, 2.0 * np.pi, n_samples, endpoint=False)
    r = base - cos2_amplitude * np.cos(2.0 * theta)
    bx = r * np.cos(theta)
    by = r * np.sin(theta)
    L = grid.box_half_width
    if np.max(np.abs(bx)) >= L or np.max(np.abs(by)) >= L:
        raise ShapeOutsideBox("polar shape does not fit strictly inside the box")

    X, Y = grid.node_mesh()
    # min distance to the sampled boundary, chunked to bound memory
    pts = np.column_stack([bx, by])
    flat = np.column_stack([X.ravel(), Y.ravel()])
    dist = np.empty(flat.shape[0])
    chunk = 8192
    for s in range(0, flat.shape[0], chunk):
        block = flat[s:s + chunk]
        d2 = (block[:, None, 0] - pts[None, :, 0]) ** 2 + (
            block[:, None, 1] - pts[None, :, 1]
        ) ** 2
        dist[s:s + chunk] = np.sqrt(d2.min(axis=1))
    node_r = np.hypot(X, Y)
    node_theta = np.arctan2(Y, X)
    sign = np.where(node_r > base - cos2_amplitude * np.cos(2 * node_theta), 1.0, -1.0)
    phi = sign * dist.reshape(X.shape)
    field = LevelSetField(grid, phi)
    if redistance_iters:
        field = redistance(field, redistance_iters)
    return field
