"""The five figure types rendered from simulator outputs.

All functions take file paths plus an output path and write a PNG; they
return a small info dict for testability.  Rendering is deterministic:
fixed style, fixed dpi, no timestamps, so identical inputs give identical
bytes.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .readers import read_snapshot, read_timeseries

DPI = 140


def _new_axes(figsize=(6.0, 5.0)):
    fig, ax = plt.subplots(figsize=figsize, dpi=DPI)
    return fig, ax


def _save(fig, out_path):
    fig.savefig(out_path, dpi=DPI)
    plt.close(fig)


def plot_trajectory(timeseries_path, snapshot_paths, out_path):
    """Center path with cell outlines at the snapshot times, plus the
    space-time curve and its plane projection."""
    cols = read_timeseries(timeseries_path)
    snaps = [read_snapshot(p) for p in snapshot_paths]

    fig = plt.figure(figsize=(11.0, 5.0), dpi=DPI)
    ax = fig.add_subplot(1, 2, 1)
    ax.plot(cols["xc"], cols["yc"], color="tab:red", lw=1.5, label="center path")
    n_outlines = 0
    for snap in snaps:
        x = snap.node_x + snap.world_offset[0]
        y = snap.node_y + snap.world_offset[1]
        cs = ax.contour(
            x, y, snap.phi.T, levels=[0.0], colors="tab:blue", linewidths=1.0
        )
        n_outlines += sum(len(lvl) for lvl in cs.allsegs)
        labeled = False
        for seg in cs.allsegs[0]:
            mid = seg[len(seg) // 2]
            if not labeled:
                ax.annotate(f"t={snap.t:g}", mid, fontsize=7, color="tab:blue")
                labeled = True
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.legend(loc="best", fontsize=8)
    ax.set_title("trajectory and cell outlines")

    ax3 = fig.add_subplot(1, 2, 2, projection="3d")
    ax3.plot(cols["xc"], cols["yc"], cols["t"], color="tab:blue", lw=1.2)
    t0 = np.zeros_like(cols["t"])
    ax3.plot(cols["xc"], cols["yc"], t0, color="tab:red", lw=1.0)
    ax3.set_xlabel("x")
    ax3.set_ylabel("y")
    ax3.set_zlabel("t")
    ax3.set_title("space-time path and projection")

    _save(fig, out_path)
    return {"outlines": n_outlines, "points": len(cols["t"])}


def plot_fields(snapshot_path, out_path, level=0.5):
    """Heatmap of u with the u = level contour and the cell outline."""
    snap = read_snapshot(snapshot_path)
    fig, ax = _new_axes()
    cx = snap.cell_x + snap.world_offset[0]
    cy = snap.cell_y + snap.world_offset[1]
    masked = np.ma.masked_invalid(snap.u.T)
    im = ax.pcolormesh(cx, cy, masked, shading="nearest", cmap="viridis")
    fig.colorbar(im, ax=ax, label="u")

    nx_ = snap.node_x + snap.world_offset[0]
    ny_ = snap.node_y + snap.world_offset[1]
    ax.contour(nx_, ny_, snap.phi.T, levels=[0.0], colors="tab:blue", linewidths=1.2)

    finite = np.isfinite(snap.u)
    n_contour = 0
    if finite.any() and np.nanmax(snap.u) >= level >= np.nanmin(snap.u):
        filled = np.where(finite, snap.u, -np.inf)
        cs = ax.contour(cx, cy, filled.T, levels=[level], colors="red", linewidths=1.2)
        n_contour = sum(len(lvl) for lvl in cs.allsegs)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(f"active concentration at t={snap.t:g}")
    _save(fig, out_path)
    return {"level_contours": n_contour}


def plot_mass(timeseries_path, out_path):
    cols = read_timeseries(timeseries_path)
    fig, ax = _new_axes(figsize=(7.0, 4.5))
    ax.plot(cols["t"], cols["U"], label="U", color="tab:blue")
    ax.plot(cols["t"], cols["V"], label="V", color="tab:orange")
    ax.plot(cols["t"], cols["mass"], label="U+V", color="tab:green", lw=2)
    ax.set_xlabel("t")
    ax.set_ylabel("mass")
    ax.legend(loc="best", fontsize=8)
    ax.set_title("species masses and total")
    _save(fig, out_path)
    return {"points": len(cols["t"])}


def plot_velocity(timeseries_path, out_path):
    cols = read_timeseries(timeseries_path)
    fig, ax = _new_axes(figsize=(7.0, 4.5))
    ax.plot(cols["t"], cols["vx"], label="vx", color="tab:blue")
    ax.plot(cols["t"], cols["vy"], label="vy", color="tab:orange")
    ax.axhline(0.0, color="0.7", lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("center velocity")
    ax.legend(loc="best", fontsize=8)
    ax.set_title("center velocity components")
    _save(fig, out_path)
    return {"points": len(cols["t"])}


def plot_area(timeseries_path, out_path):
    cols = read_timeseries(timeseries_path)
    fig, ax = _new_axes(figsize=(7.0, 4.5))
    ax.plot(cols["t"], cols["area"], color="tab:blue")
    ax.set_xlabel("t")
    ax.set_ylabel("area")
    ax.set_title("cell area")
    _save(fig, out_path)
    return {"points": len(cols["t"])}
