import numpy as np
import pytest


def fmt(x):
    return "%.17g" % x


def write_csv(path, rows):
    with open(path, "w") as fh:
        fh.write("t,U,V,mass,area,xc,yc,vx,vy\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_snapshot(path, phi, u, v, h=0.1, origin=(-1.0, -1.0), t=0.0, offset=(0.0, 0.0)):
    nx, ny = phi.shape
    with open(path, "w") as fh:
        fh.write(
            f"{nx} {ny} {fmt(h)} {fmt(origin[0])} {fmt(origin[1])} "
            f"{fmt(t)} {fmt(offset[0])} {fmt(offset[1])}\n"
        )
        for block in (phi, u, v):
            for row in block:
                fh.write(" ".join(fmt(x) for x in row) + "\n")


@pytest.fixture
def disk_snapshot(tmp_path):
    """Hand-built snapshot: radius-0.6 disk with a front in u."""
    n = 21
    h = 0.1
    xs = -1.0 + h * np.arange(n)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    phi = np.hypot(X, Y) - 0.6
    cx = -1.0 + h * (np.arange(n - 1) + 0.5)
    XC, YC = np.meshgrid(cx, cx, indexing="ij")
    inside = np.hypot(XC, YC) < 0.6
    u = np.where(inside, np.where(YC >= 0.0, 0.8, 0.1), np.nan)
    v = np.where(inside, 1.2, np.nan)
    path = tmp_path / "snap.txt"
    write_snapshot(path, phi, u, v, h=h)
    return path


@pytest.fixture
def line_csv(tmp_path):
    rows = []
    for k in range(50):
        t = 0.1 * k
        rows.append([t, 2.0, 4.0, 6.0, 3.1, 0.3 * t, 0.1 * t, 0.3, 0.1])
    path = tmp_path / "line.csv"
    write_csv(path, rows)
    return path


@pytest.fixture
def circle_csv(tmp_path):
    rows = []
    for k in range(200):
        t = 0.1 * k
        rows.append([
            t, 2.0, 4.0, 6.0, 3.1,
            np.cos(0.4 * t), np.sin(0.4 * t),
            -0.4 * np.sin(0.4 * t), 0.4 * np.cos(0.4 * t),
        ])
    path = tmp_path / "circle.csv"
    write_csv(path, rows)
    return path
