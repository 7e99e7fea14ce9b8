"""Local least-squares polynomial fits shared by the interface sampler and
the new-cell extrapolator.

Fit a quadratic when at least six points are available, a linear below
that, and fall back to the nearest value for fewer than three points.
Coordinates are centered on the data centroid and scaled by the grid
spacing before solving.  Thin, arc-like clouds leave the quadratic
rank-deficient in the normal direction, which would extrapolate wildly at
the query point, so the quadratic is accepted only when its normal matrix
is well conditioned; the linear model drops rank-deficient directions
instead (min-norm solution), which for degenerate clouds reduces to the
best fit along the populated direction.  Linear data is reproduced
exactly whenever the cloud determines it.
"""

import numpy as np
from numba import njit

QUAD_MIN_PTS = 6
LIN_MIN_PTS = 3
# thresholds on sigma_min/sigma_max of the normal matrix (squared design
# condition)
QUAD_RCOND2 = 1e-8
LIN_RCOND2 = 1e-10


@njit(cache=True)
def _gram_fit_eval(px, py, pv, xq, yq, scale, nterm, rcond2, truncate):
    """LS fit through the normal matrix; returns (value_at_query, ok).

    With ``truncate`` the rank-deficient directions are dropped instead of
    rejecting the model; the constant direction is always determined, so a
    value is always produced.
    """
    n = px.shape[0]
    cx = 0.0
    cy = 0.0
    for k in range(n):
        cx += px[k]
        cy += py[k]
    cx /= n
    cy /= n

    G = np.zeros((nterm, nterm))
    rhs = np.zeros(nterm)
    row = np.empty(nterm)
    for k in range(n):
        x = (px[k] - cx) / scale
        y = (py[k] - cy) / scale
        row[0] = 1.0
        row[1] = x
        row[2] = y
        if nterm == 6:
            row[3] = x * x
            row[4] = x * y
            row[5] = y * y
        for a in range(nterm):
            rhs[a] += row[a] * pv[k]
            for b in range(a, nterm):
                G[a, b] += row[a] * row[b]
    for a in range(nterm):
        for b in range(a):
            G[a, b] = G[b, a]
    U, s, Vt = np.linalg.svd(G)
    if s[-1] <= rcond2 * s[0] and not truncate:
        return 0.0, False
    coef = np.zeros(nterm)
    for k in range(nterm):
        if s[k] > rcond2 * s[0]:
            coef += (np.dot(U[:, k], rhs) / s[k]) * Vt[k, :]

    x = (xq - cx) / scale
    y = (yq - cy) / scale
    val = coef[0] + coef[1] * x + coef[2] * y
    if nterm == 6:
        val += coef[3] * x * x + coef[4] * x * y + coef[5] * y * y
    return val, True


@njit(cache=True)
def ls_fit_eval(px, py, pv, xq, yq, scale):
    """Evaluate the local fit at (xq, yq); px/py/pv are the data points."""
    n = px.shape[0]
    if n == 0:
        return np.nan
    if n >= QUAD_MIN_PTS:
        val, ok = _gram_fit_eval(px, py, pv, xq, yq, scale, 6, QUAD_RCOND2, False)
        if ok:
            return val
    if n >= LIN_MIN_PTS:
        val, _ = _gram_fit_eval(px, py, pv, xq, yq, scale, 3, LIN_RCOND2, True)
        return val
    best = 0
    bd = (px[0] - xq) ** 2 + (py[0] - yq) ** 2
    for k in range(1, n):
        d = (px[k] - xq) ** 2 + (py[k] - yq) ** 2
        if d < bd:
            bd = d
            best = k
    return pv[best]
