"""Sparse storage and the two Krylov solvers used by the time steppers.

The diffusion systems are solved by conjugate gradients with a zero-fill
incomplete Cholesky preconditioner; the level-set systems (nonsymmetric
because of the boundary rows) by BiCGSTAB with zero-fill incomplete LU.
Both factorizations keep exactly the sparsity pattern of the matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from numba import njit


@dataclass
class SparseMatrix:
    """Row-compressed square matrix.

    The symmetric flag is only ever set after an exact A == A^T check.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    symmetric: bool = False

    @classmethod
    def from_scipy(cls, mat, check_symmetry: bool = False) -> "SparseMatrix":
        csr = sp.csr_matrix(mat)
        csr.sum_duplicates()
        csr.eliminate_zeros()
        csr.sort_indices()
        symmetric = False
        if check_symmetry:
            diff = (csr - csr.T).tocsr()
            diff.eliminate_zeros()
            symmetric = diff.nnz == 0
        return cls(
            csr.shape[0],
            csr.indptr.astype(np.int64),
            csr.indices.astype(np.int64),
            csr.data.astype(np.float64),
            symmetric,
        )

    @classmethod
    def from_csr_arrays(
        cls, indptr, indices, data, check_symmetry: bool = False
    ) -> "SparseMatrix":
        """Wrap pre-sorted CSR arrays without copying."""
        symmetric = bool(_csr_symmetric(indptr, indices, data)) if check_symmetry else False
        return cls(indptr.shape[0] - 1, indptr, indices, data, symmetric)

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.data, self.indices, self.indptr), shape=(self.n, self.n)
        )

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return _csr_matvec(self.indptr, self.indices, self.data, x)


# below any physically meaningful scale; only denormal-collapsed fields hit it
ATOL_FLOOR = 1e-280


@dataclass
class SolveResult:
    x: np.ndarray
    iterations: int
    residual: float  # relative residual |Ax-b|/|b|
    converged: bool


@njit(cache=True)
def _csr_symmetric(indptr, indices, data):
    """Exact A == A^T check on sorted CSR arrays."""
    n = indptr.shape[0] - 1
    for i in range(n):
        for k in range(indptr[i], indptr[i + 1]):
            j = indices[k]
            if j <= i:
                continue
            lo = indptr[j]
            hi = indptr[j + 1]
            found = False
            while lo < hi:
                mid = (lo + hi) // 2
                c = indices[mid]
                if c == i:
                    if data[mid] != data[k]:
                        return False
                    found = True
                    break
                if c < i:
                    lo = mid + 1
                else:
                    hi = mid
            if not found:
                return False
    return True


@njit(cache=True)
def _csr_matvec(indptr, indices, data, x):
    n = indptr.shape[0] - 1
    y = np.zeros(n)
    for i in range(n):
        s = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            s += data[k] * x[indices[k]]
        y[i] = s
    return y


# ---------------------------------------------------------------------------
# incomplete Cholesky IC(0) and preconditioned CG


@njit(cache=True)
def _ic0_factor(indptr, indices, data, n, shift):
    """IC(0) on the lower triangle; returns CSR arrays of L (diag included).

    Returns a flag 0 on success, 1 on breakdown (nonpositive pivot).
    """
    # count lower-triangle entries
    nnz_l = 0
    for i in range(n):
        for k in range(indptr[i], indptr[i + 1]):
            if indices[k] <= i:
                nnz_l += 1
    lptr = np.zeros(n + 1, dtype=np.int64)
    lind = np.zeros(nnz_l, dtype=np.int64)
    ldat = np.zeros(nnz_l)
    pos = 0
    for i in range(n):
        lptr[i] = pos
        for k in range(indptr[i], indptr[i + 1]):
            j = indices[k]
            if j <= i:
                lind[pos] = j
                v = data[k]
                if j == i:
                    v += shift
                ldat[pos] = v
                pos += 1
    lptr[n] = pos

    for i in range(n):
        row_start = lptr[i]
        row_end = lptr[i + 1]
        diag_pos = row_end - 1  # sorted indices: diagonal is last
        for kk in range(row_start, row_end):
            j = lind[kk]
            # dot of rows i and j over columns < j
            s = ldat[kk]
            pi = row_start
            pj = lptr[j]
            j_end = lptr[j + 1] - 1  # exclude diagonal of row j
            while pi < kk and pj < j_end:
                ci = lind[pi]
                cj = lind[pj]
                if ci == cj:
                    s -= ldat[pi] * ldat[pj]
                    pi += 1
                    pj += 1
                elif ci < cj:
                    pi += 1
                else:
                    pj += 1
            if j < i:
                dj = ldat[lptr[j + 1] - 1]
                ldat[kk] = s / dj
            else:
                if s <= 0.0:
                    return lptr, lind, ldat, 1
                ldat[diag_pos] = np.sqrt(s)
    return lptr, lind, ldat, 0


@njit(cache=True)
def _ic0_apply(lptr, lind, ldat, r):
    """Solve L L^T z = r."""
    n = lptr.shape[0] - 1
    y = np.zeros(n)
    for i in range(n):
        s = r[i]
        end = lptr[i + 1] - 1
        for k in range(lptr[i], end):
            s -= ldat[k] * y[lind[k]]
        y[i] = s / ldat[end]
    z = y
    for i in range(n - 1, -1, -1):
        end = lptr[i + 1] - 1
        z[i] /= ldat[end]
        zi = z[i]
        for k in range(lptr[i], end):
            z[lind[k]] -= ldat[k] * zi
    return z


@njit(cache=True)
def _pcg(indptr, indices, data, b, x0, lptr, lind, ldat, tol, max_iter, use_prec):
    n = b.shape[0]
    x = x0.copy()
    r = b - _csr_matvec(indptr, indices, data, x)
    bnorm = np.sqrt(np.dot(b, b))
    if bnorm == 0.0:
        return x * 0.0, 0, 0.0, True
    floor = tol * bnorm + ATOL_FLOOR
    rnorm = np.sqrt(np.dot(r, r))
    if rnorm <= floor:
        return x, 0, rnorm / bnorm, True
    if use_prec:
        z = _ic0_apply(lptr, lind, ldat, r)
    else:
        z = r.copy()
    p = z.copy()
    rz = np.dot(r, z)
    for it in range(1, max_iter + 1):
        Ap = _csr_matvec(indptr, indices, data, p)
        pAp = np.dot(p, Ap)
        if pAp <= 0.0:
            return x, it, rnorm / bnorm, False
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        rnorm = np.sqrt(np.dot(r, r))
        if rnorm <= floor:
            return x, it, rnorm / bnorm, True
        if use_prec:
            z = _ic0_apply(lptr, lind, ldat, r)
        else:
            z = r.copy()
        rz_new = np.dot(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, max_iter, rnorm / bnorm, False


class ICPreconditioner:
    """Symmetric Jacobi scaling plus zero-fill incomplete Cholesky.

    Cut cells snapped just above the area floor give the diffusion systems
    diagonal ratios of order 1e10; conjugate gradients on the raw matrix
    then stalls near the float64 attainable-accuracy floor.  Scaling to a
    unit diagonal removes the imbalance, and IC(0) is factored from the
    scaled matrix.
    """

    def __init__(self, A: SparseMatrix):
        n = A.n
        diag = np.ones(n)
        for i in range(n):
            for k in range(A.indptr[i], A.indptr[i + 1]):
                if A.indices[k] == i and A.data[k] > 0.0:
                    diag[i] = A.data[k]
        self.scale = 1.0 / np.sqrt(diag)
        rows = np.repeat(np.arange(n), np.diff(A.indptr))
        self.sdata = A.data * self.scale[rows] * self.scale[A.indices]

        shift = 0.0
        for _ in range(6):
            lptr, lind, ldat, fail = _ic0_factor(
                A.indptr, A.indices, self.sdata, n, shift
            )
            if not fail:
                self.lptr, self.lind, self.ldat = lptr, lind, ldat
                self.ok = True
                return
            shift = max(2.0 * shift, 1e-8)
        # last resort: identity factors (scaled matrix already has unit
        # diagonal, so this is plain Jacobi on the original system)
        self.ok = False
        self.lptr = np.arange(n + 1, dtype=np.int64)
        self.lind = np.arange(n, dtype=np.int64)
        self.ldat = np.ones(n)


def solve_spd(
    A: SparseMatrix,
    b: np.ndarray,
    tol: float = 1e-10,
    max_iter: int | None = None,
    x0: np.ndarray | None = None,
    precond: ICPreconditioner | None = None,
    use_preconditioner: bool = True,
) -> SolveResult:
    """Preconditioned conjugate gradients for a symmetric positive-definite
    system; returns the best iterate with a converged flag.

    The preconditioned path iterates on the symmetrically scaled system and
    judges convergence on the original relative residual.
    """
    b = np.asarray(b, dtype=np.float64)
    if A.n == 0:
        return SolveResult(np.zeros(0), 0, 0.0, True)
    if max_iter is None:
        max_iter = 10 * A.n
    if x0 is None:
        x0 = np.zeros(A.n)
    x0 = np.asarray(x0, dtype=np.float64)

    if not use_preconditioner:
        lptr = np.zeros(1, dtype=np.int64)
        lind = np.zeros(0, dtype=np.int64)
        ldat = np.zeros(0)
        x, its, res, ok = _pcg(
            A.indptr, A.indices, A.data, b, x0,
            lptr, lind, ldat, tol, max_iter, False,
        )
        return SolveResult(x, its, res, ok)

    if precond is None:
        precond = ICPreconditioner(A)
    s = precond.scale
    b_hat = s * b
    bnorm = np.linalg.norm(b)
    y0 = x0 / s
    total_iters = 0
    scaled_tol = tol
    for _ in range(3):
        y, its, _, ok = _pcg(
            A.indptr, A.indices, precond.sdata, b_hat, y0,
            precond.lptr, precond.lind, precond.ldat,
            scaled_tol, max_iter, True,
        )
        total_iters += its
        x = s * y
        if bnorm == 0.0:
            return SolveResult(x * 0.0, total_iters, 0.0, True)
        true_abs = np.linalg.norm(b - A.matvec(x))
        true_res = true_abs / bnorm
        if true_abs <= tol * bnorm + ATOL_FLOOR:
            return SolveResult(x, total_iters, true_res, True)
        if not ok:
            return SolveResult(x, total_iters, true_res, False)
        y0 = y
        scaled_tol *= 0.01
    return SolveResult(x, total_iters, true_res, False)


# ---------------------------------------------------------------------------
# incomplete LU ILU(0) and preconditioned BiCGSTAB


@njit(cache=True)
def _ilu0_factor(indptr, indices, data):
    """In-pattern ILU(0); returns a modified copy of ``data`` holding the
    unit-lower L (below diagonal) and U (diagonal and above)."""
    n = indptr.shape[0] - 1
    lu = data.copy()
    diag_pos = np.empty(n, dtype=np.int64)
    for i in range(n):
        diag_pos[i] = -1
        for k in range(indptr[i], indptr[i + 1]):
            if indices[k] == i:
                diag_pos[i] = k
                break
    for i in range(n):
        for kk in range(indptr[i], indptr[i + 1]):
            k = indices[kk]
            if k >= i:
                break
            dk = lu[diag_pos[k]]
            if dk == 0.0:
                dk = 1e-300
            lik = lu[kk] / dk
            lu[kk] = lik
            # subtract lik * row(k, j>k) over the shared pattern
            pk = diag_pos[k] + 1
            pi = kk + 1
            i_end = indptr[i + 1]
            k_end = indptr[k + 1]
            while pk < k_end and pi < i_end:
                ck = indices[pk]
                ci = indices[pi]
                if ck == ci:
                    lu[pi] -= lik * lu[pk]
                    pk += 1
                    pi += 1
                elif ck < ci:
                    pk += 1
                else:
                    pi += 1
    return lu, diag_pos


@njit(cache=True)
def _ilu0_apply(indptr, indices, lu, diag_pos, r):
    """Solve (L U) z = r with L unit lower, both stored in the CSR pattern."""
    n = indptr.shape[0] - 1
    y = np.zeros(n)
    for i in range(n):
        s = r[i]
        for k in range(indptr[i], indptr[i + 1]):
            j = indices[k]
            if j >= i:
                break
            s -= lu[k] * y[j]
        y[i] = s
    z = y
    for i in range(n - 1, -1, -1):
        s = z[i]
        dp = diag_pos[i]
        for k in range(dp + 1, indptr[i + 1]):
            s -= lu[k] * z[indices[k]]
        d = lu[dp]
        if d == 0.0:
            d = 1e-300
        z[i] = s / d
    return z


@njit(cache=True)
def _bicgstab(indptr, indices, data, b, x0, lu, diag_pos, tol, max_iter, use_prec):
    n = b.shape[0]
    x = x0.copy()
    r = b - _csr_matvec(indptr, indices, data, x)
    bnorm = np.sqrt(np.dot(b, b))
    if bnorm == 0.0:
        return x * 0.0, 0, 0.0, True
    floor = tol * bnorm + ATOL_FLOOR
    rnorm = np.sqrt(np.dot(r, r))
    if rnorm <= floor:
        return x, 0, rnorm / bnorm, True
    r_hat = r.copy()
    rho = 1.0
    alpha = 1.0
    omega = 1.0
    v = np.zeros(n)
    p = np.zeros(n)
    best_x = x.copy()
    best_res = rnorm / bnorm
    for it in range(1, max_iter + 1):
        rho_new = np.dot(r_hat, r)
        if abs(rho_new) < 1e-300:
            return best_x, it, best_res, False
        beta = (rho_new / rho) * (alpha / omega)
        rho = rho_new
        p = r + beta * (p - omega * v)
        if use_prec:
            p_hat = _ilu0_apply(indptr, indices, lu, diag_pos, p)
        else:
            p_hat = p.copy()
        v = _csr_matvec(indptr, indices, data, p_hat)
        denom = np.dot(r_hat, v)
        if abs(denom) < 1e-300:
            return best_x, it, best_res, False
        alpha = rho / denom
        s = r - alpha * v
        snorm = np.sqrt(np.dot(s, s))
        if snorm <= floor:
            x += alpha * p_hat
            return x, it, snorm / bnorm, True
        if use_prec:
            s_hat = _ilu0_apply(indptr, indices, lu, diag_pos, s)
        else:
            s_hat = s.copy()
        t = _csr_matvec(indptr, indices, data, s_hat)
        tt = np.dot(t, t)
        if tt < 1e-300:
            return best_x, it, best_res, False
        omega = np.dot(t, s) / tt
        x += alpha * p_hat + omega * s_hat
        r = s - omega * t
        rnorm = np.sqrt(np.dot(r, r))
        res = rnorm / bnorm
        if res < best_res:
            best_res = res
            best_x = x.copy()
        if rnorm <= floor:
            return x, it, res, True
        if abs(omega) < 1e-300:
            return best_x, it, best_res, False
    return best_x, max_iter, best_res, False


class ILUPreconditioner:
    """Zero-fill incomplete LU factors."""

    def __init__(self, A: SparseMatrix):
        self.lu, self.diag_pos = _ilu0_factor(A.indptr, A.indices, A.data)


def solve_nonsymmetric(
    A: SparseMatrix,
    b: np.ndarray,
    tol: float = 1e-10,
    max_iter: int | None = None,
    x0: np.ndarray | None = None,
    precond: ILUPreconditioner | None = None,
    use_preconditioner: bool = True,
) -> SolveResult:
    """ILU(0)-preconditioned BiCGSTAB; returns the best iterate with a
    converged flag (singular systems surface as converged=False)."""
    b = np.asarray(b, dtype=np.float64)
    if A.n == 0:
        return SolveResult(np.zeros(0), 0, 0.0, True)
    if max_iter is None:
        max_iter = 10 * A.n
    if x0 is None:
        x0 = np.zeros(A.n)
    if use_preconditioner:
        if precond is None:
            precond = ILUPreconditioner(A)
        lu, diag_pos = precond.lu, precond.diag_pos
    else:
        lu = np.zeros(0)
        diag_pos = np.zeros(0, dtype=np.int64)
    x, its, res, ok = _bicgstab(
        A.indptr, A.indices, A.data, b, np.asarray(x0, dtype=np.float64),
        lu, diag_pos, tol, max_iter, use_preconditioner,
    )
    return SolveResult(x, its, res, ok)
