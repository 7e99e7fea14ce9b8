import numpy as np
import pytest
import scipy.sparse as sp

from cellmotion.grid import cut_cell_geometry
from cellmotion.levelset import circle_level_set
from cellmotion.reaction import assemble_diffusion_system
from cellmotion.solvers import SparseMatrix, solve_nonsymmetric, solve_spd


def from_dense(a, check_symmetry=False):
    return SparseMatrix.from_scipy(sp.csr_matrix(a), check_symmetry=check_symmetry)


class TestSolveSpd:
    def test_identity(self):
        A = from_dense(np.eye(4), check_symmetry=True)
        b = np.array([1.0, -2.0, 3.0, 0.5])
        res = solve_spd(A, b)
        assert res.converged and res.iterations <= 1
        assert np.allclose(res.x, b, atol=1e-12)

    def test_poisson_tridiagonal(self):
        # hand-solved: A = tridiag(-1, 2, -1), b = e_3 -> x = (.5, 1, 1.5, 1, .5)
        A = from_dense(
            np.diag(np.full(5, 2.0)) + np.diag(np.full(4, -1.0), 1) + np.diag(np.full(4, -1.0), -1),
            check_symmetry=True,
        )
        b = np.array([0.0, 0.0, 1.0, 0.0, 0.0])
        res = solve_spd(A, b, tol=1e-12)
        assert res.converged
        assert np.allclose(res.x, [0.5, 1.0, 1.5, 1.0, 0.5], atol=1e-10)

    def test_zero_dimension(self):
        A = SparseMatrix(0, np.zeros(1, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0))
        res = solve_spd(A, np.zeros(0))
        assert res.converged and res.x.size == 0

    def test_zero_rhs(self):
        A = from_dense(np.diag([2.0, 3.0]))
        res = solve_spd(A, np.zeros(2))
        assert res.converged and np.all(res.x == 0.0)


class TestSolveNonsymmetric:
    def test_identity(self):
        A = from_dense(np.eye(3))
        b = np.array([4.0, 5.0, 6.0])
        res = solve_nonsymmetric(A, b)
        assert res.converged
        assert np.allclose(res.x, b, atol=1e-12)

    def test_upper_triangular(self):
        A = from_dense(np.array([[2.0, 1.0], [0.0, 1.0]]))
        res = solve_nonsymmetric(A, np.array([3.0, 1.0]), tol=1e-12)
        assert res.converged
        assert np.allclose(res.x, [1.0, 1.0], atol=1e-10)

    def test_singular_flags_failure(self):
        A = from_dense(np.array([[1.0, 1.0], [1.0, 1.0]]))
        res = solve_nonsymmetric(A, np.array([1.0, 2.0]), max_iter=50)
        assert not res.converged
        assert np.isfinite(res.residual)


class TestResidualContract:
    def test_random_diagonally_dominant_systems(self):
        rng = np.random.default_rng(42)
        for trial in range(100):
            n = int(rng.integers(3, 120))
            density = min(1.0, 4.0 / n)
            A = sp.random(n, n, density=density, random_state=np.random.RandomState(trial)).toarray()
            A = 0.5 * (A + A.T)
            A += np.diag(np.abs(A).sum(axis=1) + 1.0)
            b = rng.standard_normal(n)

            spd = from_dense(A, check_symmetry=True)
            assert spd.symmetric
            res = solve_spd(spd, b, tol=1e-10)
            assert res.converged
            assert np.linalg.norm(A @ res.x - b) <= 1e-9 * np.linalg.norm(b)

            # nonsymmetric variant of the same scale
            B = A + np.triu(rng.standard_normal((n, n)) * 0.1, 1)
            B += np.diag(np.abs(B).sum(axis=1))
            res2 = solve_nonsymmetric(from_dense(B), b, tol=1e-10)
            assert res2.converged
            assert np.linalg.norm(B @ res2.x - b) <= 1e-8 * np.linalg.norm(b)


class TestPreconditioning:
    def test_ic_reduces_iterations_on_cut_cell_matrix(self):
        from cellmotion.grid import Grid

        grid = Grid.square(2.0, 0.05)
        field = circle_level_set(grid, (0.0, 0.0), 1.3)
        geom = cut_cell_geometry(field.values, grid)
        system = assemble_diffusion_system(geom, D=10.0, dt=0.005)
        rng = np.random.default_rng(3)
        b = rng.standard_normal(system.matrix.n)
        with_prec = solve_spd(system.matrix, b, tol=1e-10, precond=system.precond)
        without = solve_spd(system.matrix, b, tol=1e-10, use_preconditioner=False)
        assert with_prec.converged and without.converged
        assert with_prec.iterations <= without.iterations


class TestSparseMatrix:
    def test_symmetry_flag_requires_verification(self):
        A = from_dense(np.array([[1.0, 2.0], [0.0, 1.0]]), check_symmetry=True)
        assert not A.symmetric
        B = from_dense(np.array([[1.0, 2.0], [2.0, 1.0]]), check_symmetry=True)
        assert B.symmetric

    def test_no_explicit_zeros(self):
        M = sp.csr_matrix(np.array([[1.0, 0.0], [0.0, 1.0]]))
        M.data[0] = 0.0  # force an explicit zero
        A = SparseMatrix.from_scipy(M)
        assert (A.data != 0.0).all()
