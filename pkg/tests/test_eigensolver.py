import numpy as np
import pytest

from heisenlab.assembly import assemble_oscillator_sos
from heisenlab.eigensolver import (CgConvergenceError, IndefiniteOperatorError,
                                   SolverConfig, cg_solve, smallest_eigenpairs)
from heisenlab.grids import GridSpec

from conftest import dense_to_sparse


class TestCg:
    def test_identity(self, rng):
        A = dense_to_sparse(np.eye(8))
        b = rng.standard_normal(8)
        assert np.max(np.abs(cg_solve(A, b) - b)) < 1e-12

    def test_diagonal(self):
        A = dense_to_sparse(np.diag([2.0, 4.0]))
        x = cg_solve(A, np.array([2.0, 4.0]))
        assert np.allclose(x, [1.0, 1.0], atol=1e-12)

    def test_dense_oracle(self, rng):
        M = rng.standard_normal((50, 50))
        S = M.T @ M + np.eye(50)
        A = dense_to_sparse(S)
        b = rng.standard_normal(50)
        x = cg_solve(A, b, rel_tol=1e-12)
        assert np.max(np.abs(x - np.linalg.solve(S, b))) < 1e-9

    def test_jacobi_preconditioning(self, rng):
        M = rng.standard_normal((40, 40))
        S = M.T @ M + np.diag(np.linspace(1, 100, 40))
        A = dense_to_sparse(S)
        b = rng.standard_normal(40)
        x = cg_solve(A, b, rel_tol=1e-11, diag_precond=A.diagonal())
        assert np.linalg.norm(A.matvec(x) - b) <= 1e-10 * np.linalg.norm(b)

    def test_nonconvergence_carries_residual(self, rng):
        M = rng.standard_normal((30, 30))
        A = dense_to_sparse(M.T @ M + np.eye(30))
        with pytest.raises(CgConvergenceError) as err:
            cg_solve(A, rng.standard_normal(30), rel_tol=1e-14, max_iter=2)
        assert 0.0 < err.value.achieved < 1.0

    def test_indefiniteness_detected(self):
        A = dense_to_sparse(np.diag([1.0, -1.0]))
        with pytest.raises(IndefiniteOperatorError):
            cg_solve(A, np.array([1.0, 1.0]))

    def test_rejects_nonfinite_rhs(self):
        A = dense_to_sparse(np.eye(2))
        with pytest.raises(ValueError):
            cg_solve(A, np.array([np.nan, 1.0]))


class TestSmallestEigenpairs:
    def test_diagonal_matrix(self):
        A = dense_to_sparse(np.diag(np.arange(1.0, 101.0)))
        res = smallest_eigenpairs(A, SolverConfig(k=5, tol=1e-10, seed=3))
        assert res.converged
        assert np.allclose(res.values, [1, 2, 3, 4, 5], atol=1e-10)
        for i, p in enumerate(res.pairs):
            assert abs(abs(p.vector[i]) - 1.0) < 1e-8

    def test_dirichlet_laplacian_closed_form(self):
        m, h = 63, 1.0
        T = (np.diag(2.0 * np.ones(m)) - np.diag(np.ones(m - 1), 1)
             - np.diag(np.ones(m - 1), -1)) / h ** 2
        res = smallest_eigenpairs(dense_to_sparse(T),
                                  SolverConfig(k=10, tol=1e-10, seed=3))
        exact = (4 / h ** 2) * np.sin(np.arange(1, 11) * np.pi / (2 * (m + 1))) ** 2
        assert res.converged
        assert np.max(np.abs(res.values - exact)) < 1e-10

    def test_random_spd_against_dense_oracle(self, rng):
        M = rng.standard_normal((100, 100))
        S = M.T @ M + np.eye(100)
        res = smallest_eigenpairs(dense_to_sparse(S),
                                  SolverConfig(k=10, tol=1e-10, seed=5))
        want = np.linalg.eigvalsh(S)[:10]
        assert res.converged
        assert np.max(np.abs(res.values - want)) < 1e-9

    def test_monotone_order_and_certificates(self, rng):
        M = rng.standard_normal((60, 60))
        S = M.T @ M + np.eye(60)
        A = dense_to_sparse(S)
        cfg = SolverConfig(k=8, tol=1e-9, seed=1)
        res = smallest_eigenpairs(A, cfg)
        assert np.all(np.diff(res.values) >= 0)
        for p in res.pairs:
            r = np.linalg.norm(A.matvec(p.vector) - p.value * p.vector)
            assert r <= cfg.tol * max(1.0, abs(p.value))
            assert abs(np.linalg.norm(p.vector) - 1.0) < 1e-12

    def test_orthonormality(self, rng):
        M = rng.standard_normal((80, 80))
        S = M.T @ M + np.eye(80)
        res = smallest_eigenpairs(dense_to_sparse(S),
                                  SolverConfig(k=10, tol=1e-9, seed=2))
        G = res.vectors @ res.vectors.T
        assert np.max(np.abs(G - np.eye(10))) < 1e-10

    def test_deterministic(self, rng):
        M = rng.standard_normal((50, 50))
        S = M.T @ M + np.eye(50)
        A = dense_to_sparse(S)
        cfg = SolverConfig(k=6, tol=1e-9, seed=9)
        a = smallest_eigenpairs(A, cfg).values
        b = smallest_eigenpairs(A, cfg).values
        assert np.array_equal(a, b)

    def test_exact_multiplicities_recovered(self, rng):
        d = np.concatenate([[1.0], [2.0, 2.0, 2.0], np.arange(3.0, 49.0)])
        Qr, _ = np.linalg.qr(rng.standard_normal((d.size, d.size)))
        S = Qr @ np.diag(d) @ Qr.T
        S = (S + S.T) / 2
        res = smallest_eigenpairs(dense_to_sparse(S),
                                  SolverConfig(k=6, tol=1e-9, seed=0))
        assert np.allclose(res.values, [1, 2, 2, 2, 3, 4], atol=1e-8)

    def test_oscillator_against_dense_oracle(self):
        grid = GridSpec(1, 6.0, 12)
        Q = assemble_oscillator_sos(grid)
        res = smallest_eigenpairs(
            Q, SolverConfig(k=40, tol=1e-9, seed=1, max_subspace=400))
        dense = np.linalg.eigvalsh(Q.to_dense())[:40]
        assert res.converged
        assert np.max(np.abs(res.values - dense)) < 1e-9

    def test_rejects_bad_k(self):
        A = dense_to_sparse(np.eye(10))
        with pytest.raises(ValueError):
            smallest_eigenpairs(A, SolverConfig(k=10))
        with pytest.raises(ValueError):
            smallest_eigenpairs(A, SolverConfig(k=0))
