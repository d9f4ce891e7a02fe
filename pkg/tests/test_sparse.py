import numpy as np
import pytest
import scipy.io
import scipy.sparse

from heisenlab import kernels
from heisenlab.sparse import (CsrMatrix, SparseSymmetricMatrix,
                              read_matrix_market, write_matrix_market)


def random_csr(rng, n=40, density=0.1):
    mask = rng.random((n, n)) < density
    M = np.where(mask, rng.standard_normal((n, n)), 0.0)
    rows, cols = np.nonzero(M)
    return M, CsrMatrix.from_coo((n, n), rows, cols, M[rows, cols])


def test_coo_duplicates_are_summed():
    mat = CsrMatrix.from_coo((3, 3), [0, 0, 1, 2], [1, 1, 2, 0],
                             [2.0, 3.0, 1.0, -1.0])
    dense = mat.to_dense()
    assert dense[0, 1] == 5.0
    assert mat.nnz == 3


def test_matvec_against_scipy_oracle(rng):
    for _ in range(5):
        M, mat = random_csr(rng)
        x = rng.standard_normal(40)
        want = scipy.sparse.csr_matrix(M) @ x
        assert np.max(np.abs(mat.matvec(x) - want)) < 1e-14


def test_matvec_zero_and_diagonal(rng):
    zero = CsrMatrix.from_coo((4, 4), [], [], [])
    assert np.all(zero.matvec(np.ones(4)) == 0.0)
    d = np.array([2.0, -1.0, 0.5, 3.0])
    rows = np.arange(4)
    diag = CsrMatrix.from_coo((4, 4), rows, rows, d)
    x = rng.standard_normal(4)
    assert np.array_equal(diag.matvec(x), d * x)


def test_matvec_length_mismatch():
    mat = CsrMatrix.from_coo((3, 3), [0], [0], [1.0])
    with pytest.raises(ValueError):
        mat.matvec(np.ones(4))


def test_kernel_backends_agree(rng):
    M, mat = random_csr(rng, n=60, density=0.15)
    x = rng.standard_normal(60)
    a = kernels.csr_matvec_numpy(mat.indptr, mat.indices, mat.data, x,
                                 np.empty(60))
    if kernels.HAVE_COMPILED:
        b = kernels.csr_matvec_compiled(mat.indptr, mat.indices, mat.data, x,
                                        np.empty(60))
        assert np.max(np.abs(a - b)) < 1e-15
    want = M @ x
    assert np.max(np.abs(a - want)) < 1e-13


def test_numpy_kernel_handles_empty_rows():
    # row 1 empty: reduceat needs the explicit fix-up
    mat = CsrMatrix.from_coo((3, 3), [0, 2], [1, 0], [4.0, 2.0])
    out = kernels.csr_matvec_numpy(mat.indptr, mat.indices, mat.data,
                                   np.array([1.0, 1.0, 1.0]), np.empty(3))
    assert np.array_equal(out, [4.0, 0.0, 2.0])


def test_symmetry_defect(rng):
    n = 20
    M = rng.standard_normal((n, n))
    S = M + M.T
    rows, cols = np.nonzero(S)
    sym = CsrMatrix.from_coo((n, n), rows, cols, S[rows, cols])
    assert sym.symmetry_defect() == 0.0
    A = S.copy()
    A[3, 7] += 0.25
    rows, cols = np.nonzero(A)
    asym = CsrMatrix.from_coo((n, n), rows, cols, A[rows, cols])
    assert asym.symmetry_defect() == pytest.approx(0.25, abs=1e-14)


def test_diagonal_extraction(rng):
    M, mat = random_csr(rng)
    assert np.array_equal(mat.diagonal(), np.diag(M))


def test_symmetric_constructor_checks():
    with pytest.raises(ValueError):
        SparseSymmetricMatrix.from_coo((2, 2), [0], [1], [1.0], check=True)


def test_matrix_market_round_trip(tmp_path, rng):
    n = 15
    M = rng.standard_normal((n, n))
    S = M + M.T
    rows, cols = np.nonzero(S)
    mat = SparseSymmetricMatrix.from_coo((n, n), rows, cols, S[rows, cols])
    path = tmp_path / "mat.mtx"
    write_matrix_market(path, mat, symmetric=True)
    back = read_matrix_market(path)
    assert np.max(np.abs(back.to_dense() - S)) < 1e-15
    # independent reader oracle
    via_scipy = scipy.io.mmread(str(path)).toarray()
    assert np.max(np.abs(via_scipy - S)) < 1e-15
