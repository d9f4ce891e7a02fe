"""Compressed-sparse-row matrices with just the operations the lab needs.

Assembly happens in COO triplets (vectorized, duplicates allowed) and is
finalized into CSR with exact duplicate summation.  The matvec goes through
``kernels.csr_matvec`` so a compiled extension can take over the hot loop.
"""

from __future__ import annotations

import numpy as np

from . import kernels

INDEX_DTYPE = np.int32


def coo_to_csr(n_rows, n_cols, rows, cols, vals):
    """Sort triplets, sum duplicates, return (indptr, indices, data)."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.float64)
    if rows.shape != cols.shape or rows.shape != vals.shape:
        raise ValueError("COO triplet arrays must have identical shapes")
    if rows.size and (rows.min() < 0 or rows.max() >= n_rows
                      or cols.min() < 0 or cols.max() >= n_cols):
        raise ValueError("COO index out of range")
    key = rows * n_cols + cols
    order = np.argsort(key, kind="stable")
    key = key[order]
    vals = vals[order]
    if key.size:
        starts = np.flatnonzero(np.concatenate(([True], key[1:] != key[:-1])))
        data = np.add.reduceat(vals, starts)
        ukey = key[starts]
    else:
        data = vals
        ukey = key
    urows = (ukey // n_cols).astype(np.int64)
    ucols = (ukey % n_cols).astype(INDEX_DTYPE)
    indptr = np.zeros(n_rows + 1, dtype=INDEX_DTYPE)
    np.add.at(indptr, urows + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr, ucols, data


class CsrMatrix:
    """Real CSR matrix; rows sorted, column indices sorted within each row."""

    def __init__(self, shape, indptr, indices, data):
        self.shape = (int(shape[0]), int(shape[1]))
        self.indptr = np.ascontiguousarray(indptr, dtype=INDEX_DTYPE)
        self.indices = np.ascontiguousarray(indices, dtype=INDEX_DTYPE)
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        if self.indptr.shape[0] != self.shape[0] + 1:
            raise ValueError("indptr length does not match row count")
        if self.indices.shape[0] != self.data.shape[0]:
            raise ValueError("indices/data length mismatch")

    @classmethod
    def from_coo(cls, shape, rows, cols, vals):
        indptr, indices, data = coo_to_csr(shape[0], shape[1], rows, cols, vals)
        return cls(shape, indptr, indices, data)

    @property
    def nnz(self):
        return int(self.data.shape[0])

    def row_nnz(self):
        return np.diff(self.indptr)

    def matvec(self, x, out=None):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.shape[1],):
            raise ValueError(
                f"matvec length mismatch: matrix is {self.shape}, vector has shape {x.shape}")
        if out is None:
            out = np.empty(self.shape[0], dtype=np.float64)
        kernels.csr_matvec(self.indptr, self.indices, self.data,
                           np.ascontiguousarray(x), out)
        return out

    def __matmul__(self, x):
        return self.matvec(x)

    def diagonal(self):
        d = np.zeros(min(self.shape), dtype=np.float64)
        rows = np.repeat(np.arange(self.shape[0], dtype=np.int64),
                         np.diff(self.indptr))
        on_diag = rows == self.indices
        d[rows[on_diag]] = self.data[on_diag]
        return d

    def transpose(self):
        rows = np.repeat(np.arange(self.shape[0], dtype=np.int64),
                         np.diff(self.indptr))
        return CsrMatrix.from_coo((self.shape[1], self.shape[0]),
                                  self.indices.astype(np.int64), rows, self.data)

    def symmetry_defect(self):
        """max |A - A^T|, computed from sorted triplets (no dense form)."""
        if self.shape[0] != self.shape[1]:
            raise ValueError("symmetry defect needs a square matrix")
        t = self.transpose()
        if (t.indptr.shape == self.indptr.shape
                and np.array_equal(t.indptr, self.indptr)
                and np.array_equal(t.indices, self.indices)):
            return float(np.max(np.abs(self.data - t.data))) if self.nnz else 0.0
        # Structurally asymmetric: compare via the union of patterns.
        n = self.shape[0]
        key_a = self._keys(n)
        key_b = t._keys(n)
        allk = np.union1d(key_a, key_b)
        va = np.zeros(allk.shape[0])
        vb = np.zeros(allk.shape[0])
        va[np.searchsorted(allk, key_a)] = self.data
        vb[np.searchsorted(allk, key_b)] = t.data
        return float(np.max(np.abs(va - vb))) if allk.size else 0.0

    def _keys(self, n):
        rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(self.indptr))
        return rows * n + self.indices.astype(np.int64)

    def to_dense(self):
        out = np.zeros(self.shape)
        rows = np.repeat(np.arange(self.shape[0]), np.diff(self.indptr))
        out[rows, self.indices] = self.data
        return out

    def scaled(self, factor):
        return CsrMatrix(self.shape, self.indptr, self.indices, self.data * factor)


class SparseSymmetricMatrix(CsrMatrix):
    """CSR matrix asserted symmetric; both triangles stored explicitly."""

    def __init__(self, shape, indptr, indices, data, check=False):
        super().__init__(shape, indptr, indices, data)
        if shape[0] != shape[1]:
            raise ValueError("symmetric matrix must be square")
        if check and self.symmetry_defect() != 0.0:
            raise ValueError("matrix is not exactly symmetric")

    @classmethod
    def from_coo(cls, shape, rows, cols, vals, check=False):
        indptr, indices, data = coo_to_csr(shape[0], shape[1], rows, cols, vals)
        return cls(shape, indptr, indices, data, check=check)


def write_matrix_market(path, mat: CsrMatrix, symmetric=True):
    """Coordinate-format Matrix Market export (lower triangle if symmetric)."""
    rows = np.repeat(np.arange(mat.shape[0], dtype=np.int64),
                     np.diff(mat.indptr))
    cols = mat.indices.astype(np.int64)
    vals = mat.data
    if symmetric:
        keep = rows >= cols
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
        kind = "symmetric"
    else:
        kind = "general"
    with open(path, "w") as fh:
        fh.write(f"%%MatrixMarket matrix coordinate real {kind}\n")
        fh.write(f"{mat.shape[0]} {mat.shape[1]} {len(vals)}\n")
        np.savetxt(fh, np.column_stack((rows + 1, cols + 1, vals)),
                   fmt="%d %d %.17g")


def read_matrix_market(path):
    """Read a real coordinate Matrix Market file written by this package."""
    with open(path) as fh:
        header = fh.readline().strip().split()
        if header[:4] != ["%%MatrixMarket", "matrix", "coordinate", "real"]:
            raise ValueError("unsupported Matrix Market header")
        symmetric = header[4] == "symmetric"
        line = fh.readline()
        while line.startswith("%"):
            line = fh.readline()
        n_rows, n_cols, nnz = (int(tok) for tok in line.split())
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz, dtype=np.float64)
        for k in range(nnz):
            i, j, v = fh.readline().split()
            rows[k], cols[k], vals[k] = int(i) - 1, int(j) - 1, float(v)
    if symmetric:
        off = rows != cols
        full_rows = np.concatenate([rows, cols[off]])
        full_cols = np.concatenate([cols, rows[off]])
        full_vals = np.concatenate([vals, vals[off]])
        return SparseSymmetricMatrix.from_coo((n_rows, n_cols),
                                              full_rows, full_cols, full_vals)
    return CsrMatrix.from_coo((n_rows, n_cols), rows, cols, vals)
