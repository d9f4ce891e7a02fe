# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: CSR matrix-vector product.

The shift-inverted Lanczos run spends nearly all of its time in
matvecs issued by the inner conjugate-gradient solves, so this one
kernel is the only thing worth compiling.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def csr_matvec(const int[::1] indptr, const int[::1] indices,
               const double[::1] data, const double[::1] x,
               double[::1] out):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t i, j, lo, hi
    cdef double acc
    for i in range(n):
        lo = indptr[i]
        hi = indptr[i + 1]
        acc = 0.0
        for j in range(lo, hi):
            acc += data[j] * x[indices[j]]
        out[i] = acc
