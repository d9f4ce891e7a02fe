"""Kernel dispatch: compiled extension if available, numpy fallback otherwise.

The compiled module is optional; everything works (more slowly) without it.
``bench/bench_matvec.py`` compares the two implementations head to head.
"""

import numpy as np

try:
    from . import _kernels

    HAVE_COMPILED = True
except ImportError:  # extension not built
    _kernels = None
    HAVE_COMPILED = False


def backend() -> str:
    return "compiled" if HAVE_COMPILED else "numpy"


def csr_matvec_numpy(indptr, indices, data, x, out):
    """Pure-numpy CSR matvec (gather, multiply, segmented sum)."""
    if len(data) == 0:
        out[:] = 0.0
        return out
    prods = data * x[indices]
    # reduceat copies the element at indptr[i] for empty rows; zero them after.
    sums = np.add.reduceat(prods, indptr[:-1])
    empty = indptr[:-1] == indptr[1:]
    if empty.any():
        sums[empty] = 0.0
    out[:] = sums
    return out


def csr_matvec_compiled(indptr, indices, data, x, out):
    _kernels.csr_matvec(indptr, indices, data, x, out)
    return out


if HAVE_COMPILED:
    csr_matvec = csr_matvec_compiled
else:
    csr_matvec = csr_matvec_numpy
