import numpy as np
import pytest

from heisenlab.sparse import SparseSymmetricMatrix


def dense_to_sparse(M):
    n = M.shape[0]
    rows, cols = np.nonzero(M)
    return SparseSymmetricMatrix.from_coo((n, n), rows, cols, M[rows, cols])


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
