import numpy as np
import pytest

from tstmr.linalg import SparseMatrix


def tridiag(n, lo, d, hi):
    """Dense tridiagonal matrix with constant bands."""
    M = np.zeros((n, n))
    np.fill_diagonal(M, d)
    np.fill_diagonal(M[1:], lo)
    np.fill_diagonal(M[:, 1:], hi)
    return M


def random_dd_dense(n, rng, dominance=2.0):
    """Random strictly diagonally dominant dense matrix."""
    M = rng.standard_normal((n, n))
    M += np.diag(np.sign(np.diag(M)) * (dominance + np.abs(M).sum(axis=1)))
    return M


def random_sparse(nrows, ncols, rng, density=0.3):
    mask = rng.random((nrows, ncols)) < density
    M = np.where(mask, rng.standard_normal((nrows, ncols)), 0.0)
    return SparseMatrix.from_dense(M), M


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
