"""Backend parity and raw-kernel behavior."""

import numpy as np
import pytest

from tstmr._kernels import available_backends, backend_module
from tstmr.linalg import SparseMatrix

from conftest import random_sparse

BACKENDS = available_backends()


def _csr_arrays(A):
    return A.row_starts, A.col_indices, A.values


@pytest.mark.parametrize("backend", BACKENDS)
def test_matvec_identity(backend):
    mod = backend_module(backend)
    A = SparseMatrix.identity(3)
    x = np.array([1.0, 2.0, 3.0])
    out = np.empty(3)
    mod.csr_matvec(*_csr_arrays(A), x, out)
    np.testing.assert_array_equal(out, x)


@pytest.mark.parametrize("backend", BACKENDS)
def test_matvec_empty_rows(backend):
    mod = backend_module(backend)
    # rows 0 and 2 empty
    A = SparseMatrix.from_coo(4, 4, [1, 3, 3], [0, 1, 3], [2.0, -1.0, 5.0])
    x = np.array([1.0, 2.0, 3.0, 4.0])
    out = np.empty(4)
    mod.csr_matvec(*_csr_arrays(A), x, out)
    np.testing.assert_allclose(out, A.to_dense() @ x)


def test_backends_agree(rng):
    if len(BACKENDS) < 2:
        pytest.skip("compiled backend not available")
    py = backend_module("python")
    cy = backend_module("cython")
    A, M = random_sparse(40, 40, rng, density=0.2)
    x = rng.standard_normal(40)
    out_py, out_cy = np.empty(40), np.empty(40)
    py.csr_matvec(*_csr_arrays(A), x, out_py)
    cy.csr_matvec(*_csr_arrays(A), x, out_cy)
    np.testing.assert_allclose(out_py, out_cy, rtol=1e-13, atol=1e-15)


@pytest.mark.parametrize("backend", BACKENDS)
def test_matvec_trailing_empty_row(backend):
    mod = backend_module(backend)
    # last row empty: its start index equals nnz
    A = SparseMatrix.from_coo(2, 2, [0, 0], [0, 1], [2.0, -3.0])
    x = np.array([1.0, 1.0])
    out = np.empty(2)
    mod.csr_matvec(*_csr_arrays(A), x, out)
    np.testing.assert_allclose(out, [-1.0, 0.0])


@pytest.mark.parametrize("backend", BACKENDS)
def test_lower_solve_roundtrip(backend, rng):
    mod = backend_module(backend)
    n = 20
    L = np.tril(rng.standard_normal((n, n)))
    np.fill_diagonal(L, 2.0 + rng.random(n))
    Ls = SparseMatrix.from_dense(L)
    b = rng.standard_normal(n)
    out = np.empty(n)
    assert mod.csr_lower_solve(*_csr_arrays(Ls), b, out) == -1
    np.testing.assert_allclose(L @ out, b, rtol=1e-12, atol=1e-12)
    out2 = np.empty(n)
    assert mod.csr_lower_transpose_solve(*_csr_arrays(Ls), b, out2) == -1
    np.testing.assert_allclose(L.T @ out2, b, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
def test_lower_solve_zero_diag_reports_row(backend):
    mod = backend_module(backend)
    rs = np.array([0, 1, 3], dtype=np.int64)
    ci = np.array([0, 0, 1], dtype=np.int64)
    vals = np.array([1.0, 3.0, 0.0])
    out = np.empty(2)
    assert mod.csr_lower_solve(rs, ci, vals, np.ones(2), out) == 1
    assert mod.csr_lower_transpose_solve(rs, ci, vals, np.ones(2), out) == 1


def test_factor_backends_agree(rng):
    if len(BACKENDS) < 2:
        pytest.skip("compiled backend not available")
    from tstmr.splittings import ic0, ilu0
    import tstmr._kernels as kernels

    n = 30
    M = rng.standard_normal((n, n)) * (rng.random((n, n)) < 0.25)
    M = M + M.T + np.diag(10.0 + rng.random(n))
    H = SparseMatrix.from_dense(M)

    saved = (kernels.ic0_factor, kernels.ilu0_factor)
    results = {}
    for name in BACKENDS:
        mod = backend_module(name)
        kernels.ic0_factor = mod.ic0_factor
        kernels.ilu0_factor = mod.ilu0_factor
        try:
            results[name] = (ic0(H).lower_csr().to_dense(),
                             ilu0(H)._arrays[2].copy())
        finally:
            kernels.ic0_factor, kernels.ilu0_factor = saved
    np.testing.assert_allclose(results["python"][0], results["cython"][0],
                               rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(results["python"][1], results["cython"][1],
                               rtol=1e-13, atol=1e-15)
