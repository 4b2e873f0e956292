import numpy as np
import pytest

from tstmr.linalg import SparseMatrix
from tstmr.mmio import (read_matrix_market, read_vector, write_matrix_market,
                        write_vector)

from conftest import random_sparse


def test_roundtrip_general(tmp_path, rng):
    A, M = random_sparse(6, 4, rng)
    path = tmp_path / "a.mtx"
    write_matrix_market(path, A)
    B = read_matrix_market(path)
    np.testing.assert_allclose(B.to_dense(), M, rtol=1e-15)


def test_roundtrip_symmetric(tmp_path, rng):
    M = rng.standard_normal((5, 5))
    M = M + M.T
    A = SparseMatrix.from_dense(M)
    path = tmp_path / "s.mtx"
    write_matrix_market(path, A, symmetric=True)
    # only the lower triangle is stored on disk
    stored = sum(1 for line in open(path) if not line.startswith("%")) - 1
    assert stored == (A.nnz + 5) // 2
    B = read_matrix_market(path)
    np.testing.assert_allclose(B.to_dense(), M, rtol=1e-15)


def test_one_based_indices_on_disk(tmp_path):
    A = SparseMatrix.from_coo(2, 2, [0], [1], [3.5])
    path = tmp_path / "i.mtx"
    write_matrix_market(path, A)
    lines = [ln for ln in open(path) if not ln.startswith("%")]
    assert lines[1].split() == ["1", "2", "3.5"]


def test_reads_comments_and_integer_field(tmp_path):
    path = tmp_path / "c.mtx"
    path.write_text("%%MatrixMarket matrix coordinate integer general\n"
                    "% a comment\n"
                    "2 2 2\n"
                    "1 1 2\n"
                    "2 2 -7\n")
    A = read_matrix_market(path)
    np.testing.assert_array_equal(A.to_dense(), [[2, 0], [0, -7]])


@pytest.mark.parametrize("header", [
    "%%MatrixMarket matrix array real general\n1 1\n1.0\n",
    "%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n",
    "%%MatrixMarket matrix coordinate real hermitian\n1 1 1\n1 1 1\n",
    "not a matrix market file\n",
])
def test_bad_headers_rejected(tmp_path, header):
    path = tmp_path / "bad.mtx"
    path.write_text(header)
    with pytest.raises(ValueError):
        read_matrix_market(path)


def test_entry_count_mismatch_rejected(tmp_path):
    path = tmp_path / "short.mtx"
    path.write_text("%%MatrixMarket matrix coordinate real general\n"
                    "2 2 2\n1 1 1.0\n")
    with pytest.raises(ValueError):
        read_matrix_market(path)


def test_vector_roundtrip(tmp_path, rng):
    v = rng.standard_normal(9)
    path = tmp_path / "v.txt"
    write_vector(path, v)
    np.testing.assert_allclose(read_vector(path), v, rtol=1e-15)


def test_generated_matrix_export_roundtrip(tmp_path):
    from tstmr.problems import phillips
    A = phillips(16).matrix
    path = tmp_path / "phillips.mtx"
    write_matrix_market(path, A, symmetric=True)
    B = read_matrix_market(path)
    np.testing.assert_allclose(B.to_dense(), A.to_dense(), rtol=1e-15)
