"""Matrix Market coordinate I/O for SparseMatrix (real, general or
symmetric; 1-based indices on disk, 0-based in memory)."""

import numpy as np

from .linalg import SparseMatrix

__all__ = ["read_matrix_market", "write_matrix_market",
           "read_vector", "write_vector"]


def read_matrix_market(path):
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip().split()
        if (len(header) != 5 or header[0] != "%%MatrixMarket"
                or header[1].lower() != "matrix"):
            raise ValueError(f"{path}: not a Matrix Market matrix file")
        fmt, field, symmetry = (h.lower() for h in header[2:])
        if fmt != "coordinate":
            raise ValueError(f"{path}: only coordinate format is supported")
        if field not in ("real", "integer"):
            raise ValueError(f"{path}: only real matrices are supported")
        if symmetry not in ("general", "symmetric"):
            raise ValueError(f"{path}: unsupported symmetry {symmetry!r}")
        line = fh.readline()
        while line and line.lstrip().startswith("%"):
            line = fh.readline()
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"{path}: malformed size line")
        nrows, ncols, nnz = (int(p) for p in parts)
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz)
        k = 0
        for line in fh:
            line = line.strip()
            if not line or line.startswith("%"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"{path}: malformed entry line {line!r}")
            if k >= nnz:
                raise ValueError(f"{path}: more entries than declared")
            rows[k] = int(parts[0]) - 1
            cols[k] = int(parts[1]) - 1
            vals[k] = float(parts[2])
            k += 1
        if k != nnz:
            raise ValueError(f"{path}: expected {nnz} entries, found {k}")
    if symmetry == "symmetric":
        off = rows != cols
        rows = np.concatenate([rows, cols[off]])
        cols = np.concatenate([cols, rows[:nnz][off]])
        vals = np.concatenate([vals, vals[off]])
    return SparseMatrix.from_coo(nrows, ncols, rows, cols, vals)


def write_matrix_market(path, A, symmetric=False, comment=""):
    """Write a SparseMatrix in coordinate format; with symmetric=True only
    the lower triangle is stored (caller asserts symmetry)."""
    rows = np.repeat(np.arange(A.nrows, dtype=np.int64), np.diff(A.row_starts))
    cols = A.col_indices
    vals = A.values
    if symmetric:
        keep = rows >= cols
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
    sym = "symmetric" if symmetric else "general"
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"%%MatrixMarket matrix coordinate real {sym}\n")
        if comment:
            fh.write(f"%{comment}\n")
        fh.write(f"{A.nrows} {A.ncols} {len(vals)}\n")
        for r, c, v in zip(rows, cols, vals):
            fh.write(f"{r + 1} {c + 1} {v:.17g}\n")


def read_vector(path):
    """Plain-text vector, one value per line; blank lines ignored."""
    with open(path, "r", encoding="ascii") as fh:
        vals = [float(t) for t in fh.read().split()]
    return np.asarray(vals)


def write_vector(path, v):
    with open(path, "w", encoding="ascii") as fh:
        for x in np.asarray(v).ravel():
            fh.write(f"{x:.17g}\n")
