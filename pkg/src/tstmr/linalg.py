"""Core dense/sparse kernels: CSR storage, products, splittings, small
eigen-solvers and the 2x2 Gram solve used by the two-dimensional
minimum-residual step.
"""

import warnings

import numpy as np
import scipy.linalg

from . import _kernels

__all__ = [
    "SparseMatrix", "Gram2", "GramSingular", "SingularMatrix",
    "as_vector", "spmv", "spmv_t", "split_hs", "gram2_solve",
    "dense_lu_solve", "sym_eigs_dense", "lanczos_extreme", "power_norm",
]

# relative determinant threshold below which the Gram system is singular
GRAM_DET_EPS = 1e-14


class GramSingular(Exception):
    """The 2x2 Gram system is numerically singular (proportional columns)."""


class SingularMatrix(Exception):
    """A factorization met a numerically zero pivot."""

    def __init__(self, row, message=None):
        self.row = row
        super().__init__(message or f"numerically singular pivot in row {row}")


def as_vector(x, name="vector"):
    """Coerce to a finite float64 1-D array; reject NaN/Inf."""
    v = np.ascontiguousarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


class SparseMatrix:
    """Immutable CSR matrix with sorted columns and no stored zeros."""

    __slots__ = ("nrows", "ncols", "row_starts", "col_indices", "values", "_t")

    def __init__(self, nrows, ncols, row_starts, col_indices, values, check=True):
        self.nrows = int(nrows)
        self.ncols = int(ncols)
        self.row_starts = np.ascontiguousarray(row_starts, dtype=np.int64)
        self.col_indices = np.ascontiguousarray(col_indices, dtype=np.int64)
        self.values = np.ascontiguousarray(values, dtype=np.float64)
        self._t = None
        if check:
            self._validate()
        if self.values.size and np.any(self.values == 0.0):
            pruned = _prune_zeros(self)
            self.row_starts = pruned.row_starts
            self.col_indices = pruned.col_indices
            self.values = pruned.values

    def _validate(self):
        rs, ci, v = self.row_starts, self.col_indices, self.values
        if rs.shape != (self.nrows + 1,):
            raise ValueError("row_starts must have length nrows+1")
        if rs[0] != 0 or rs[-1] != ci.shape[0] or ci.shape[0] != v.shape[0]:
            raise ValueError("inconsistent CSR index arrays")
        if np.any(np.diff(rs) < 0):
            raise ValueError("row_starts must be nondecreasing")
        if ci.size:
            if ci.min() < 0 or ci.max() >= self.ncols:
                raise ValueError("column index out of range")
            inc = ci[1:] > ci[:-1]
            boundary = np.zeros(ci.size - 1, dtype=bool)
            inner = rs[1:-1]
            boundary[inner[(inner > 0) & (inner < ci.size)] - 1] = True
            if not np.all(inc | boundary):
                raise ValueError("columns must be strictly increasing per row")
        if not np.all(np.isfinite(v)):
            raise ValueError("matrix values contain non-finite entries")

    @property
    def nnz(self):
        return self.values.shape[0]

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    @classmethod
    def from_coo(cls, nrows, ncols, rows, cols, vals):
        """Build from coordinate triplets; duplicates are summed, exact
        zeros pruned."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if not (rows.shape == cols.shape == vals.shape):
            raise ValueError("coordinate arrays must have equal length")
        if not np.all(np.isfinite(vals)):
            raise ValueError("matrix values contain non-finite entries")
        if rows.size:
            if rows.min() < 0 or rows.max() >= nrows:
                raise ValueError("row index out of range")
            if cols.min() < 0 or cols.max() >= ncols:
                raise ValueError("column index out of range")
            order = np.lexsort((cols, rows))
            rows, cols, vals = rows[order], cols[order], vals[order]
            key = rows * np.int64(ncols) + cols
            first = np.ones(key.size, dtype=bool)
            first[1:] = key[1:] != key[:-1]
            starts = np.flatnonzero(first)
            summed = np.add.reduceat(vals, starts)
            rows, cols, vals = rows[starts], cols[starts], summed
            keep = vals != 0.0
            rows, cols, vals = rows[keep], cols[keep], vals[keep]
        row_starts = np.zeros(nrows + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=nrows), out=row_starts[1:])
        return cls(nrows, ncols, row_starts, cols, vals, check=False)

    @classmethod
    def from_dense(cls, M):
        M = np.asarray(M, dtype=np.float64)
        rows, cols = np.nonzero(M)
        return cls.from_coo(M.shape[0], M.shape[1], rows, cols, M[rows, cols])

    @classmethod
    def identity(cls, n):
        idx = np.arange(n, dtype=np.int64)
        return cls(n, n, np.arange(n + 1, dtype=np.int64), idx,
                   np.ones(n), check=False)

    @classmethod
    def diagonal(cls, d):
        d = as_vector(d, "diagonal")
        n = d.shape[0]
        return cls.from_coo(n, n, np.arange(n), np.arange(n), d)

    def to_dense(self):
        M = np.zeros((self.nrows, self.ncols))
        rows = np.repeat(np.arange(self.nrows), np.diff(self.row_starts))
        M[rows, self.col_indices] = self.values
        return M

    def transpose(self):
        """Transposed copy (cached; matrices are immutable)."""
        if self._t is None:
            rows = np.repeat(np.arange(self.nrows, dtype=np.int64),
                             np.diff(self.row_starts))
            self._t = SparseMatrix.from_coo(
                self.ncols, self.nrows, self.col_indices, rows, self.values)
        return self._t

    def diag(self):
        """Diagonal as a dense vector (zeros where no entry is stored)."""
        d = np.zeros(min(self.nrows, self.ncols))
        rows = np.repeat(np.arange(self.nrows, dtype=np.int64),
                         np.diff(self.row_starts))
        on = rows == self.col_indices
        d[rows[on]] = self.values[on]
        return d

    def scale(self, c):
        return SparseMatrix(self.nrows, self.ncols, self.row_starts,
                            self.col_indices, c * self.values, check=False)

    def add_scaled_identity(self, c):
        """Return self + c*I (square matrices)."""
        if self.nrows != self.ncols:
            raise ValueError("matrix must be square")
        rows = np.repeat(np.arange(self.nrows, dtype=np.int64),
                         np.diff(self.row_starts))
        n = self.nrows
        return SparseMatrix.from_coo(
            n, n,
            np.concatenate([rows, np.arange(n, dtype=np.int64)]),
            np.concatenate([self.col_indices, np.arange(n, dtype=np.int64)]),
            np.concatenate([self.values, np.full(n, float(c))]))

    def __repr__(self):
        return f"SparseMatrix({self.nrows}x{self.ncols}, nnz={self.nnz})"


def _prune_zeros(A):
    rows = np.repeat(np.arange(A.nrows, dtype=np.int64), np.diff(A.row_starts))
    keep = A.values != 0.0
    return SparseMatrix.from_coo(A.nrows, A.ncols, rows[keep],
                                 A.col_indices[keep], A.values[keep])


def spmv(A, x):
    """y = A @ x with row-wise accumulation."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (A.ncols,):
        raise ValueError(f"x has length {x.shape[0]}, expected {A.ncols}")
    y = np.empty(A.nrows)
    _kernels.csr_matvec(A.row_starts, A.col_indices, A.values, x, y)
    return y


def spmv_t(A, x):
    """y = A.T @ x, computed as spmv on the cached explicit transpose."""
    if np.shape(x) != (A.nrows,):
        raise ValueError(f"x has length {np.shape(x)[0]}, expected {A.nrows}")
    return spmv(A.transpose(), x)


def split_hs(A):
    """Symmetric/skew-symmetric parts: H = (A + A.T)/2, S = (A - A.T)/2."""
    if A.nrows != A.ncols:
        raise ValueError("split_hs requires a square matrix")
    rows = np.repeat(np.arange(A.nrows, dtype=np.int64), np.diff(A.row_starts))
    cols = A.col_indices
    half = 0.5 * A.values
    H = SparseMatrix.from_coo(A.nrows, A.ncols,
                              np.concatenate([rows, cols]),
                              np.concatenate([cols, rows]),
                              np.concatenate([half, half]))
    S = SparseMatrix.from_coo(A.nrows, A.ncols,
                              np.concatenate([rows, cols]),
                              np.concatenate([cols, rows]),
                              np.concatenate([half, -half]))
    return H, S


class Gram2:
    """Symmetric 2x2 Gram system built from search directions.

    m11, m22 are squared norms of the mapped directions, m12 their inner
    product, rhs the projections of the residual.
    """

    __slots__ = ("m11", "m12", "m22", "rhs1", "rhs2")

    def __init__(self, m11, m12, m22, rhs1, rhs2):
        if m11 < 0 or m22 < 0:
            raise ValueError("diagonal Gram entries are squared norms, >= 0")
        self.m11 = float(m11)
        self.m12 = float(m12)
        self.m22 = float(m22)
        self.rhs1 = float(rhs1)
        self.rhs2 = float(rhs2)

    @classmethod
    def from_vectors(cls, Ad1, Ad2, r):
        return cls(np.dot(Ad1, Ad1), np.dot(Ad2, Ad1), np.dot(Ad2, Ad2),
                   np.dot(r, Ad1), np.dot(r, Ad2))

    def __repr__(self):
        return (f"Gram2(m11={self.m11:g}, m12={self.m12:g}, m22={self.m22:g}, "
                f"rhs=({self.rhs1:g}, {self.rhs2:g}))")


def gram2_solve(g):
    """Solve the 2x2 Gram system by explicit inversion.

    Raises GramSingular when det <= GRAM_DET_EPS * m11 * m22 (relative,
    dimensionless test); the caller recovers via the proportional-direction
    closed form.
    """
    det = g.m11 * g.m22 - g.m12 * g.m12
    if det <= GRAM_DET_EPS * g.m11 * g.m22:
        raise GramSingular(f"relative determinant {det:g} below threshold")
    b1 = (g.m22 * g.rhs1 - g.m12 * g.rhs2) / det
    b2 = (g.m11 * g.rhs2 - g.m12 * g.rhs1) / det
    return b1, b2


def dense_lu_solve(M, b):
    """Solve M x = b by LU with partial pivoting (dense)."""
    M = np.asarray(M, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("M must be square")
    if b.shape != (M.shape[0],):
        raise ValueError("right-hand side has wrong length")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(M)
    small = np.abs(np.diag(lu)) < 1e-300
    if np.any(small):
        raise SingularMatrix(int(np.argmax(small)))
    return scipy.linalg.lu_solve((lu, piv), b)


def sym_eigs_dense(M):
    """All eigenvalues of a symmetric dense matrix, ascending."""
    M = np.asarray(M, dtype=np.float64)
    nrm = np.linalg.norm(M, "fro")
    if np.linalg.norm(M - M.T, "fro") > 1e-12 * max(nrm, 1e-300):
        raise ValueError("matrix is not symmetric to tolerance")
    return np.linalg.eigvalsh(M)


def _apply(op, v):
    if isinstance(op, np.ndarray):
        return op @ v
    if isinstance(op, SparseMatrix):
        return spmv(op, v)
    return op.apply(v)


def _apply_t(op, v):
    if isinstance(op, np.ndarray):
        return op.T @ v
    if isinstance(op, SparseMatrix):
        return spmv_t(op, v)
    return op.apply_t(v)


def _op_dims(op):
    if isinstance(op, np.ndarray):
        return op.shape
    if isinstance(op, SparseMatrix):
        return op.nrows, op.ncols
    return op.nrows, op.ncols


def lanczos_extreme(op, iters, seed=0):
    """Extreme Ritz values of a symmetric operator.

    Runs `iters` Lanczos steps with full reorthogonalization from a seeded
    random unit start; on breakdown (zero Lanczos vector) the current Ritz
    extremes are returned.  Both estimates lie inside the true spectrum
    interval.
    """
    if iters < 2:
        raise ValueError("iters must be >= 2")
    n = _op_dims(op)[1]
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    basis = np.empty((iters, n))
    basis[0] = v
    alphas, betas = [], []
    for j in range(iters):
        w = _apply(op, basis[j])
        alpha = float(np.dot(basis[j], w))
        alphas.append(alpha)
        w -= alpha * basis[j]
        if j > 0:
            w -= betas[-1] * basis[j - 1]
        # full reorthogonalization, one classical Gram-Schmidt pass
        w -= basis[:j + 1].T @ (basis[:j + 1] @ w)
        beta = float(np.linalg.norm(w))
        if j == iters - 1:
            break
        if beta <= 1e-13 * max(1.0, max(abs(a) for a in alphas)):
            break
        betas.append(beta)
        basis[j + 1] = w / beta
    ritz = scipy.linalg.eigh_tridiagonal(
        np.asarray(alphas), np.asarray(betas), eigvals_only=True)
    return float(ritz[0]), float(ritz[-1])


def power_norm(op, iters, seed=0):
    """Power-iteration estimate of the 2-norm (a lower bound).

    Iterates v <- op.T(op(v)) from a seeded random unit start and returns
    ||op v|| for the last unit iterate.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    n = _op_dims(op)[1]
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return 0.0
    v /= nv
    sigma = 0.0
    for _ in range(iters):
        w = _apply(op, v)
        sigma = float(np.linalg.norm(w))
        if sigma == 0.0:
            return 0.0
        u = _apply_t(op, w)
        nu = np.linalg.norm(u)
        if nu == 0.0:
            return sigma
        v = u / nu
    return sigma
