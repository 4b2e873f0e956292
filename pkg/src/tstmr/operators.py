"""Dimension-tagged linear operator abstraction.

Wraps anything that can apply A and (optionally) A.T without forming a
matrix; used for implicitly-assembled block systems and matrix-free inner
solves.
"""

import numpy as np

from .linalg import SparseMatrix, spmv, spmv_t

__all__ = ["LinearOperator", "as_operator"]


class LinearOperator:
    def __init__(self, nrows, ncols, apply, apply_t=None, name=""):
        self.nrows = int(nrows)
        self.ncols = int(ncols)
        self._apply = apply
        self._apply_t = apply_t
        self.name = name

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    def apply(self, v):
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.ncols,):
            raise ValueError(
                f"operand has length {v.shape[0]}, expected {self.ncols}")
        return self._apply(v)

    def apply_t(self, v):
        if self._apply_t is None:
            raise NotImplementedError(f"operator {self.name!r} has no transpose")
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.nrows,):
            raise ValueError(
                f"operand has length {v.shape[0]}, expected {self.nrows}")
        return self._apply_t(v)

    @classmethod
    def from_dense(cls, M, name="dense"):
        M = np.asarray(M, dtype=np.float64)
        return cls(M.shape[0], M.shape[1], lambda v: M @ v,
                   lambda v: M.T @ v, name=name)

    @classmethod
    def from_sparse(cls, A, name="sparse"):
        return cls(A.nrows, A.ncols, lambda v: spmv(A, v),
                   lambda v: spmv_t(A, v), name=name)

    @classmethod
    def identity(cls, n):
        return cls(n, n, lambda v: v.copy(), lambda v: v.copy(), name="I")

    @classmethod
    def diagonal(cls, d, name="diag"):
        d = np.asarray(d, dtype=np.float64)
        n = d.shape[0]
        return cls(n, n, lambda v: d * v, lambda v: d * v, name=name)

    def to_dense(self):
        """Materialize by applying to identity columns (diagnostics only)."""
        cols = [self.apply(e) for e in np.eye(self.ncols)]
        return np.column_stack(cols)

    def __repr__(self):
        return f"LinearOperator({self.nrows}x{self.ncols}, {self.name!r})"


def as_operator(A):
    """Coerce a SparseMatrix, dense array or LinearOperator to an operator."""
    if isinstance(A, LinearOperator):
        return A
    if isinstance(A, SparseMatrix):
        return LinearOperator.from_sparse(A)
    return LinearOperator.from_dense(A)
