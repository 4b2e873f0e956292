"""Splitting operators and sub-solvers.

A splitting A = M - N is represented by "the action of M^-1", packaged as a
SubSolver with exact (dense or banded LAPACK factorization), incomplete
factorization, or truncated inner-iteration realizations.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from . import _kernels
from .inner import cg_apply, gmres_apply
from .linalg import SingularMatrix, SparseMatrix, split_hs, spmv
from .operators import LinearOperator, as_operator

__all__ = [
    "SubSolver", "SplittingPair", "IncompleteFactor",
    "eta_star", "ic0", "ilu0", "make_inner_subsolver",
    "hss_pair", "shifted_skew_pair", "wellposed_pair",
]

MODE_EXACT = "exact"
MODE_INCOMPLETE = "incomplete"
MODE_INNER = "inner"


def eta_star(lam_min, lam_max):
    """Midpoint shift for the skew part, from the extreme eigenvalues of
    the symmetric part; minimizes ||(eta*I+S)^-1|| * ||H-eta*I||."""
    if lam_min > lam_max:
        raise ValueError("lam_min must not exceed lam_max")
    return 0.5 * (lam_max + lam_min)


class IncompleteFactor:
    """No-fill incomplete factorization with triangular-solve application."""

    def __init__(self, kind, n, arrays):
        self.kind = kind
        self.n = n
        self._arrays = arrays

    def apply(self, r):
        r = np.asarray(r, dtype=np.float64)
        out = np.empty(self.n)
        if self.kind == "ic0":
            rs, ci, vals = self._arrays
            work = np.empty(self.n)
            bad = _kernels.csr_lower_solve(rs, ci, vals, r, work)
            if bad >= 0:
                raise SingularMatrix(bad)
            bad = _kernels.csr_lower_transpose_solve(rs, ci, vals, work, out)
            if bad >= 0:
                raise SingularMatrix(bad)
        else:
            rs, ci, vals, dpos = self._arrays
            _kernels.csr_ldu_solve(rs, ci, vals, dpos, r, out)
        return out

    def lower_csr(self):
        """The L factor as a SparseMatrix (ic0 only)."""
        if self.kind != "ic0":
            raise ValueError("lower_csr is only defined for ic0 factors")
        rs, ci, vals = self._arrays
        return SparseMatrix(self.n, self.n, rs, ci, vals, check=False)

    def lu_csr(self):
        """Unit-lower L and upper U as SparseMatrix pair (ilu0 only)."""
        if self.kind != "ilu0":
            raise ValueError("lu_csr is only defined for ilu0 factors")
        rs, ci, vals, dpos = self._arrays
        rows = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(rs))
        lower = rows > ci
        lr = np.concatenate([rows[lower], np.arange(self.n, dtype=np.int64)])
        lc = np.concatenate([ci[lower], np.arange(self.n, dtype=np.int64)])
        lv = np.concatenate([vals[lower], np.ones(self.n)])
        L = SparseMatrix.from_coo(self.n, self.n, lr, lc, lv)
        U = SparseMatrix.from_coo(self.n, self.n, rows[~lower], ci[~lower],
                                  vals[~lower])
        return L, U


def _lower_triangle(H):
    """Lower triangle of H incl. diagonal, CSR with the diagonal last."""
    rows = np.repeat(np.arange(H.nrows, dtype=np.int64), np.diff(H.row_starts))
    keep = H.col_indices <= rows
    return SparseMatrix.from_coo(H.nrows, H.ncols, rows[keep],
                                 H.col_indices[keep], H.values[keep])


def _drop_small(A, droptol):
    """Drop off-diagonal entries below droptol * max-abs of their row."""
    if droptol <= 0.0:
        return A
    rows = np.repeat(np.arange(A.nrows, dtype=np.int64), np.diff(A.row_starts))
    rowmax = np.zeros(A.nrows)
    np.maximum.at(rowmax, rows, np.abs(A.values))
    keep = (rows == A.col_indices) | (np.abs(A.values) > droptol * rowmax[rows])
    return SparseMatrix.from_coo(A.nrows, A.ncols, rows[keep],
                                 A.col_indices[keep], A.values[keep])


def ic0(H, droptol=0.0):
    """No-fill incomplete Cholesky on the lower-triangle pattern of H.

    H must be symmetric with positive diagonal; a nonpositive pivot raises
    SingularMatrix identifying the row.  droptol > 0 sparsifies the pattern
    first (off-diagonal entries below droptol times the row max are
    dropped).
    """
    if H.nrows != H.ncols:
        raise ValueError("ic0 requires a square matrix")
    L = _lower_triangle(_drop_small(H, droptol))
    diag_missing = np.diff(L.row_starts) == 0
    if np.any(diag_missing):
        raise SingularMatrix(int(np.argmax(diag_missing)), "zero diagonal entry")
    last_cols = L.col_indices[L.row_starts[1:] - 1]
    if np.any(last_cols != np.arange(L.nrows)):
        raise SingularMatrix(int(np.argmax(last_cols != np.arange(L.nrows))),
                             "zero diagonal entry")
    vals = np.empty_like(L.values)
    bad = _kernels.ic0_factor(L.row_starts, L.col_indices, L.values, vals)
    if bad >= 0:
        raise SingularMatrix(bad, f"nonpositive IC(0) pivot in row {bad}")
    return IncompleteFactor("ic0", L.nrows, (L.row_starts, L.col_indices, vals))


def ilu0(M):
    """No-fill ILU (ikj variant) on the pattern of M; unit lower L."""
    if M.nrows != M.ncols:
        raise ValueError("ilu0 requires a square matrix")
    rows = np.repeat(np.arange(M.nrows, dtype=np.int64), np.diff(M.row_starts))
    on_diag = np.flatnonzero(rows == M.col_indices)
    if on_diag.size != M.nrows:
        have = np.zeros(M.nrows, dtype=bool)
        have[rows[on_diag]] = True
        raise SingularMatrix(int(np.argmin(have)), "missing diagonal entry")
    dpos = on_diag.astype(np.int64)
    vals = M.values.copy()
    bad = _kernels.ilu0_factor(M.row_starts, M.col_indices, vals, dpos)
    if bad >= 0:
        raise SingularMatrix(bad, f"zero ILU(0) pivot in row {bad}")
    return IncompleteFactor("ilu0", M.nrows,
                            (M.row_starts, M.col_indices, vals, dpos))


class _BandedLU:
    """LAPACK banded LU (natural ordering) with one refinement step."""

    def __init__(self, A):
        rows = np.repeat(np.arange(A.nrows, dtype=np.int64),
                         np.diff(A.row_starts))
        off = rows - A.col_indices
        kl = int(max(off.max(initial=0), 0))
        ku = int(max((-off).max(initial=0), 0))
        n = A.nrows
        ab = np.zeros((2 * kl + ku + 1, n))
        ab[kl + ku + rows - A.col_indices, A.col_indices] = A.values
        lu, piv, info = lapack.dgbtrf(ab, kl, ku)
        if info != 0:
            raise SingularMatrix(abs(info) - 1, "singular banded factorization")
        self._A = A
        self._lu, self._piv, self._kl, self._ku = lu, piv, kl, ku

    def solve(self, r):
        x, info = lapack.dgbtrs(self._lu, self._kl, self._ku, r, self._piv)
        if info != 0:
            raise SingularMatrix(abs(info) - 1)
        resid = r - spmv(self._A, x)
        dx, info = lapack.dgbtrs(self._lu, self._kl, self._ku, resid, self._piv)
        return x + dx if info == 0 else x


class _DenseLU:
    """Dense LAPACK LU with one refinement step."""

    def __init__(self, M, op=None):
        M = np.asarray(M, dtype=np.float64)
        self._M = M
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            self._fac = scipy.linalg.lu_factor(M)
        small = np.abs(np.diag(self._fac[0])) < 1e-300
        if np.any(small):
            raise SingularMatrix(int(np.argmax(small)))

    def solve(self, r):
        x = scipy.linalg.lu_solve(self._fac, r)
        dx = scipy.linalg.lu_solve(self._fac, r - self._M @ x)
        return x + dx


class SubSolver:
    """Approximation of the action of a splitting-matrix inverse.

    Immutable and deterministic: the same r always yields the same delta.
    `mode` is one of "exact", "incomplete", "inner".
    """

    def __init__(self, n, mode, fn, target=None, inner_tol=0.0, inner_maxit=0,
                 description=""):
        self.n = int(n)
        self.mode = mode
        self._fn = fn
        self.target = target
        self.inner_tol = inner_tol
        self.inner_maxit = inner_maxit
        self.description = description or mode

    def apply(self, r):
        r = np.asarray(r, dtype=np.float64)
        if r.shape != (self.n,):
            raise ValueError(f"residual has length {r.shape[0]}, expected {self.n}")
        return self._fn(r)

    @classmethod
    def exact_dense(cls, M, description="dense LU"):
        if isinstance(M, SparseMatrix):
            op = LinearOperator.from_sparse(M)
            dense = M.to_dense()
        else:
            dense = np.asarray(M, dtype=np.float64)
            op = LinearOperator.from_dense(dense)
        fac = _DenseLU(dense)
        return cls(dense.shape[0], MODE_EXACT, fac.solve, target=op,
                   description=description)

    @classmethod
    def exact_banded(cls, A, description="banded LU"):
        fac = _BandedLU(A)
        return cls(A.nrows, MODE_EXACT, fac.solve,
                   target=LinearOperator.from_sparse(A), description=description)

    @classmethod
    def identity(cls, n):
        return cls(n, MODE_EXACT, lambda r: r.copy(),
                   target=LinearOperator.identity(n), description="identity")

    @classmethod
    def diagonal(cls, d, description="diagonal"):
        d = np.asarray(d, dtype=np.float64)
        if np.any(d == 0.0):
            raise SingularMatrix(int(np.argmax(d == 0.0)), "zero diagonal")
        inv = 1.0 / d
        return cls(d.shape[0], MODE_EXACT, lambda r: inv * r,
                   target=LinearOperator.diagonal(d), description=description)

    @classmethod
    def from_factor(cls, factor, target=None, description=None):
        return cls(factor.n, MODE_INCOMPLETE, factor.apply, target=target,
                   description=description or factor.kind)

    @classmethod
    def from_callable(cls, n, fn, mode=MODE_INNER, target=None,
                      inner_tol=0.0, inner_maxit=0, description="callable"):
        return cls(n, mode, fn, target=target, inner_tol=inner_tol,
                   inner_maxit=inner_maxit, description=description)


def make_inner_subsolver(M, method="cg", tol=1e-2, maxit=20, precond=None,
                         description=None):
    """Inner-iterative sub-solver running CG or full GMRES from a zero start
    until the relative residual reaches tol or maxit; the last iterate is
    returned regardless (truncation is by design).

    CG requires a caller-asserted symmetric positive definite M.  precond,
    when given, is an IncompleteFactor used as a CG preconditioner.
    """
    op = as_operator(M)
    method = method.lower()
    if method == "cg":
        pre = precond.apply if precond is not None else None

        def fn(r):
            return cg_apply(op.apply, r, tol, maxit, precond=pre)
    elif method == "gmres":
        if precond is not None:
            raise ValueError("preconditioned inner GMRES is not supported")

        def fn(r):
            return gmres_apply(op.apply, r, tol, maxit)
    else:
        raise ValueError(f"unknown inner method {method!r}")
    return SubSolver(op.nrows, MODE_INNER, fn, target=op, inner_tol=tol,
                     inner_maxit=maxit,
                     description=description or f"inner-{method}")


def shifted_skew_subsolver(S, eta, tol=1e-12, maxit=None, description=None):
    """Inner solver for (eta*I + S) with skew-symmetric S.

    Uses the SPD normal form (eta^2*I - S^2) x = (eta*I - S) r, solved
    matrix-free by CG; for dominant shifts this converges in a handful of
    iterations.
    """
    n = S.nrows
    if maxit is None:
        maxit = n
    eta2 = eta * eta

    def normal_apply(v):
        return eta2 * v - spmv(S, spmv(S, v))

    def fn(r):
        rhs = eta * r - spmv(S, r)
        return cg_apply(normal_apply, rhs, tol, maxit)

    target = LinearOperator(
        n, n, lambda v: eta * v + spmv(S, v), lambda v: eta * v - spmv(S, v),
        name="eta*I+S")
    return SubSolver(n, MODE_INNER, fn, target=target, inner_tol=tol,
                     inner_maxit=maxit,
                     description=description or "shifted-skew CG")


@dataclass(frozen=True)
class SplittingPair:
    """The two prescribed splittings A = M~ - N~ = M^ - N^, as the actions
    of the two inverses."""
    m_tilde: SubSolver
    m_hat: SubSolver
    description: str = ""


def _exact_subsolver(A, realization, description):
    if realization == "banded":
        return SubSolver.exact_banded(A, description=description)
    return SubSolver.exact_dense(A, description=description)


def hss_pair(A, alpha, realization="dense", inner_tol=1e-12, inner_maxit=None,
             droptol=0.0):
    """Sub-solvers for (alpha*I + H(A), alpha*I + S(A)).

    realization: "dense" | "banded" | "inner" (CG on the SPD part, CG on
    the normal form of the shifted skew part) | "factor" (IC(0)/ILU(0)).
    """
    H, S = split_hs(A)
    HA = H.add_scaled_identity(alpha)
    SA = S.add_scaled_identity(alpha)
    if realization in ("dense", "banded"):
        mt = _exact_subsolver(HA, realization, f"{realization} LU of aI+H")
        mh = _exact_subsolver(SA, realization, f"{realization} LU of aI+S")
    elif realization == "inner":
        maxit = inner_maxit or A.nrows
        pre = ic0(HA, droptol=droptol)
        mt = make_inner_subsolver(HA, "cg", inner_tol, maxit, precond=pre,
                                  description="CG(IC0) on aI+H")
        mh = shifted_skew_subsolver(S, alpha, tol=inner_tol, maxit=maxit)
    elif realization == "factor":
        mt = SubSolver.from_factor(ic0(HA, droptol=droptol),
                                   target=LinearOperator.from_sparse(HA))
        mh = SubSolver.from_factor(ilu0(SA),
                                   target=LinearOperator.from_sparse(SA))
    else:
        raise ValueError(f"unknown realization {realization!r}")
    return SplittingPair(mt, mh, f"hss(alpha={alpha:g}, {realization})")


def shifted_skew_pair(A, eta, alpha=0.0, realization="dense", inner_tol=1e-12,
                      inner_maxit=None, droptol=0.0):
    """Sub-solvers for (alpha*I + H(A), eta*I + S(A)); alpha may be 0 when
    H(A) is positive definite."""
    H, S = split_hs(A)
    HA = H.add_scaled_identity(alpha) if alpha != 0.0 else H
    SA = S.add_scaled_identity(eta)
    if realization in ("dense", "banded"):
        mt = _exact_subsolver(HA, realization, f"{realization} LU of H")
        mh = _exact_subsolver(SA, realization, f"{realization} LU of eta*I+S")
    elif realization == "inner":
        maxit = inner_maxit or A.nrows
        pre = ic0(HA, droptol=droptol)
        mt = make_inner_subsolver(HA, "cg", inner_tol, maxit, precond=pre,
                                  description="CG(IC0) on H")
        mh = shifted_skew_subsolver(S, eta, tol=inner_tol, maxit=maxit)
    else:
        raise ValueError(f"unknown realization {realization!r}")
    return SplittingPair(mt, mh, f"shifted-skew(eta={eta:g}, {realization})")


def wellposed_pair(A, scheme, alpha=None, eta=None, realization="banded",
                   inner_tol=1e-12, inner_maxit=None, droptol=0.0,
                   skew_shift=4.0, eps_shift=1e-5):
    """Splitting pairs used by the well-posed experiment harness.

    scheme:
      "eta"       (H(A), eta*I + S(A)), eta defaulting to the midpoint shift
      "hss"       (alpha*I + H, alpha*I + S) exact-style
      "approach1" IC(0) of H and ILU(0) of S + skew_shift*I
      "approach2" truncated PCG on H + eps*I and ILU(0) of A + eps*I
    """
    if scheme == "eta":
        if eta is None:
            raise ValueError("scheme 'eta' needs an explicit eta value")
        return shifted_skew_pair(A, eta, realization=realization,
                                 inner_tol=inner_tol, inner_maxit=inner_maxit,
                                 droptol=droptol)
    if scheme == "hss":
        if alpha is None:
            raise ValueError("scheme 'hss' needs alpha")
        return hss_pair(A, alpha, realization=realization, inner_tol=inner_tol,
                        inner_maxit=inner_maxit, droptol=droptol)
    H, S = split_hs(A)
    if scheme == "approach1":
        mt = SubSolver.from_factor(ic0(H, droptol=droptol),
                                   target=LinearOperator.from_sparse(H))
        shifted = S.add_scaled_identity(skew_shift)
        mh = SubSolver.from_factor(ilu0(shifted),
                                   target=LinearOperator.from_sparse(shifted))
        return SplittingPair(mt, mh, f"approach1(shift={skew_shift:g})")
    if scheme == "approach2":
        Heps = H.add_scaled_identity(eps_shift)
        pre = ic0(H, droptol=droptol)
        mt = make_inner_subsolver(Heps, "cg", tol=1e-2, maxit=20, precond=pre,
                                  description="PCG(IC0), tol 1e-2, maxit 20")
        Aeps = A.add_scaled_identity(eps_shift)
        mh = SubSolver.from_factor(ilu0(Aeps),
                                   target=LinearOperator.from_sparse(Aeps))
        return SplittingPair(mt, mh, f"approach2(eps={eps_shift:g})")
    raise ValueError(f"unknown scheme {scheme!r}")
