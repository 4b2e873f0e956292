import numpy as np
import pytest
import scipy.linalg

from tstmr.linalg import SingularMatrix, SparseMatrix, lanczos_extreme, sym_eigs_dense
from tstmr.operators import LinearOperator
from tstmr.splittings import (SubSolver, eta_star, hss_pair, ic0, ilu0,
                              make_inner_subsolver, shifted_skew_pair,
                              shifted_skew_subsolver, wellposed_pair)
from tstmr.problems import convdiff2d

from conftest import random_dd_dense, tridiag


class TestEtaStar:
    def test_midpoint(self):
        assert eta_star(0.0, 2.0) == 1.0

    def test_degenerate_spectrum(self):
        assert eta_star(1.0, 1.0) == 1.0

    def test_reversed_rejected(self):
        with pytest.raises(ValueError):
            eta_star(2.0, 1.0)

    def test_lanczos_vs_dense_midpoint(self):
        from tstmr.linalg import split_hs
        A = convdiff2d(16, "I").matrix
        H, _ = split_hs(A)
        lo, hi = lanczos_extreme(H, H.nrows, seed=0)
        eigs = sym_eigs_dense(H.to_dense())
        assert abs(eta_star(lo, hi) - 0.5 * (eigs[0] + eigs[-1])) <= 1e-8

    def test_scan_confirms_minimizer(self, rng):
        # odd dimension (skew part singular), SPD symmetric part
        n = 7
        Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        H = Q @ np.diag(np.linspace(1.0, 9.0, n)) @ Q.T
        W = rng.standard_normal((n, n))
        S = 0.5 * (W - W.T)
        lam = sym_eigs_dense(H)
        star = eta_star(lam[0], lam[-1])
        grid = star + np.linspace(-3.0, 3.0, 25)
        vals = [np.linalg.norm(np.linalg.inv(eta * np.eye(n) + S), 2)
                * np.linalg.norm(H - eta * np.eye(n), 2) for eta in grid]
        best = grid[int(np.argmin(vals))]
        step = grid[1] - grid[0]
        assert abs(best - star) <= step + 1e-12


class TestIC0:
    def test_diagonal(self):
        H = SparseMatrix.diagonal([4.0, 9.0])
        L = ic0(H).lower_csr().to_dense()
        np.testing.assert_allclose(L, np.diag([2.0, 3.0]))

    def test_tridiagonal_no_fill_is_exact(self):
        Hd = tridiag(4, -1.0, 2.0, -1.0)
        L = ic0(SparseMatrix.from_dense(Hd)).lower_csr().to_dense()
        exact = scipy.linalg.cholesky(Hd, lower=True)
        np.testing.assert_allclose(L, exact, rtol=1e-12, atol=1e-14)

    def test_zero_diagonal_errors(self):
        H = SparseMatrix.from_coo(2, 2, [0, 1, 0], [0, 0, 1], [1.0, 1.0, 1.0])
        with pytest.raises(SingularMatrix):
            ic0(H)

    def test_indefinite_pivot_errors(self):
        H = SparseMatrix.from_dense([[1.0, 2.0], [2.0, 1.0]])
        with pytest.raises(SingularMatrix) as exc:
            ic0(H)
        assert exc.value.row == 1

    def test_apply_solves_llt(self, rng):
        Hd = tridiag(8, -1.0, 3.0, -1.0)
        fac = ic0(SparseMatrix.from_dense(Hd))
        r = rng.standard_normal(8)
        # tridiagonal factor is exact, so apply is an exact solve
        np.testing.assert_allclose(Hd @ fac.apply(r), r, rtol=1e-11, atol=1e-12)

    def test_droptol_sparsifies(self):
        Hd = tridiag(6, -1e-8, 2.0, -1e-8)
        fac = ic0(SparseMatrix.from_dense(Hd), droptol=1e-4)
        np.testing.assert_allclose(fac.lower_csr().to_dense(),
                                   np.diag(np.full(6, np.sqrt(2.0))))


class TestILU0:
    def test_upper_triangular_exact(self, rng):
        U = np.triu(rng.standard_normal((5, 5)))
        np.fill_diagonal(U, 2.0 + rng.random(5))
        fac = ilu0(SparseMatrix.from_dense(U))
        L, Uf = fac.lu_csr()
        np.testing.assert_allclose(L.to_dense(), np.eye(5), atol=1e-14)
        np.testing.assert_allclose(Uf.to_dense(), U, rtol=1e-14)

    def test_tridiagonal_no_fill_is_exact(self):
        Md = tridiag(6, -1.0, 2.5, -1.5)
        fac = ilu0(SparseMatrix.from_dense(Md))
        L, U = fac.lu_csr()
        np.testing.assert_allclose(L.to_dense() @ U.to_dense(), Md,
                                   rtol=1e-12, atol=1e-13)

    def test_identity(self):
        fac = ilu0(SparseMatrix.identity(4))
        L, U = fac.lu_csr()
        np.testing.assert_array_equal(L.to_dense(), np.eye(4))
        np.testing.assert_array_equal(U.to_dense(), np.eye(4))

    def test_missing_diagonal_errors(self):
        M = SparseMatrix.from_dense([[0.0, 1.0], [1.0, 0.0]])
        with pytest.raises(SingularMatrix):
            ilu0(M)

    def test_apply_is_two_triangular_solves(self, rng):
        Md = tridiag(7, -1.0, 2.5, -1.0)
        fac = ilu0(SparseMatrix.from_dense(Md))
        r = rng.standard_normal(7)
        np.testing.assert_allclose(Md @ fac.apply(r), r, rtol=1e-11, atol=1e-12)


class TestSubSolver:
    def test_exact_dense_invariant(self, rng):
        M = random_dd_dense(8, rng)
        sub = SubSolver.exact_dense(M)
        for _ in range(5):
            r = rng.standard_normal(8)
            d = sub.apply(r)
            assert np.linalg.norm(M @ d - r) <= 1e-10 * np.linalg.norm(r)

    def test_exact_banded_invariant(self, rng):
        A = SparseMatrix.from_dense(tridiag(20, -1.0, 4.0, -2.0))
        sub = SubSolver.exact_banded(A)
        Ad = A.to_dense()
        r = rng.standard_normal(20)
        d = sub.apply(r)
        assert np.linalg.norm(Ad @ d - r) <= 1e-10 * np.linalg.norm(r)

    def test_determinism(self, rng):
        M = random_dd_dense(6, rng)
        sub = make_inner_subsolver(M, "gmres", tol=1e-3, maxit=4)
        r = rng.standard_normal(6)
        np.testing.assert_array_equal(sub.apply(r), sub.apply(r))

    def test_diagonal_zero_rejected(self):
        with pytest.raises(SingularMatrix):
            SubSolver.diagonal(np.array([1.0, 0.0]))

    def test_dimension_check(self):
        sub = SubSolver.identity(3)
        with pytest.raises(ValueError):
            sub.apply(np.ones(4))


class TestInnerSubsolver:
    def test_identity_one_iteration(self, rng):
        sub = make_inner_subsolver(LinearOperator.identity(5), "cg",
                                   tol=1e-12, maxit=1)
        r = rng.standard_normal(5)
        np.testing.assert_allclose(sub.apply(r), r, rtol=1e-12)

    def test_loose_tolerance_budget(self, rng):
        Hd = tridiag(25, -1.0, 2.0, -1.0) + 1e-5 * np.eye(25)
        sub = make_inner_subsolver(Hd, "cg", tol=1e-2, maxit=20)
        r = rng.standard_normal(25)
        d = sub.apply(r)
        # either tolerance reached or the 20-iteration budget was spent
        assert (np.linalg.norm(Hd @ d - r) <= 1e-2 * np.linalg.norm(r)
                or sub.inner_maxit == 20)

    def test_tight_tolerance_matches_dense(self, rng):
        Hd = tridiag(30, -1.0, 2.0, -1.0)
        sub = make_inner_subsolver(Hd, "cg", tol=1e-12, maxit=60)
        r = rng.standard_normal(30)
        np.testing.assert_allclose(sub.apply(r), np.linalg.solve(Hd, r),
                                   rtol=0, atol=1e-10)

    def test_gmres_inner(self, rng):
        M = random_dd_dense(10, rng)
        sub = make_inner_subsolver(M, "gmres", tol=1e-12, maxit=10)
        r = rng.standard_normal(10)
        np.testing.assert_allclose(sub.apply(r), np.linalg.solve(M, r),
                                   rtol=0, atol=1e-9)

    def test_shifted_skew_normal_form(self, rng):
        W = rng.standard_normal((9, 9))
        S = SparseMatrix.from_dense(0.5 * (W - W.T))
        eta = 3.0
        sub = shifted_skew_subsolver(S, eta, tol=1e-13)
        M = eta * np.eye(9) + S.to_dense()
        r = rng.standard_normal(9)
        np.testing.assert_allclose(sub.apply(r), np.linalg.solve(M, r),
                                   rtol=0, atol=1e-10)


class TestPairs:
    def test_hss_pair_solves_shifted_parts(self, rng):
        A = convdiff2d(8, "I").matrix
        from tstmr.linalg import split_hs
        H, S = split_hs(A)
        pair = hss_pair(A, 0.7, realization="dense")
        r = rng.standard_normal(A.nrows)
        HA = H.add_scaled_identity(0.7).to_dense()
        SA = S.add_scaled_identity(0.7).to_dense()
        np.testing.assert_allclose(pair.m_tilde.apply(r),
                                   np.linalg.solve(HA, r), atol=1e-10)
        np.testing.assert_allclose(pair.m_hat.apply(r),
                                   np.linalg.solve(SA, r), atol=1e-10)

    def test_realizations_agree(self, rng):
        A = convdiff2d(10, "II").matrix
        r = rng.standard_normal(A.nrows)
        eta = 4.0
        dense = shifted_skew_pair(A, eta, realization="dense")
        banded = shifted_skew_pair(A, eta, realization="banded")
        inner = shifted_skew_pair(A, eta, realization="inner", inner_tol=1e-13)
        for pair in (banded, inner):
            np.testing.assert_allclose(pair.m_tilde.apply(r),
                                       dense.m_tilde.apply(r), atol=1e-8)
            np.testing.assert_allclose(pair.m_hat.apply(r),
                                       dense.m_hat.apply(r), atol=1e-8)

    def test_wellposed_schemes_build(self):
        A = convdiff2d(8, "I").matrix
        for scheme, kw in (("eta", {"eta": 4.0}), ("hss", {"alpha": 0.5}),
                           ("approach1", {}), ("approach2", {})):
            pair = wellposed_pair(A, scheme, realization="dense", **kw)
            assert pair.m_tilde.n == A.nrows
            assert pair.m_hat.n == A.nrows
