"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines.
"""

import math

import numpy as np

from tstmr.diagnostics import per_step_contraction_bounds, validate_monotone_chain
from tstmr.illposed import (AugmentedSystem, GaussianRelative, MshssParams,
                            UniformAbsolute, add_noise, assemble_k_dense,
                            assemble_mhat_dense, build_nonregularized_split,
                            build_regularized_split, cgw_on_augmented,
                            fov_bound_interval, fov_numeric_imag_halfwidth,
                            fov_numeric_real_extremes, gamma_star,
                            gcv_select_mu, mshss_alpha_star, mshss_solve,
                            tikhonov_direct)
from tstmr.linalg import SparseMatrix, lanczos_extreme, split_hs
from tstmr.problems import (GrayImage, convdiff2d, foxgood, gravity,
                            image_blur_operator, phillips, psnr,
                            synthetic_image)
from tstmr.solvers import (CONVERGED, LUCKY_BREAKDOWN, MAX_ITERATIONS,
                           SolveOptions, StoppingRule, cgls_solve,
                           contraction_diagnostics, discrepancy_stop,
                           tstmr_solve, two_step_1d_mr_solve)
from tstmr.splittings import SplittingPair, SubSolver, eta_star, hss_pair, shifted_skew_pair

from conftest import random_dd_dense


def announce(num, ok, desc):
    print(f"\nACCEPTANCE {num:2d}: {'PASS' if ok else 'FAIL'} - {desc}")


def convdiff_eta_run(case, l=80, tol=1e-10, realization="banded"):
    prob = convdiff2d(l, case, seed=0)
    A = prob.matrix
    H, _ = split_hs(A)
    lo, hi = lanczos_extreme(H, min(A.nrows, 200), seed=1)
    pair = shifted_skew_pair(A, eta_star(lo, hi), realization=realization)
    rep = tstmr_solve(A, prob.rhs_clean, split=pair,
                      opts=SolveOptions(tol=tol, maxit=10000),
                      truth=prob.truth)
    return prob, rep


def experiment_one_setup(gen, n=200, seed=0):
    prob = gen(n)
    A = prob.matrix if isinstance(prob.matrix, np.ndarray) \
        else prob.matrix.to_dense()
    g = add_noise(prob.rhs_clean, UniformAbsolute(0.01), seed=seed)
    mu = gcv_select_mu(A, g)
    sys_aug = AugmentedSystem(A, mu, mu ** 2 + 0.01)
    b = np.concatenate([g, np.zeros(sys_aug.n)])
    return prob, A, g, sys_aug, b


def test_criterion_01_convdiff_iteration_counts():
    checks = []
    _, rep1 = convdiff_eta_run("I")
    checks.append((rep1.termination == CONVERGED and rep1.iterations <= 12,
                   f"Case I: {rep1.iterations} iters axis<=12"))
    _, rep2 = convdiff_eta_run("II")
    checks.append((rep2.termination == CONVERGED and rep2.iterations <= 72,
                   f"Case II: {rep2.iterations} iters <=72"))
    # the inner-iterative exact realization (tol 1e-12) gives the same counts
    _, rep3 = convdiff_eta_run("I", realization="inner")
    checks.append((rep3.termination == CONVERGED and rep3.iterations <= 12,
                   f"Case I inner-1e-12: {rep3.iterations} iters <=12"))
    ok = all(c for c, _ in checks)
    announce(1, ok, "conv-diff l=80 TSTMR iterations "
             f"(I: {rep1.iterations}, II: {rep2.iterations}, "
             f"I/inner: {rep3.iterations})")
    assert ok, checks


def test_criterion_02_mrhss_parameter_sensitivity():
    prob = convdiff2d(80, "I", seed=0)
    A = prob.matrix
    opts = SolveOptions(tol=1e-10, maxit=5000)
    pair_good = hss_pair(A, 0.0002, realization="banded")
    rep_good = two_step_1d_mr_solve(A, prob.rhs_clean, split=pair_good,
                                    opts=opts)
    pair_bad = hss_pair(A, 0.1551, realization="banded")
    rep_bad = two_step_1d_mr_solve(A, prob.rhs_clean, split=pair_bad,
                                   opts=opts)
    _, rep_tstmr = convdiff_eta_run("I")
    ok = (rep_good.termination == CONVERGED and rep_good.iterations <= 14
          and rep_bad.iterations >= 10 * rep_tstmr.iterations)
    announce(2, ok, f"MRHSS alpha sensitivity (alpha=2e-4: "
             f"{rep_good.iterations} <=14; alpha=0.1551: {rep_bad.iterations}"
             f" >= 10x{rep_tstmr.iterations})")
    assert ok


def test_criterion_03_tstmr_beats_1d_at_equal_splittings():
    wins = 0
    pointwise_ok = True
    detail = []
    for seed in range(20):
        rng = np.random.default_rng(1000 + seed)
        M = random_dd_dense(50, rng)
        b = rng.standard_normal(50)
        A = SparseMatrix.from_dense(M)
        pair = hss_pair(A, 1.0, realization="dense")
        opts = SolveOptions(tol=1e-10, maxit=400)
        rep2d = tstmr_solve(A, b, split=pair, opts=opts)
        rep1d = two_step_1d_mr_solve(A, b, split=pair, opts=opts)
        if rep2d.iterations <= rep1d.iterations:
            wins += 1
        detail.append((rep2d.iterations, rep1d.iterations))
        # same-iterate half-step comparison via deterministic replay
        for k in range(1, len(rep2d.half_step_residuals)):
            replay = tstmr_solve(A, b, split=pair,
                                 opts=SolveOptions(tol=1e-10, maxit=k))
            if replay.termination != MAX_ITERATIONS:
                break
            r_k = b - M @ replay.solution
            d1 = pair.m_tilde.apply(r_k)
            Ad1 = M @ d1
            denom = float(np.dot(Ad1, Ad1))
            if denom == 0.0:
                break
            beta = float(np.dot(r_k, Ad1)) / denom
            one_d = float(np.linalg.norm(r_k - beta * Ad1))
            two_d = rep2d.half_step_residuals[k]
            if two_d > one_d + 1e-12 * max(1.0, np.linalg.norm(r_k)):
                pointwise_ok = False
    ok = wins >= 18 and pointwise_ok
    announce(3, ok, f"2D vs 1D at equal splittings: {wins}/20 outer-count "
             f"wins, half-step dominance {'holds' if pointwise_ok else 'fails'}")
    assert ok, detail


def test_criterion_04_experiment_one_vs_mshss():
    checks = []
    opts = SolveOptions(tol=1e-6, maxit=100)
    for gen in (foxgood, gravity, phillips):
        prob, A, g, sys_aug, b = experiment_one_setup(gen)
        split = build_regularized_split(sys_aug, inner="gmres",
                                        inner_tol=1e-6)
        rep = tstmr_solve(sys_aug.k_op(), b, split=split, opts=opts)
        sv = np.linalg.svd(A, compute_uv=False)
        alpha = mshss_alpha_star(sys_aug.gamma, sv[0], sv[-1])
        repm = mshss_solve(sys_aug, b,
                           params=MshssParams(alpha, sys_aug.gamma, sv[0],
                                              sv[-1]),
                           opts=opts, inner="gmres", inner_tol=1e-6)
        tst_ok = rep.termination == CONVERGED and rep.iterations <= 15
        mshss_ok = (repm.termination == MAX_ITERATIONS
                    or repm.iterations > 3 * rep.iterations)
        checks.append((tst_ok and mshss_ok,
                       f"{prob.name}: TSTMR {rep.iterations}"
                       f" ({rep.termination}), MSHSS {repm.iterations}"
                       f" ({repm.termination})"))
    ok = all(c for c, _ in checks)
    announce(4, ok, "Experiment-I ordering at n=200: "
             + "; ".join(msg for _, msg in checks))
    assert ok, checks


def test_criterion_05_inexact_tstmr_vs_cgw():
    prob, A, g, sys_aug, b = experiment_one_setup(gravity)
    opts = SolveOptions(tol=1e-6, maxit=100)
    split = build_regularized_split(sys_aug, inner="cg", inner_tol=1e-2,
                                    inner_maxit=20)
    rep = tstmr_solve(sys_aug.k_op(), b, split=split, opts=opts)
    repc = cgw_on_augmented(sys_aug, b, opts=SolveOptions(tol=1e-6,
                                                          maxit=300))
    ok = (rep.termination == CONVERGED and rep.iterations <= 10
          and repc.termination == CONVERGED
          and rep.iterations <= repc.iterations / 2)
    announce(5, ok, f"inexact TSTMR vs CGW on gravity(200): "
             f"{rep.iterations} vs {repc.iterations}")
    assert ok


def test_criterion_06_fov_containment():
    rng = np.random.default_rng(42)
    count = 0
    worst = 0.0
    hi_ok = True
    while count < 50:
        m = int(rng.integers(5, 61))
        n = int(rng.integers(4, 61))
        mu = float(rng.choice([0.01, 0.1, 0.5]))
        gs = gamma_star(mu)
        t = float(rng.uniform(0.05, 0.95))
        gamma = mu ** 2 + t * (gs - mu ** 2)
        A = rng.standard_normal((m, n)) / math.sqrt(max(m, n))
        sys_aug = AugmentedSystem(A, mu, gamma)
        K = assemble_k_dense(sys_aug)
        Mh = assemble_mhat_dense(sys_aug)
        iv = fov_bound_interval(sys_aug, 0.0)
        lo, hi = fov_numeric_real_extremes(K, Mh)
        hw = fov_numeric_imag_halfwidth(K, Mh)
        worst = max(worst, iv.real_lo - lo, hi - iv.real_hi,
                    hw - iv.imag_half_width)
        if gamma < 4.0 and not iv.real_hi < 2.0:
            hi_ok = False
        count += 1
    ok = worst <= 1e-8 and hi_ok
    announce(6, ok, f"FoV containment over 50 randomized systems "
             f"(worst overshoot {worst:.2e}; real_hi<2 {'holds' if hi_ok else 'fails'})")
    assert ok


def test_criterion_07_schur_inverse_norm_bound():
    rng = np.random.default_rng(7)
    worst = -np.inf
    for gamma in (0.01, 0.5, 2.0):
        bound = 1.0 / (2.0 * math.sqrt(gamma))
        for _ in range(17):
            m = int(rng.integers(3, 30))
            n = int(rng.integers(3, 30))
            A = rng.standard_normal((m, n))
            G = np.linalg.solve(gamma * np.eye(n) + A.T @ A, A.T)
            worst = max(worst, np.linalg.norm(G, 2) - bound)
    bound_ok = worst <= 1e-8
    # equality approached when gamma matches a squared singular value
    gamma = 0.29
    s = np.array([1.7, math.sqrt(gamma), 0.2])
    U, _ = np.linalg.qr(rng.standard_normal((6, 3)))
    V, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    A = U @ np.diag(s) @ V.T
    G = np.linalg.solve(gamma * np.eye(3) + A.T @ A, A.T)
    gap = abs(np.linalg.norm(G, 2) - 1.0 / (2.0 * math.sqrt(gamma)))
    ok = bound_ok and gap <= 1e-3
    announce(7, ok, f"Schur inverse-norm bound (worst excess {worst:.2e}, "
             f"equality gap {gap:.2e})")
    assert ok


def test_criterion_08_convergence_theory_suite():
    checks = []
    # orthogonality and monotone chains on conv-diff and random instances
    for l, case in ((16, "I"), (12, "II")):
        prob = convdiff2d(l, case, seed=0)
        pair = shifted_skew_pair(prob.matrix, 4.0, realization="dense")
        rep = tstmr_solve(prob.matrix, prob.rhs_clean, split=pair,
                          opts=SolveOptions(tol=1e-10, maxit=500))
        checks.append((rep.termination == CONVERGED, f"convdiff {case} converged"))
        checks.append((max(rep.orth_defects) <= 1e-8,
                       f"orthogonality defects {max(rep.orth_defects):.2e}"))
        checks.append((validate_monotone_chain(rep), "monotone chain"))
    # per-step contraction bound on dense instances (n <= 100)
    for l, case in ((8, "I"), (10, "II")):
        prob = convdiff2d(l, case, seed=0)
        A = prob.matrix
        pair = shifted_skew_pair(A, 4.0, realization="dense")
        rep = tstmr_solve(A, prob.rhs_clean, split=pair,
                          opts=SolveOptions(tol=1e-10, maxit=500))
        info = contraction_diagnostics(A.to_dense(), pair)
        bounds = per_step_contraction_bounds(rep, info)
        bound_ok = bool(bounds) and all(
            rep.residuals[k + 1] <= lk * rep.residuals[k] * (1 + 1e-8)
            for k, lk in bounds)
        checks.append((bound_ok, f"per-step bound l={l}"))
    # lucky breakdown on the constructed proportional-residual instance
    A = SparseMatrix.from_dense([[1.0, 1.0, 0.0], [1.0, 2.0, 0.0],
                                 [0.0, 0.0, 1.0]])
    b = np.array([1.0, 0.0, 0.0])
    pair = SplittingPair(SubSolver.identity(3), SubSolver.identity(3))
    rep = tstmr_solve(A, b, split=pair, opts=SolveOptions(tol=1e-10, maxit=50))
    resid = np.linalg.norm(b - A.to_dense() @ rep.solution)
    checks.append((rep.termination == LUCKY_BREAKDOWN
                   and resid <= 1e-8 * np.linalg.norm(b),
                   f"lucky breakdown residual {resid:.2e}"))
    ok = all(c for c, _ in checks)
    announce(8, ok, "convergence-theory suite ("
             + "; ".join(m for s, m in checks if not s) + ")"
             if not ok else "convergence-theory suite (orthogonality, "
             "monotone chains, per-step bound, lucky breakdown)")
    assert ok, [m for s, m in checks if not s]


def test_criterion_09_deblurring_pipeline():
    img = synthetic_image(64)
    x_true = img.to_vector()
    checks = []
    for bandw in (5, 7):
        Aop = image_blur_operator(64, 64, bandw)
        g_clean = Aop.apply(x_true)
        g = add_noise(g_clean, GaussianRelative(0.01), seed=0)
        gnorm = float(np.linalg.norm(g))
        rule = StoppingRule("discrepancy", noise_level=0.01, safety=1.01)
        sys0, split = build_nonregularized_split(Aop, gamma=0.001,
                                                 inner="cg", inner_tol=1e-2,
                                                 max_itcg=10)
        b = np.concatenate([g, np.zeros(sys0.n)])

        def stop(x):
            f = x[sys0.m:]
            return discrepancy_stop(np.linalg.norm(g - Aop.apply(f)) / gnorm,
                                    rule)

        rep = tstmr_solve(sys0.k_op(), b, split=split,
                          opts=SolveOptions(tol=1e-14, maxit=50), stop=stop)
        f = rep.solution[sys0.m:]
        restored = GrayImage.from_vector(f, 64, 64)
        blurred = GrayImage.from_vector(g, 64, 64)
        gain = psnr(restored, img) - psnr(blurred, img)
        repc = cgls_solve(Aop, g, opts=SolveOptions(tol=1e-14, maxit=200),
                          stop_rule=rule)
        checks.append((rep.iterations <= 5 and gain >= 2.0
                       and repc.iterations >= rep.iterations,
                       f"bandw={bandw}: TSTMR {rep.iterations} iters, "
                       f"gain {gain:.1f} dB, CGLS {repc.iterations}"))
    ok = all(c for c, _ in checks)
    announce(9, ok, "deblurring: " + "; ".join(m for _, m in checks))
    assert ok, checks


def test_criterion_10_augmented_oracle_equivalence():
    rng = np.random.default_rng(11)
    tol = 1e-10
    worst = 0.0
    for n, mu in ((40, 0.3), (120, 0.7), (200, 0.5)):
        m = n + 10
        A = rng.standard_normal((m, n)) / math.sqrt(n)
        g = rng.standard_normal(m)
        gamma = mu ** 2 + 0.5 * (gamma_star(mu) - mu ** 2)
        sys_aug = AugmentedSystem(A, mu, gamma)
        split = build_regularized_split(sys_aug, inner="gmres",
                                        inner_tol=1e-12)
        b = np.concatenate([g, np.zeros(n)])
        rep = tstmr_solve(sys_aug.k_op(), b, split=split,
                          opts=SolveOptions(tol=tol, maxit=300))
        assert rep.termination == CONVERGED
        f = rep.solution[m:]
        f_star = tikhonov_direct(A, g, mu)
        worst = max(worst, np.linalg.norm(f - f_star)
                    / np.linalg.norm(f_star))
    random_ok = worst <= 10 * tol
    # severely ill-posed instance checked at the coarser documented level
    prob, A, g, sys_aug, b = experiment_one_setup(foxgood)
    split = build_regularized_split(sys_aug, inner="gmres", inner_tol=1e-10)
    rep = tstmr_solve(sys_aug.k_op(), b, split=split,
                      opts=SolveOptions(tol=1e-9, maxit=200))
    f = rep.solution[sys_aug.m:]
    f_star = tikhonov_direct(A, g, sys_aug.mu)
    foxgood_err = np.linalg.norm(f - f_star) / np.linalg.norm(f_star)
    ok = random_ok and foxgood_err <= 1e-5
    announce(10, ok, f"augmented solve matches direct Tikhonov oracle "
             f"(random worst {worst:.2e} <= {10 * tol:.0e}; foxgood "
             f"{foxgood_err:.2e} <= 1e-5)")
    assert ok
