"""Augmented systems for Tikhonov-regularized ill-posed problems.

The regularized normal equations (A.T A + mu^2 I) f = A.T g are solved via
the equivalent block system K [e; f] = [g; 0] with
K = [[I, A], [-A.T, mu^2 I]], never formed explicitly.  This module builds
K's splittings, the Schur-complement inner solve for the skew-shifted
block, field-of-values interval bounds, the gamma selection rule, GCV,
noise models and discrepancy stopping.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .inner import cg_apply, gmres_apply
from .operators import LinearOperator, as_operator
from .solvers import (StoppingRule, cgw_solve, discrepancy_stop,
                      stationary_two_step_solve)
from .splittings import SplittingPair, SubSolver

__all__ = [
    "AugmentedSystem", "FovInterval", "StoppingRule", "MshssParams",
    "UniformAbsolute", "GaussianRelative",
    "k_apply", "hk_inv_apply", "omega_skew_solve", "omega_subsolver",
    "fov_bound_interval", "fov_numeric_real_extremes",
    "fov_numeric_imag_halfwidth", "check_gamma_condition", "gamma_star",
    "tikhonov_direct", "gcv_select_mu", "add_noise", "discrepancy_stop",
    "build_regularized_split", "build_nonregularized_split",
    "mshss_solve", "mshss_alpha_star", "cgw_on_augmented",
    "assemble_k_dense", "assemble_mhat_dense",
]


@dataclass(frozen=True)
class AugmentedSystem:
    """The block operator K = [[I, A], [-A.T, mu^2 I]] plus the skew-shift
    scalar gamma of the Omega block; A may be rectangular (m x n)."""
    A: LinearOperator
    mu: float
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "A", as_operator(self.A))
        if self.mu < 0:
            raise ValueError("mu must be nonnegative")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")

    @property
    def m(self):
        return self.A.nrows

    @property
    def n(self):
        return self.A.ncols

    @property
    def size(self):
        return self.m + self.n

    def k_op(self):
        return LinearOperator(self.size, self.size,
                              lambda v: k_apply(self, v),
                              lambda v: _k_apply_t(self, v), name="K")

    def h_diag(self):
        """Diagonal of the symmetric part of K."""
        return np.concatenate([np.ones(self.m),
                               np.full(self.n, self.mu ** 2)])


def k_apply(sys, v):
    """K v using only products with A and A.T."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (sys.size,):
        raise ValueError(f"operand has length {v.shape[0]}, expected {sys.size}")
    v1, v2 = v[:sys.m], v[sys.m:]
    return np.concatenate([v1 + sys.A.apply(v2),
                           -sys.A.apply_t(v1) + sys.mu ** 2 * v2])


def _k_apply_t(sys, v):
    v1, v2 = v[:sys.m], v[sys.m:]
    return np.concatenate([v1 - sys.A.apply(v2),
                           sys.A.apply_t(v1) + sys.mu ** 2 * v2])


def hk_inv_apply(sys, v):
    """Inverse of the (block diagonal) symmetric part of K; mu must be
    positive, otherwise the second block is singular."""
    if sys.mu <= 0:
        raise ValueError("symmetric part of K is singular for mu = 0")
    v = np.asarray(v, dtype=np.float64)
    return np.concatenate([v[:sys.m], v[sys.m:] / sys.mu ** 2])


def omega_skew_solve(sys, b, method="cg", tol=1e-2, maxit=20):
    """Solve [[I, A], [-A.T, gamma I]] x = b.

    method "cg": the scaled Schur form; with B = A/sqrt(gamma), CG runs
    matrix-free on (I + B.T B) x2~ = b2~ + B.T b1, then x1 = b1 - B x2~.
    Truncation (tol, maxit) is by design and never raises.
    method "gmres": full GMRES on the block operator itself.
    """
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (sys.size,):
        raise ValueError(f"rhs has length {b.shape[0]}, expected {sys.size}")
    g = sys.gamma
    sg = math.sqrt(g)
    if method == "cg":
        b1, b2 = b[:sys.m], b[sys.m:]

        def schur_apply(v):
            return v + sys.A.apply_t(sys.A.apply(v)) / g

        rhs = b2 / sg + sys.A.apply_t(b1) / sg
        x2t = cg_apply(schur_apply, rhs, tol, maxit)
        x1 = b1 - sys.A.apply(x2t) / sg
        return np.concatenate([x1, x2t / sg])
    if method == "gmres":
        def mhat_apply(v):
            v1, v2 = v[:sys.m], v[sys.m:]
            return np.concatenate([v1 + sys.A.apply(v2),
                                   -sys.A.apply_t(v1) + g * v2])

        return gmres_apply(mhat_apply, b, tol, maxit)
    raise ValueError(f"unknown inner method {method!r}")


def omega_subsolver(sys, method="cg", tol=1e-2, maxit=20, description=None):
    """The omega-shifted skew solve packaged as a SubSolver."""
    return SubSolver.from_callable(
        sys.size, lambda r: omega_skew_solve(sys, r, method, tol, maxit),
        inner_tol=tol, inner_maxit=maxit,
        description=description or f"omega-skew {method}(tol={tol:g})")


@dataclass(frozen=True)
class FovInterval:
    """Theoretical enclosure of the field of values of K M^-1."""
    real_lo: float
    real_hi: float
    imag_half_width: float
    eta_bar: float

    def __post_init__(self):
        if not self.real_lo < self.real_hi:
            raise ValueError("degenerate interval")

    def contains_real(self, x, slack=0.0):
        return self.real_lo - slack <= x <= self.real_hi + slack


def fov_bound_interval(sys, lam_min_ata=0.0):
    """Interval bounds for the real/imaginary parts of the field of values
    of K (Omega + S(K))^-1, valid for gamma > mu^2.

    For ill-posed inputs lam_min_ata = 0 is the safe default (the true
    smallest eigenvalue of A.T A is numerically zero; the bounds only
    widen).
    """
    mu2 = sys.mu ** 2
    g = sys.gamma
    if g <= mu2:
        raise ValueError("fov bounds require gamma > mu^2")
    if lam_min_ata < 0:
        raise ValueError("lam_min_ata must be nonnegative")
    sg = math.sqrt(g)
    eta_bar = (g - mu2) / (2.0 * sg)
    lo = (mu2 + lam_min_ata) / (g + lam_min_ata) - eta_bar
    return FovInterval(lo, 1.0 + eta_bar, 1.0 / (2.0 * sg), eta_bar)


def fov_numeric_real_extremes(K, Mhat):
    """Eigen-extremes of the symmetric part of K Mhat^-1 (dense check);
    they equal the real-part extremes of the field of values."""
    K = np.asarray(K, dtype=np.float64)
    Mhat = np.asarray(Mhat, dtype=np.float64)
    P = np.linalg.solve(Mhat.T, K.T).T
    eigs = np.linalg.eigvalsh(0.5 * (P + P.T))
    return float(eigs[0]), float(eigs[-1])


def fov_numeric_imag_halfwidth(K, Mhat):
    """Spectral norm of the skew part of K Mhat^-1 = extreme imaginary part
    of its field of values."""
    K = np.asarray(K, dtype=np.float64)
    Mhat = np.asarray(Mhat, dtype=np.float64)
    P = np.linalg.solve(Mhat.T, K.T).T
    return float(np.linalg.norm(0.5 * (P - P.T), 2))


def check_gamma_condition(sys, lam_min_ata=0.0):
    """True iff 0 < gamma - mu^2 < 2 sqrt(gamma) (mu^2+lam)/(gamma+lam),
    which places the field of values strictly in the right half-plane."""
    mu2 = sys.mu ** 2
    g = sys.gamma
    lam = lam_min_ata
    eps = g - mu2
    return 0.0 < eps < 2.0 * math.sqrt(g) * (mu2 + lam) / (g + lam)


def gamma_star(mu):
    """Unique positive root of sqrt(gamma) (gamma - mu^2) = 2 mu^2.

    Every gamma in the open interval (mu^2, gamma_star) passes
    check_gamma_condition regardless of lam_min(A.T A).  For mu = 0 the
    interval is empty and 0.0 is returned as the degenerate flag value.
    """
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    if mu == 0.0:
        return 0.0
    mu2 = mu * mu

    def f(g):
        return math.sqrt(g) * (g - mu2) - 2.0 * mu2

    lo, hi = mu2, mu2 + 2.0 + 2.0 * mu2
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def tikhonov_direct(A, g, mu):
    """Dense Cholesky solve of (A.T A + mu^2 I) f = A.T g; the ground-truth
    oracle for the augmented-system solvers."""
    A = np.asarray(A, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    C = A.T @ A + mu ** 2 * np.eye(A.shape[1])
    cf = scipy.linalg.cho_factor(C)
    return scipy.linalg.cho_solve(cf, A.T @ g)


def gcv_select_mu(A, g, grid_points=200, flat_tol=0.2, degenerate_frac=1e-3):
    """Regularization parameter minimizing the generalized cross validation
    function over a logarithmic grid of grid_points values in
    [1e-10, 1] * sigma_1, using the SVD of A.

    For severely ill-posed kernels the GCV curve has a flat valley
    spanning many decades and the plain grid minimizer lands on noise
    wiggles at a meaninglessly small mu.  When the minimizer falls below
    degenerate_frac * sigma_1 the strongest regularization inside the
    valley is returned instead: the largest grid mu whose GCV value is
    within (1 + flat_tol) of the minimum.  Otherwise the plain grid
    minimizer is returned.
    """
    A = np.asarray(A, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    coef = U.T @ g
    rho0sq = max(float(np.dot(g, g) - np.dot(coef, coef)), 0.0)
    m = A.shape[0]
    sigma1 = float(s[0]) if s.size else 1.0
    grid = sigma1 * np.logspace(-10, 0, grid_points)
    s2 = s ** 2
    vals = np.empty(grid.shape[0])
    for i, mu in enumerate(grid):
        filt = s2 / (s2 + mu ** 2)
        resid_sq = float(np.sum(((1.0 - filt) * coef) ** 2)) + rho0sq
        denom = (m - float(np.sum(filt))) ** 2
        vals[i] = resid_sq / denom if denom > 0 else np.inf
    mu0 = float(grid[int(np.argmin(vals))])
    if mu0 >= degenerate_frac * sigma1:
        return mu0
    best = float(vals.min())
    inside = np.flatnonzero(vals <= best * (1.0 + flat_tol))
    return float(grid[inside[-1]])


@dataclass(frozen=True)
class UniformAbsolute:
    """Additive noise scale * u with u uniform on [0, 1) per entry."""
    scale: float

    def __post_init__(self):
        if self.scale < 0:
            raise ValueError("scale must be nonnegative")


@dataclass(frozen=True)
class GaussianRelative:
    """Gaussian noise rescaled so that ||e|| / ||g_clean|| = level exactly."""
    level: float

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("level must be nonnegative")


def add_noise(g_clean, noise, seed=0):
    """Contaminate a clean right-hand side; deterministic per seed."""
    g = np.asarray(g_clean, dtype=np.float64)
    rng = np.random.default_rng(seed)
    if isinstance(noise, UniformAbsolute):
        return g + noise.scale * rng.random(g.shape[0])
    if isinstance(noise, GaussianRelative):
        if noise.level == 0.0:
            return g.copy()
        e = rng.standard_normal(g.shape[0])
        e *= noise.level * np.linalg.norm(g) / np.linalg.norm(e)
        return g + e
    raise TypeError(f"unknown noise model {type(noise).__name__}")


def build_regularized_split(sys, inner="gmres", inner_tol=1e-6,
                            inner_maxit=None):
    """Splitting pair for the regularized augmented solve: the exact
    (diagonal) symmetric-part inverse and the omega-shifted skew solve."""
    if sys.mu <= 0:
        raise ValueError("regularized split requires mu > 0")
    if sys.gamma <= sys.mu ** 2:
        raise ValueError("regularized split requires gamma > mu^2")
    if inner_maxit is None:
        inner_maxit = sys.size
    mt = SubSolver.diagonal(sys.h_diag(), description="H(K) diagonal")
    mh = omega_subsolver(sys, inner, inner_tol, inner_maxit)
    return SplittingPair(mt, mh,
                         f"regularized(mu={sys.mu:g}, gamma={sys.gamma:g})")


def build_nonregularized_split(A, gamma=0.001, inner="cg", inner_tol=1e-2,
                               max_itcg=10):
    """Iterative-regularization splitting for the mu = 0 block system:
    identity for the first splitting matrix, omega-shifted skew solve for
    the second.  Returns (system, pair)."""
    op = as_operator(A)
    sys0 = AugmentedSystem(op, 0.0, gamma)
    mt = SubSolver.identity(sys0.size)
    mh = omega_subsolver(sys0, inner, inner_tol, max_itcg)
    return sys0, SplittingPair(mt, mh, f"nonregularized(gamma={gamma:g})")


@dataclass(frozen=True)
class MshssParams:
    """Parameters of the modified-Omega stationary alternation; gamma is
    the Omega block scalar, sigma1/sigman extreme singular values of A used
    by the optimal-alpha formula."""
    alpha: float
    gamma: float
    sigma1: float = 0.0
    sigman: float = 0.0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")


def mshss_alpha_star(gamma, sigma1, sigman):
    """Optimal alpha for given gamma and extreme singular values; for
    sigma1 = 1, sigman = 0 and gamma -> mu^2 this tends to
    mu^2 / (2 mu^2 + 1)."""
    s = sigma1 ** 2 + sigman ** 2
    return (gamma * s + 2.0 * sigma1 ** 2 * sigman ** 2) / (2.0 * gamma + s)


def mshss_solve(sys, b, x0=None, params=None, opts=None, inner="gmres",
                inner_tol=1e-6, inner_maxit=None, truth=None):
    """Stationary alternation with (alpha I + H(K), Omega + S(K)); the
    special case gamma = 1 is the plain unit-Omega variant."""
    if params.gamma == sys.mu ** 2:
        raise ValueError("gamma must differ from mu^2")
    if inner_maxit is None:
        inner_maxit = sys.size
    a = params.alpha
    dt = np.concatenate([np.full(sys.m, 1.0 + a),
                         np.full(sys.n, a + sys.mu ** 2)])
    mt = SubSolver.diagonal(dt, description="alpha I + H(K) diagonal")
    omega_sys = AugmentedSystem(sys.A, sys.mu, params.gamma)
    mh = omega_subsolver(omega_sys, inner, inner_tol, inner_maxit)
    pair = SplittingPair(mt, mh, f"mshss(alpha={a:g}, gamma={params.gamma:g})")
    return stationary_two_step_solve(sys.k_op(), b, x0=x0, split=pair,
                                     opts=opts, truth=truth)


def cgw_on_augmented(sys, b, x0=None, opts=None, truth=None):
    """Concus-Golub-Widlund recurrence on K, preconditioned by its
    (positive diagonal) symmetric part; requires mu > 0."""
    if sys.mu <= 0:
        raise ValueError("CGW on K requires mu > 0")
    return cgw_solve(sys.k_op(), sys.h_diag(), b, x0=x0, opts=opts,
                     truth=truth)


def assemble_k_dense(sys):
    """Dense K for diagnostics (small systems only)."""
    A = sys.A.to_dense()
    m, n = A.shape
    return np.block([[np.eye(m), A],
                     [-A.T, sys.mu ** 2 * np.eye(n)]])


def assemble_mhat_dense(sys, gamma=None):
    """Dense Omega + S(K) for diagnostics."""
    A = sys.A.to_dense()
    m, n = A.shape
    g = sys.gamma if gamma is None else gamma
    return np.block([[np.eye(m), A],
                     [-A.T, g * np.eye(n)]])
