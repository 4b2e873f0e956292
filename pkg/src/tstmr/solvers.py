"""Outer iterations.

The central method is `tstmr_solve`: a two-step iteration whose half-steps
each minimize the residual norm over a two-dimensional subspace spanned by
the current preconditioned residual and its difference with the previous
one.  The step parameters come from 2x2 Gram systems; a singular Gram
system with nonzero directions is a lucky breakdown from which the exact
solution is recovered in closed form.

Also provided: the one-dimensional two-step minimum-residual family
(scalar step parameters), stationary two-step iterations (HSS-type), the
Concus-Golub-Widlund recurrence, PCG, CGLS and restarted GMRES baselines.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .linalg import Gram2, GramSingular, gram2_solve, power_norm, sym_eigs_dense
from .operators import as_operator

__all__ = [
    "SolveOptions", "SolveReport", "StoppingRule", "discrepancy_stop",
    "tstmr_solve", "two_step_1d_mr_solve", "hss_solve", "cgw_solve",
    "pcg_solve", "cgls_solve", "gmres_solve",
    "contraction_diagnostics", "ContractionInfo",
    "CONVERGED", "MAX_ITERATIONS", "LUCKY_BREAKDOWN", "STAGNATION",
]

CONVERGED = "converged"
MAX_ITERATIONS = "max-iterations"
LUCKY_BREAKDOWN = "lucky-breakdown"
STAGNATION = "stagnation"

# residual recomputed from scratch this often to bound update-form drift
RECOMPUTE_INTERVAL = 50
# tiny-direction threshold: a zero preconditioned residual means the
# current iterate is exact
ZERO_DIRECTION = 1e-300


@dataclass
class SolveOptions:
    """Common solver options; tol is on the relative residual."""
    tol: float = 1e-8
    maxit: int = 10000
    record_history: bool = True
    seed: int = 0

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.maxit < 1:
            raise ValueError("maxit must be at least 1")


@dataclass
class SolveReport:
    """Outcome of a solve, including interleaved residual history."""
    solution: np.ndarray
    iterations: int
    residuals: list
    half_step_residuals: list = field(default_factory=list)
    rel_errors: list = field(default_factory=list)
    termination: str = MAX_ITERATIONS
    bnorm: float = 1.0
    # recorded when record_history: per-step orthogonality defects and
    # norms of consecutive residual differences (full and half chains)
    orth_defects: list = field(default_factory=list)
    residual_diff_norms: list = field(default_factory=list)
    half_residual_diff_norms: list = field(default_factory=list)
    restart_true_residuals: list = field(default_factory=list)

    @property
    def final_residual(self):
        """Norm of the last recorded residual, half-step or full-step."""
        if not self.residuals and not self.half_step_residuals:
            return float("nan")
        if len(self.half_step_residuals) >= len(self.residuals):
            return self.half_step_residuals[-1]
        return self.residuals[-1] if self.residuals \
            else self.half_step_residuals[-1]

    @property
    def relres(self):
        ref = self.bnorm if self.bnorm > 0 else 1.0
        return self.final_residual / ref

    def to_dict(self):
        return {
            "iterations": self.iterations,
            "termination": self.termination,
            "relres": self.relres,
            "residuals": list(map(float, self.residuals)),
            "half_step_residuals": list(map(float, self.half_step_residuals)),
            "rel_errors": list(map(float, self.rel_errors)),
        }


@dataclass(frozen=True)
class StoppingRule:
    """Fixed-tolerance or discrepancy-principle stopping."""
    kind: str = "fixed"          # "fixed" | "discrepancy"
    noise_level: float = 0.0
    safety: float = 1.01

    def __post_init__(self):
        if self.kind not in ("fixed", "discrepancy"):
            raise ValueError(f"unknown stopping kind {self.kind!r}")
        if self.safety < 1.0:
            raise ValueError("safety factor must be >= 1")


def discrepancy_stop(relres, rule):
    """True once relres <= safety * noise_level.

    The comparison carries a 1e-12 relative guard so that decimal
    boundary cases (e.g. 0.0303 vs 1.01*0.03) count as stopped.
    """
    if rule.kind != "discrepancy":
        raise ValueError("rule is not a discrepancy rule")
    return relres <= rule.safety * rule.noise_level * (1.0 + 1e-12)


class _StagnationGuard:
    """Trips after `patience` consecutive steps without a relative
    residual decrease of at least `rel`."""

    def __init__(self, rel=1e-15, patience=5):
        self.rel = rel
        self.patience = patience
        self.best = np.inf
        self.count = 0

    def update(self, nrm):
        if nrm <= self.best * (1.0 - self.rel):
            self.best = nrm
            self.count = 0
            return False
        self.best = min(self.best, nrm)
        self.count += 1
        return self.count >= self.patience


def _record_err(errors, x, truth):
    if truth is not None:
        errors.append(float(np.linalg.norm(x - truth) / np.linalg.norm(truth)))


def _orth_defect(r, rnorm, mapped):
    worst = 0.0
    for Ad in mapped:
        denom = rnorm * np.linalg.norm(Ad)
        if denom > 0:
            worst = max(worst, abs(float(np.dot(r, Ad))) / denom)
    return worst


def tstmr_solve(A, b, x0=None, split=None, opts=None, truth=None, stop=None):
    """Two-step iteration with a two-dimensional minimum-residual search
    per half-step.

    The first outer step is a bootstrap with scalar (one-dimensional)
    steps; its directions seed the difference vectors of outer step 2.
    For every later step the parameters (beta1, beta2) and (gamma1,
    gamma2) solve 2x2 Gram systems enforcing orthogonality of the new
    residual to both mapped search directions.

    Breakdown handling: a zero preconditioned residual means the iterate
    is exact (Converged); a singular Gram system with nonzero directions
    triggers the closed-form recovery x* = (1-nu) x_k + nu x_{k-1} with
    nu the least-squares proportionality factor, verified by a residual
    check (else Stagnation).

    stop, when given, is a callable of the current full-step iterate that
    requests early termination (used for discrepancy stopping).
    """
    A = as_operator(A)
    opts = opts or SolveOptions()
    b = np.asarray(b, dtype=np.float64)
    x = np.zeros(A.ncols) if x0 is None else np.array(x0, dtype=np.float64)
    mt, mh = split.m_tilde, split.m_hat

    bnorm = float(np.linalg.norm(b))
    ref = bnorm if bnorm > 0 else 1.0
    target = opts.tol * ref
    rec = opts.record_history

    r = b - A.apply(x)
    rnorm = float(np.linalg.norm(r))
    rep = SolveReport(solution=x, iterations=0, residuals=[rnorm], bnorm=bnorm)
    _record_err(rep.rel_errors, x, truth)
    if rnorm <= target:
        rep.termination = CONVERGED
        return rep
    guard = _StagnationGuard()
    r_initial = r.copy()

    # bootstrap: one-dimensional steps produce x^(1) and seed the history
    d0 = mt.apply(r)
    if np.linalg.norm(d0) <= ZERO_DIRECTION:
        rep.termination = CONVERGED
        return rep
    Ad0 = A.apply(d0)
    denom = float(np.dot(Ad0, Ad0))
    if denom == 0.0:
        rep.termination = STAGNATION
        return rep
    beta0 = float(np.dot(r, Ad0)) / denom
    x = x + beta0 * d0
    r = r - beta0 * Ad0
    rnorm = float(np.linalg.norm(r))
    rep.half_step_residuals.append(rnorm)
    x_half, r_half = x, r
    if rnorm <= target:
        rep.solution, rep.iterations, rep.termination = x, 1, CONVERGED
        return rep
    dh0 = mh.apply(r)
    if np.linalg.norm(dh0) <= ZERO_DIRECTION:
        rep.solution, rep.iterations, rep.termination = x, 1, CONVERGED
        return rep
    Adh0 = A.apply(dh0)
    denom = float(np.dot(Adh0, Adh0))
    if denom == 0.0:
        rep.termination = STAGNATION
        rep.solution, rep.iterations = x, 1
        return rep
    gamma0 = float(np.dot(r, Adh0)) / denom
    prev_x = rep.solution  # x^(0)
    x = x + gamma0 * dh0
    r = r - gamma0 * Adh0
    rnorm = float(np.linalg.norm(r))
    rep.residuals.append(rnorm)
    rep.iterations = 1
    rep.solution = x
    _record_err(rep.rel_errors, x, truth)
    if rec:
        rep.residual_diff_norms.append(float(np.linalg.norm(r - r_initial)))
    guard.update(rnorm)

    prev_d1, prev_Ad1 = d0, Ad0
    prev_d1h, prev_Adh = dh0, Adh0
    prev_x_half, prev_r_half = x_half, r_half
    prev_r = None  # previous full residual vector, defined from k=1 on

    while rep.iterations < opts.maxit:
        if rnorm <= target:
            rep.termination = CONVERGED
            return rep
        if stop is not None and stop(x):
            rep.termination = CONVERGED
            return rep

        # beta half-step
        d1 = mt.apply(r)
        if np.linalg.norm(d1) <= ZERO_DIRECTION:
            rep.termination = CONVERGED
            return rep
        d2 = d1 - prev_d1
        Ad1 = A.apply(d1)
        Ad2 = Ad1 - prev_Ad1
        try:
            b1, b2 = gram2_solve(Gram2.from_vectors(Ad1, Ad2, r))
        except GramSingular:
            return _lucky_recovery(rep, A, b, target, x, prev_x, d1, d2, truth)
        x_half = x + b1 * d1 + b2 * d2
        r_half = r - b1 * Ad1 - b2 * Ad2
        rhnorm = float(np.linalg.norm(r_half))
        rep.half_step_residuals.append(rhnorm)
        if rec:
            rep.half_residual_diff_norms.append(
                float(np.linalg.norm(r_half - prev_r_half)))
            rep.orth_defects.append(_orth_defect(r_half, rhnorm, (Ad1, Ad2)))
        if rhnorm <= target:
            rep.solution, rep.termination = x_half, CONVERGED
            rep.iterations += 1
            _record_err(rep.rel_errors, x_half, truth)
            return rep

        # gamma half-step
        d1h = mh.apply(r_half)
        if np.linalg.norm(d1h) <= ZERO_DIRECTION:
            rep.solution, rep.termination = x_half, CONVERGED
            rep.iterations += 1
            return rep
        d2h = d1h - prev_d1h
        Adh = A.apply(d1h)
        Adh2 = Adh - prev_Adh
        try:
            g1, g2 = gram2_solve(Gram2.from_vectors(Adh, Adh2, r_half))
        except GramSingular:
            return _lucky_recovery(rep, A, b, target, x_half, prev_x_half,
                                   d1h, d2h, truth, half=True)
        prev_x = x
        prev_r = r
        x = x_half + g1 * d1h + g2 * d2h
        r = r_half - g1 * Adh - g2 * Adh2
        rep.iterations += 1
        if rep.iterations % RECOMPUTE_INTERVAL == 0:
            r = b - A.apply(x)
        rnorm = float(np.linalg.norm(r))
        rep.residuals.append(rnorm)
        rep.solution = x
        _record_err(rep.rel_errors, x, truth)
        if rec:
            rep.residual_diff_norms.append(float(np.linalg.norm(r - prev_r)))
            rep.orth_defects.append(_orth_defect(r, rnorm, (Adh, Adh2)))
        prev_d1, prev_Ad1 = d1, Ad1
        prev_d1h, prev_Adh = d1h, Adh
        prev_x_half, prev_r_half = x_half, r_half
        if guard.update(rnorm):
            rep.termination = STAGNATION
            return rep

    rep.termination = CONVERGED if rnorm <= target else MAX_ITERATIONS
    return rep


def _lucky_recovery(rep, A, b, target, x_cur, x_prev, d1, d2, truth, half=False):
    """Closed-form recovery from a singular Gram system (proportional
    directions): x* = (1-nu) x_cur + nu x_prev."""
    n2 = float(np.dot(d2, d2))
    n1 = float(np.dot(d1, d1))
    if n1 > 0.0 and n2 > 0.0:
        nu = float(np.dot(d1, d2)) / n2
        x_star = (1.0 - nu) * x_cur + nu * x_prev
        r_star = b - A.apply(x_star)
        rnorm = float(np.linalg.norm(r_star))
        if rnorm <= 10.0 * target:
            rep.solution = x_star
            rep.iterations += 1
            rep.residuals.append(rnorm)
            rep.termination = LUCKY_BREAKDOWN
            _record_err(rep.rel_errors, x_star, truth)
            return rep
    rep.termination = STAGNATION
    if half:
        rep.solution = x_cur
    return rep


def two_step_1d_mr_solve(A, b, x0=None, split=None, opts=None, truth=None,
                         stop=None):
    """Two-step iteration with scalar minimum-residual parameters per
    half-step (covers the alpha-shifted symmetric/skew pair and the
    midpoint-shifted skew variant, depending on the splitting pair)."""
    A = as_operator(A)
    opts = opts or SolveOptions()
    b = np.asarray(b, dtype=np.float64)
    x = np.zeros(A.ncols) if x0 is None else np.array(x0, dtype=np.float64)
    mt, mh = split.m_tilde, split.m_hat

    bnorm = float(np.linalg.norm(b))
    ref = bnorm if bnorm > 0 else 1.0
    target = opts.tol * ref

    r = b - A.apply(x)
    rnorm = float(np.linalg.norm(r))
    rep = SolveReport(solution=x, iterations=0, residuals=[rnorm], bnorm=bnorm)
    _record_err(rep.rel_errors, x, truth)
    guard = _StagnationGuard()

    while rep.iterations < opts.maxit:
        if rnorm <= target:
            rep.termination = CONVERGED
            return rep
        if stop is not None and stop(x):
            rep.termination = CONVERGED
            return rep
        d = mt.apply(r)
        Ad = A.apply(d)
        denom = float(np.dot(Ad, Ad))
        if denom == 0.0:
            rep.termination = STAGNATION
            return rep
        beta = float(np.dot(r, Ad)) / denom
        x = x + beta * d
        r = r - beta * Ad
        rnorm = float(np.linalg.norm(r))
        rep.half_step_residuals.append(rnorm)
        if rnorm <= target:
            rep.solution, rep.termination = x, CONVERGED
            rep.iterations += 1
            _record_err(rep.rel_errors, x, truth)
            return rep
        dh = mh.apply(r)
        Adh = A.apply(dh)
        denom = float(np.dot(Adh, Adh))
        if denom == 0.0:
            rep.termination = STAGNATION
            rep.solution = x
            return rep
        gamma = float(np.dot(r, Adh)) / denom
        x = x + gamma * dh
        r = r - gamma * Adh
        rep.iterations += 1
        if rep.iterations % RECOMPUTE_INTERVAL == 0:
            r = b - A.apply(x)
        rnorm = float(np.linalg.norm(r))
        rep.residuals.append(rnorm)
        rep.solution = x
        _record_err(rep.rel_errors, x, truth)
        if guard.update(rnorm):
            rep.termination = STAGNATION
            return rep

    rep.termination = CONVERGED if rnorm <= target else MAX_ITERATIONS
    return rep


def stationary_two_step_solve(A, b, x0=None, split=None, opts=None,
                              truth=None, stop=None):
    """Stationary alternation x <- x + M^-1 r with the two splitting
    matrices in turn (unit step parameters)."""
    A = as_operator(A)
    opts = opts or SolveOptions()
    b = np.asarray(b, dtype=np.float64)
    x = np.zeros(A.ncols) if x0 is None else np.array(x0, dtype=np.float64)
    mt, mh = split.m_tilde, split.m_hat

    bnorm = float(np.linalg.norm(b))
    ref = bnorm if bnorm > 0 else 1.0
    target = opts.tol * ref

    r = b - A.apply(x)
    rnorm = float(np.linalg.norm(r))
    rep = SolveReport(solution=x, iterations=0, residuals=[rnorm], bnorm=bnorm)
    _record_err(rep.rel_errors, x, truth)
    guard = _StagnationGuard(patience=20)

    while rep.iterations < opts.maxit:
        if rnorm <= target:
            rep.termination = CONVERGED
            return rep
        if stop is not None and stop(x):
            rep.termination = CONVERGED
            return rep
        d = mt.apply(r)
        x = x + d
        r = r - A.apply(d)
        rep.half_step_residuals.append(float(np.linalg.norm(r)))
        d = mh.apply(r)
        x = x + d
        r = r - A.apply(d)
        rep.iterations += 1
        if rep.iterations % RECOMPUTE_INTERVAL == 0:
            r = b - A.apply(x)
        rnorm = float(np.linalg.norm(r))
        rep.residuals.append(rnorm)
        rep.solution = x
        _record_err(rep.rel_errors, x, truth)
        if guard.update(rnorm):
            rep.termination = STAGNATION
            return rep

    rep.termination = CONVERGED if rnorm <= target else MAX_ITERATIONS
    return rep


def hss_solve(A, b, x0=None, alpha=1.0, opts=None, split=None, truth=None,
              realization="dense"):
    """Stationary alternation with (alpha*I + H(A), alpha*I + S(A)).

    A custom SplittingPair overrides the default exact sub-solvers.
    """
    if alpha <= 0 and split is None:
        raise ValueError("alpha must be positive")
    if split is None:
        from .splittings import hss_pair
        split = hss_pair(A, alpha, realization=realization)
    return stationary_two_step_solve(A, b, x0=x0, split=split, opts=opts,
                                     truth=truth)


def cgw_solve(op, sym_diag, b, x0=None, opts=None, truth=None):
    """Three-term recurrence for operators of the form (positive diagonal)
    plus skew-symmetric part, preconditioned by the diagonal.

    sym_diag is the positive diagonal of the symmetric part.
    """
    op = as_operator(op)
    opts = opts or SolveOptions()
    b = np.asarray(b, dtype=np.float64)
    sym_diag = np.asarray(sym_diag, dtype=np.float64)
    if np.any(sym_diag <= 0):
        raise ValueError("symmetric part must have a positive diagonal")
    x = np.zeros(op.ncols) if x0 is None else np.array(x0, dtype=np.float64)

    bnorm = float(np.linalg.norm(b))
    ref = bnorm if bnorm > 0 else 1.0
    target = opts.tol * ref

    r = b - op.apply(x)
    rnorm = float(np.linalg.norm(r))
    rep = SolveReport(solution=x, iterations=0, residuals=[rnorm], bnorm=bnorm)
    _record_err(rep.rel_errors, x, truth)

    x_prev = x.copy()
    r_prev = r.copy()
    z = r / sym_diag
    rho = float(np.dot(z, r))
    omega = 1.0
    rho_prev = rho

    while rep.iterations < opts.maxit:
        if rnorm <= target:
            rep.termination = CONVERGED
            return rep
        if rep.iterations == 0:
            omega = 1.0
        else:
            if rho_prev == 0.0 or omega == 0.0:
                rep.termination = STAGNATION
                return rep
            denom = 1.0 + (rho / rho_prev) / omega
            if denom == 0.0:
                rep.termination = STAGNATION
                return rep
            omega = 1.0 / denom
        x_next = x_prev + omega * (z + x - x_prev)
        r_next = r_prev + omega * (-op.apply(z) + r - r_prev)
        x_prev, x = x, x_next
        r_prev, r = r, r_next
        rep.iterations += 1
        if rep.iterations % RECOMPUTE_INTERVAL == 0:
            r = b - op.apply(x)
        rnorm = float(np.linalg.norm(r))
        rep.residuals.append(rnorm)
        rep.solution = x
        _record_err(rep.rel_errors, x, truth)
        z = r / sym_diag
        rho_prev = rho
        rho = float(np.dot(z, r))

    rep.termination = CONVERGED if rnorm <= target else MAX_ITERATIONS
    return rep


def pcg_solve(M, b, x0=None, precond=None, opts=None, truth=None):
    """Preconditioned conjugate gradients for SPD M (caller contract);
    nonpositive curvature terminates with Stagnation."""
    M = as_operator(M)
    opts = opts or SolveOptions()
    b = np.asarray(b, dtype=np.float64)
    x = np.zeros(M.ncols) if x0 is None else np.array(x0, dtype=np.float64)

    bnorm = float(np.linalg.norm(b))
    ref = bnorm if bnorm > 0 else 1.0
    target = opts.tol * ref

    r = b - M.apply(x)
    rnorm = float(np.linalg.norm(r))
    rep = SolveReport(solution=x, iterations=0, residuals=[rnorm], bnorm=bnorm)
    _record_err(rep.rel_errors, x, truth)
    if rnorm <= target:
        rep.termination = CONVERGED
        return rep

    z = precond.apply(r) if precond is not None else r.copy()
    p = z.copy()
    rz = float(np.dot(r, z))
    while rep.iterations < opts.maxit:
        q = M.apply(p)
        pq = float(np.dot(p, q))
        if pq <= 0.0:
            rep.termination = STAGNATION
            return rep
        alpha = rz / pq
        x = x + alpha * p
        r = r - alpha * q
        rep.iterations += 1
        rnorm = float(np.linalg.norm(r))
        rep.residuals.append(rnorm)
        rep.solution = x
        _record_err(rep.rel_errors, x, truth)
        if rnorm <= target:
            rep.termination = CONVERGED
            return rep
        z = precond.apply(r) if precond is not None else r.copy()
        rz_new = float(np.dot(r, z))
        if rz_new == 0.0:
            rep.termination = STAGNATION
            return rep
        p = z + (rz_new / rz) * p
        rz = rz_new

    rep.termination = MAX_ITERATIONS
    return rep


def cgls_solve(A, g, x0=None, opts=None, stop_rule=None, truth=None):
    """CG on the normal equations A.T A f = A.T g without forming A.T A.

    Residual history tracks ||g - A f||; stopping is the fixed relative
    tolerance or, when stop_rule is a discrepancy rule, the discrepancy
    principle on the same quantity.
    """
    A = as_operator(A)
    opts = opts or SolveOptions()
    g = np.asarray(g, dtype=np.float64)
    x = np.zeros(A.ncols) if x0 is None else np.array(x0, dtype=np.float64)

    gnorm = float(np.linalg.norm(g))
    ref = gnorm if gnorm > 0 else 1.0
    target = opts.tol * ref

    def met(rn):
        if stop_rule is not None and stop_rule.kind == "discrepancy":
            return discrepancy_stop(rn / ref, stop_rule)
        return rn <= target

    r = g - A.apply(x)
    rnorm = float(np.linalg.norm(r))
    rep = SolveReport(solution=x, iterations=0, residuals=[rnorm], bnorm=gnorm)
    _record_err(rep.rel_errors, x, truth)
    if met(rnorm):
        rep.termination = CONVERGED
        return rep

    s = A.apply_t(r)
    p = s.copy()
    gam = float(np.dot(s, s))
    while rep.iterations < opts.maxit:
        if gam == 0.0:
            rep.termination = CONVERGED  # normal equations satisfied
            return rep
        q = A.apply(p)
        qq = float(np.dot(q, q))
        if qq == 0.0:
            rep.termination = STAGNATION
            return rep
        alpha = gam / qq
        x = x + alpha * p
        r = r - alpha * q
        rep.iterations += 1
        rnorm = float(np.linalg.norm(r))
        rep.residuals.append(rnorm)
        rep.solution = x
        _record_err(rep.rel_errors, x, truth)
        if met(rnorm):
            rep.termination = CONVERGED
            return rep
        s = A.apply_t(r)
        gam_new = float(np.dot(s, s))
        p = s + (gam_new / gam) * p
        gam = gam_new

    rep.termination = MAX_ITERATIONS
    return rep


def gmres_solve(A, b, x0=None, restart=20, precond=None, opts=None, truth=None):
    """Right-preconditioned restarted GMRES (modified Gram-Schmidt Arnoldi,
    Givens rotations).

    The residual history holds the least-squares estimates; the true
    residual recomputed at each restart is recorded in
    restart_true_residuals as (global_iteration, norm) pairs.
    """
    A = as_operator(A)
    opts = opts or SolveOptions()
    if restart < 1:
        raise ValueError("restart must be >= 1")
    b = np.asarray(b, dtype=np.float64)
    x = np.zeros(A.ncols) if x0 is None else np.array(x0, dtype=np.float64)
    n = A.ncols
    m = min(restart, n)

    bnorm = float(np.linalg.norm(b))
    ref = bnorm if bnorm > 0 else 1.0
    target = opts.tol * ref

    rep = SolveReport(solution=x, iterations=0, residuals=[], bnorm=bnorm)
    _record_err(rep.rel_errors, x, truth)

    while True:
        r = b - A.apply(x)
        beta = float(np.linalg.norm(r))
        rep.restart_true_residuals.append((rep.iterations, beta))
        if not rep.residuals:
            rep.residuals.append(beta)
        if beta <= target:
            rep.solution, rep.termination = x, CONVERGED
            return rep
        if rep.iterations >= opts.maxit:
            rep.solution, rep.termination = x, MAX_ITERATIONS
            return rep

        V = np.empty((m + 1, n))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        gvec = np.zeros(m + 1)
        gvec[0] = beta
        V[0] = r / beta
        j_used = 0
        happy = False
        for j in range(m):
            z = precond.apply(V[j]) if precond is not None else V[j]
            w = A.apply(z)
            for i in range(j + 1):
                H[i, j] = float(np.dot(V[i], w))
                w -= H[i, j] * V[i]
            H[j + 1, j] = float(np.linalg.norm(w))
            colscale = float(np.abs(H[:j + 2, j]).max())
            happy = H[j + 1, j] <= 1e-13 * max(colscale, 1e-300)
            if not happy:
                V[j + 1] = w / H[j + 1, j]
            for i in range(j):
                t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = t
            denom = float(np.hypot(H[j, j], H[j + 1, j]))
            if denom == 0.0:
                happy = True
                j_used = j
                break
            cs[j] = H[j, j] / denom
            sn[j] = H[j + 1, j] / denom
            H[j, j] = denom
            H[j + 1, j] = 0.0
            gvec[j + 1] = -sn[j] * gvec[j]
            gvec[j] = cs[j] * gvec[j]
            j_used = j + 1
            rep.iterations += 1
            est = abs(gvec[j + 1])
            rep.residuals.append(est)
            if happy or est <= target or rep.iterations >= opts.maxit:
                break
        if j_used > 0:
            y = np.zeros(j_used)
            for i in range(j_used - 1, -1, -1):
                y[i] = (gvec[i] - float(np.dot(H[i, i + 1:j_used],
                                               y[i + 1:j_used]))) / H[i, i]
            update = V[:j_used].T @ y
            if precond is not None:
                update = precond.apply(update)
            x = x + update
            rep.solution = x
            _record_err(rep.rel_errors, x, truth)
        if happy:
            r = b - A.apply(x)
            beta = float(np.linalg.norm(r))
            rep.restart_true_residuals.append((rep.iterations, beta))
            rep.residuals.append(beta)
            rep.solution = x
            rep.termination = CONVERGED if beta <= 10 * target else STAGNATION
            return rep


class ContractionInfo(NamedTuple):
    """Quantities controlling the per-step residual contraction."""
    xi_tilde: float
    xi_hat: float
    norm_tilde: float
    norm_hat: float


def _xi(eigs):
    lo, hi = float(eigs[0]), float(eigs[-1])
    if lo > 0.0:
        return lo
    if hi < 0.0:
        return -hi
    return 0.0


def contraction_diagnostics(A, split, power_iters=200):
    """Field-of-values-style diagnostics for a dense instance.

    Materializes A M~^-1 and A M^-1 by applying the sub-solvers to
    identity columns (diagnostic only, n <= a few hundred), and returns
    the minimum |eigenvalue| of each symmetric part when its spectrum is
    single-signed (else 0), together with power-iteration norm estimates.
    """
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    eye = np.eye(n)
    mt_inv = np.column_stack([split.m_tilde.apply(eye[:, j]) for j in range(n)])
    mh_inv = np.column_stack([split.m_hat.apply(eye[:, j]) for j in range(n)])
    Gt = A @ mt_inv
    Gh = A @ mh_inv
    xi_t = _xi(sym_eigs_dense(0.5 * (Gt + Gt.T)))
    xi_h = _xi(sym_eigs_dense(0.5 * (Gh + Gh.T)))
    nt = power_norm(Gt, power_iters)
    nh = power_norm(Gh, power_iters)
    return ContractionInfo(xi_t, xi_h, nt, nh)
