"""Verification utilities binding the convergence theory to actual runs:
sufficient-condition checks, interleaved monotone-chain validation and
per-step contraction bounds."""

import math

import numpy as np

from .linalg import power_norm

__all__ = [
    "check_remark24", "validate_monotone_chain",
    "interleaved_residuals", "per_step_contraction_bounds",
]


def check_remark24(nt_mt_inv, nh_mh_inv, power_iters=200):
    """Sufficient convergence condition: at least one of the two iteration
    matrices N M^-1 has 2-norm strictly below one (power-iteration
    estimate, margin 1e-10)."""
    nt = power_norm(np.asarray(nt_mt_inv, dtype=np.float64), power_iters)
    nh = power_norm(np.asarray(nh_mh_inv, dtype=np.float64), power_iters)
    return nt < 1.0 - 1e-10 or nh < 1.0 - 1e-10


def interleaved_residuals(report):
    """Residual norms in run order: full(0), half(1/2), full(1), ..."""
    merged = []
    fulls = report.residuals
    halves = report.half_step_residuals
    for k in range(max(len(fulls), len(halves))):
        if k < len(fulls):
            merged.append(fulls[k])
        if k < len(halves):
            merged.append(halves[k])
    return merged


def validate_monotone_chain(report, rel_tol=1e-14):
    """True iff the interleaved half/full residual sequence is
    non-increasing (relative tolerance) with strict decrease between
    consecutive full-step residuals.

    Single-step reports are vacuously valid.
    """
    merged = interleaved_residuals(report)
    for prev, cur in zip(merged, merged[1:]):
        if cur > prev * (1.0 + rel_tol):
            return False
    fulls = report.residuals
    for prev, cur in zip(fulls, fulls[1:]):
        if not cur < prev:
            return False
    return True


def per_step_contraction_bounds(report, info):
    """Per-step contraction factors L_k computable from a recorded history
    and contraction diagnostics.

    Returns a list of (k, L_k) pairs, k >= 1, for which the theory
    guarantees ||r_(k+1)|| <= L_k ||r_(k)|| under exact sub-solves.
    Requires a report produced with record_history.
    """
    out = []
    fulls = report.residuals
    halves = report.half_step_residuals
    dif = report.residual_diff_norms
    hdif = report.half_residual_diff_norms
    nt2 = info.norm_tilde ** 2
    nh2 = info.norm_hat ** 2
    kmax = min(len(fulls) - 2, len(halves) - 1, len(dif), len(hdif))
    for k in range(1, kmax + 1):
        rk2 = fulls[k] ** 2
        lt = info.xi_tilde ** 2 * rk2 / (rk2 + dif[k - 1] ** 2)
        hk2 = halves[k] ** 2
        lh = info.xi_hat ** 2 * hk2 / (hk2 + hdif[k - 1] ** 2)
        term1 = max(0.0, 1.0 - lt / nt2) if nt2 > 0 else 1.0
        term2 = max(0.0, 1.0 - lh / nh2) if nh2 > 0 else 1.0
        out.append((k, math.sqrt(term1) * math.sqrt(term2)))
    return out
