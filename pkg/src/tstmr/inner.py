"""Minimal inner iterations for sub-solvers.

These run from a zero start to a loose relative tolerance and return the
last iterate unconditionally: the outer minimum-residual step absorbs the
inexactness, so truncation never raises.
"""

import numpy as np

__all__ = ["cg_apply", "gmres_apply"]


def cg_apply(matvec, b, tol, maxit, precond=None):
    """Conjugate gradients on an SPD operator, zero start."""
    n = b.shape[0]
    x = np.zeros(n)
    r = b.copy()
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return x
    z = precond(r) if precond is not None else r
    p = z.copy()
    rz = float(np.dot(r, z))
    for _ in range(maxit):
        q = matvec(p)
        pq = float(np.dot(p, q))
        if pq <= 0.0:
            break
        alpha = rz / pq
        x += alpha * p
        r -= alpha * q
        if np.linalg.norm(r) <= tol * bnorm:
            break
        z = precond(r) if precond is not None else r
        rz_new = float(np.dot(r, z))
        if rz_new == 0.0:
            break
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x


def gmres_apply(matvec, b, tol, maxit):
    """Full (non-restarted) GMRES with modified Gram-Schmidt, zero start."""
    n = b.shape[0]
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n)
    m = min(maxit, n)
    V = np.empty((m + 1, n))
    H = np.zeros((m + 1, m))
    cs = np.zeros(m)
    sn = np.zeros(m)
    g = np.zeros(m + 1)
    g[0] = bnorm
    V[0] = b / bnorm
    j_used = 0
    for j in range(m):
        w = matvec(V[j])
        for i in range(j + 1):
            H[i, j] = np.dot(V[i], w)
            w -= H[i, j] * V[i]
        H[j + 1, j] = np.linalg.norm(w)
        colscale = float(np.abs(H[:j + 2, j]).max())
        happy = H[j + 1, j] <= 1e-13 * max(colscale, 1e-300)
        if not happy:
            V[j + 1] = w / H[j + 1, j]
        for i in range(j):
            t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
            H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
            H[i, j] = t
        denom = np.hypot(H[j, j], H[j + 1, j])
        if denom == 0.0:
            j_used = j
            break
        cs[j] = H[j, j] / denom
        sn[j] = H[j + 1, j] / denom
        H[j, j] = denom
        H[j + 1, j] = 0.0
        g[j + 1] = -sn[j] * g[j]
        g[j] = cs[j] * g[j]
        j_used = j + 1
        if happy or abs(g[j + 1]) <= tol * bnorm:
            break
    y = np.zeros(j_used)
    for i in range(j_used - 1, -1, -1):
        y[i] = (g[i] - np.dot(H[i, i + 1:j_used], y[i + 1:j_used])) / H[i, i]
    return V[:j_used].T @ y
