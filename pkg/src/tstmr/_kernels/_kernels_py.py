"""Numpy fallback implementations of the hot CSR kernels.

Signatures mirror the compiled module `_kernels_cy` one-to-one; the package
selects one of the two at import time.  All index arrays are int64, values
float64, columns sorted ascending within each row.
"""

import numpy as np


def csr_matvec(row_starts, col_indices, values, x, out):
    """out = A @ x with row-wise accumulation."""
    nnz = values.shape[0]
    if nnz == 0:
        out[:] = 0.0
        return
    # padded so that a trailing empty row's start (== nnz) stays a valid
    # reduceat index without disturbing the preceding segment
    products = np.append(values * x[col_indices], 0.0)
    out[:] = np.add.reduceat(products, row_starts[:-1])
    out[np.diff(row_starts) == 0] = 0.0


def csr_lower_solve(row_starts, col_indices, values, b, out):
    """Forward solve L @ out = b; diagonal entry last in each row.

    Returns -1 on success, else the row index of a zero diagonal.
    """
    n = row_starts.shape[0] - 1
    for i in range(n):
        s, e = row_starts[i], row_starts[i + 1]
        d = values[e - 1]
        if d == 0.0:
            return i
        acc = b[i]
        if e - 1 > s:
            acc -= np.dot(values[s:e - 1], out[col_indices[s:e - 1]])
        out[i] = acc / d
    return -1


def csr_lower_transpose_solve(row_starts, col_indices, values, b, out):
    """Backward solve L.T @ out = b with L stored by rows (diagonal last).

    Returns -1 on success, else the row index of a zero diagonal.
    """
    n = row_starts.shape[0] - 1
    out[:] = b
    for i in range(n - 1, -1, -1):
        s, e = row_starts[i], row_starts[i + 1]
        d = values[e - 1]
        if d == 0.0:
            return i
        xi = out[i] / d
        out[i] = xi
        if e - 1 > s:
            np.subtract.at(out, col_indices[s:e - 1], values[s:e - 1] * xi)
    return -1


def csr_ldu_solve(row_starts, col_indices, values, diag_pos, b, out):
    """Apply (LU)^-1 for a combined no-fill LU stored in one CSR.

    L is unit lower (strict lower entries), U is upper including the
    diagonal at position diag_pos[i] in each row.
    """
    n = row_starts.shape[0] - 1
    for i in range(n):
        s, d = row_starts[i], diag_pos[i]
        acc = b[i]
        if d > s:
            acc -= np.dot(values[s:d], out[col_indices[s:d]])
        out[i] = acc
    for i in range(n - 1, -1, -1):
        d, e = diag_pos[i], row_starts[i + 1]
        acc = out[i]
        if e > d + 1:
            acc -= np.dot(values[d + 1:e], out[col_indices[d + 1:e]])
        out[i] = acc / values[d]


def _sparse_row_dot(col_indices, values, sa, ea, sb, eb, stop_col):
    """Dot product of two sparse rows over columns < stop_col."""
    acc = 0.0
    ia, ib = sa, sb
    while ia < ea and ib < eb:
        ca = col_indices[ia]
        if ca >= stop_col:
            break
        cb = col_indices[ib]
        if cb >= stop_col:
            break
        if ca == cb:
            acc += values[ia] * values[ib]
            ia += 1
            ib += 1
        elif ca < cb:
            ia += 1
        else:
            ib += 1
    return acc


def ic0_factor(row_starts, col_indices, values_in, values_out):
    """No-fill incomplete Cholesky on the lower-triangle pattern.

    Input is the lower triangle of a symmetric matrix (diagonal last per
    row).  Returns -1 on success, else the row with a nonpositive pivot.
    """
    n = row_starts.shape[0] - 1
    for i in range(n):
        s, e = row_starts[i], row_starts[i + 1]
        for idx in range(s, e):
            j = col_indices[idx]
            sj, ej = row_starts[j], row_starts[j + 1]
            acc = values_in[idx] - _sparse_row_dot(
                col_indices, values_out, s, idx, sj, ej - 1, j)
            if j < i:
                values_out[idx] = acc / values_out[ej - 1]
            else:
                if acc <= 0.0:
                    return i
                values_out[idx] = np.sqrt(acc)
    return -1


def ilu0_factor(row_starts, col_indices, values, diag_pos):
    """In-place no-fill ILU (ikj variant) on a full CSR pattern.

    Returns -1 on success, else the row where a zero pivot appeared.
    """
    n = row_starts.shape[0] - 1
    for i in range(n):
        s, e = row_starts[i], row_starts[i + 1]
        idx = s
        while idx < e and col_indices[idx] < i:
            k = col_indices[idx]
            piv = values[diag_pos[k]]
            if piv == 0.0:
                return k
            lik = values[idx] / piv
            values[idx] = lik
            # eliminate using the upper part of row k
            ik = diag_pos[k] + 1
            ek = row_starts[k + 1]
            ii = idx + 1
            while ik < ek and ii < e:
                ck = col_indices[ik]
                ci = col_indices[ii]
                if ck == ci:
                    values[ii] -= lik * values[ik]
                    ik += 1
                    ii += 1
                elif ck < ci:
                    ik += 1
                else:
                    ii += 1
            idx += 1
        if values[diag_pos[i]] == 0.0:
            return i
    return -1
