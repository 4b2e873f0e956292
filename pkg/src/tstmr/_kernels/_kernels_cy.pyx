# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled CSR kernels; signatures mirror `_kernels_py`."""

from libc.math cimport sqrt

import numpy as np

cimport numpy as cnp

ctypedef cnp.int64_t idx_t
ctypedef cnp.float64_t val_t


def csr_matvec(idx_t[::1] row_starts, idx_t[::1] col_indices,
               val_t[::1] values, val_t[::1] x, val_t[::1] out):
    cdef Py_ssize_t n = row_starts.shape[0] - 1
    cdef Py_ssize_t i, idx
    cdef val_t acc
    for i in range(n):
        acc = 0.0
        for idx in range(row_starts[i], row_starts[i + 1]):
            acc += values[idx] * x[col_indices[idx]]
        out[i] = acc


def csr_lower_solve(idx_t[::1] row_starts, idx_t[::1] col_indices,
                    val_t[::1] values, val_t[::1] b, val_t[::1] out):
    cdef Py_ssize_t n = row_starts.shape[0] - 1
    cdef Py_ssize_t i, idx, s, e
    cdef val_t acc, d
    for i in range(n):
        s = row_starts[i]
        e = row_starts[i + 1]
        d = values[e - 1]
        if d == 0.0:
            return i
        acc = b[i]
        for idx in range(s, e - 1):
            acc -= values[idx] * out[col_indices[idx]]
        out[i] = acc / d
    return -1


def csr_lower_transpose_solve(idx_t[::1] row_starts, idx_t[::1] col_indices,
                              val_t[::1] values, val_t[::1] b, val_t[::1] out):
    cdef Py_ssize_t n = row_starts.shape[0] - 1
    cdef Py_ssize_t i, idx, s, e
    cdef val_t xi, d
    for i in range(n):
        out[i] = b[i]
    for i in range(n - 1, -1, -1):
        s = row_starts[i]
        e = row_starts[i + 1]
        d = values[e - 1]
        if d == 0.0:
            return i
        xi = out[i] / d
        out[i] = xi
        for idx in range(s, e - 1):
            out[col_indices[idx]] -= values[idx] * xi
    return -1


def csr_ldu_solve(idx_t[::1] row_starts, idx_t[::1] col_indices,
                  val_t[::1] values, idx_t[::1] diag_pos,
                  val_t[::1] b, val_t[::1] out):
    cdef Py_ssize_t n = row_starts.shape[0] - 1
    cdef Py_ssize_t i, idx
    cdef val_t acc
    for i in range(n):
        acc = b[i]
        for idx in range(row_starts[i], diag_pos[i]):
            acc -= values[idx] * out[col_indices[idx]]
        out[i] = acc
    for i in range(n - 1, -1, -1):
        acc = out[i]
        for idx in range(diag_pos[i] + 1, row_starts[i + 1]):
            acc -= values[idx] * out[col_indices[idx]]
        out[i] = acc / values[diag_pos[i]]


cdef val_t _sparse_row_dot(idx_t[::1] col_indices, val_t[::1] values,
                           Py_ssize_t sa, Py_ssize_t ea,
                           Py_ssize_t sb, Py_ssize_t eb,
                           idx_t stop_col) noexcept:
    cdef val_t acc = 0.0
    cdef Py_ssize_t ia = sa, ib = sb
    cdef idx_t ca, cb
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


def ic0_factor(idx_t[::1] row_starts, idx_t[::1] col_indices,
               val_t[::1] values_in, val_t[::1] values_out):
    cdef Py_ssize_t n = row_starts.shape[0] - 1
    cdef Py_ssize_t i, idx, s, e, sj, ej
    cdef idx_t j
    cdef val_t acc
    for i in range(n):
        s = row_starts[i]
        e = row_starts[i + 1]
        for idx in range(s, e):
            j = col_indices[idx]
            sj = row_starts[j]
            ej = row_starts[j + 1]
            acc = values_in[idx] - _sparse_row_dot(
                col_indices, values_out, s, idx, sj, ej - 1, j)
            if j < i:
                values_out[idx] = acc / values_out[ej - 1]
            else:
                if acc <= 0.0:
                    return i
                values_out[idx] = sqrt(acc)
    return -1


def ilu0_factor(idx_t[::1] row_starts, idx_t[::1] col_indices,
                val_t[::1] values, idx_t[::1] diag_pos):
    cdef Py_ssize_t n = row_starts.shape[0] - 1
    cdef Py_ssize_t i, idx, s, e, ik, ek, ii
    cdef idx_t k, ck, ci
    cdef val_t piv, lik
    for i in range(n):
        s = row_starts[i]
        e = row_starts[i + 1]
        idx = s
        while idx < e and col_indices[idx] < i:
            k = col_indices[idx]
            piv = values[diag_pos[k]]
            if piv == 0.0:
                return k
            lik = values[idx] / piv
            values[idx] = lik
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
