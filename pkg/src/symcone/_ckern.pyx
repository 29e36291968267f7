# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for batched elementary symmetric polynomials.

Same arithmetic order as symcone._pykern; compiled with -ffp-contract=off
so the two backends agree bit for bit.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def elem_sym(double[:, ::1] lam, int kmax):
    """All sigma_0..sigma_kmax per row of ``lam`` (shape (m, n))."""
    cdef Py_ssize_t m = lam.shape[0]
    cdef Py_ssize_t n = lam.shape[1]
    out = np.zeros((m, kmax + 1))
    cdef double[:, ::1] e = out
    cdef Py_ssize_t r, j, i, top
    cdef double x
    for r in range(m):
        e[r, 0] = 1.0
        for j in range(n):
            x = lam[r, j]
            top = j + 1
            if top > kmax:
                top = kmax
            for i in range(top, 0, -1):
                e[r, i] = e[r, i] + x * e[r, i - 1]
    return out


def elem_sym_partials(double[:, ::1] lam, int k):
    """d(sigma_k)/d(lam_i) = sigma_{k-1} of the row with entry i deleted.

    Prefix/suffix scheme: with P[i] the symmetric polynomials of entries
    before i and S[i] those after i,
        sigma_{k-1}(row \\ i) = sum_{a+b=k-1} P[i][a] * S[i][b],
    which is O(n k) per row instead of O(n^2 k) for per-entry deletion.
    """
    cdef Py_ssize_t m = lam.shape[0]
    cdef Py_ssize_t n = lam.shape[1]
    if k == 1:
        return np.ones((m, n))
    cdef int deg = k  # degrees 0..k-1 are needed
    out = np.zeros((m, n))
    cdef double[:, ::1] p = out
    pre_buf = np.zeros((n, deg))
    suf_buf = np.zeros((n, deg))
    cdef double[:, ::1] pre = pre_buf
    cdef double[:, ::1] suf = suf_buf
    cdef Py_ssize_t r, j, i, top, a
    cdef double x, acc
    for r in range(m):
        for i in range(deg):
            pre[0, i] = 0.0
        pre[0, 0] = 1.0
        for j in range(1, n):
            for i in range(deg):
                pre[j, i] = pre[j - 1, i]
            x = lam[r, j - 1]
            top = j
            if top > deg - 1:
                top = deg - 1
            for i in range(top, 0, -1):
                pre[j, i] = pre[j, i] + x * pre[j, i - 1]
        for i in range(deg):
            suf[n - 1, i] = 0.0
        suf[n - 1, 0] = 1.0
        for j in range(n - 2, -1, -1):
            for i in range(deg):
                suf[j, i] = suf[j + 1, i]
            x = lam[r, j + 1]
            top = n - 1 - j
            if top > deg - 1:
                top = deg - 1
            for i in range(top, 0, -1):
                suf[j, i] = suf[j, i] + x * suf[j, i - 1]
        for j in range(n):
            acc = 0.0
            for a in range(k):
                acc = acc + pre[j, a] * suf[j, k - 1 - a]
            p[r, j] = acc
    return out
