"""Pure-numpy fallback for the batched elementary-symmetric kernels.

Arithmetic order matches symcone._ckern exactly so both backends produce
bit-identical results.
"""

import numpy as np


def elem_sym(lam, kmax):
    """All sigma_0..sigma_kmax per row of ``lam`` (shape (m, n))."""
    m, n = lam.shape
    e = np.zeros((m, kmax + 1))
    e[:, 0] = 1.0
    for j in range(n):
        x = lam[:, j]
        top = min(j + 1, kmax)
        for i in range(top, 0, -1):
            e[:, i] += x * e[:, i - 1]
    return e


def elem_sym_partials(lam, k):
    """d(sigma_k)/d(lam_i) = sigma_{k-1} of the row with entry i deleted.

    Prefix/suffix scheme: with P[i] the symmetric polynomials of entries
    before i and S[i] those after i,
        sigma_{k-1}(row \\ i) = sum_{a+b=k-1} P[i][a] * S[i][b],
    which is O(n k) per row instead of O(n^2 k) for per-entry deletion.
    """
    m, n = lam.shape
    if k == 1:
        return np.ones((m, n))
    deg = k  # degrees 0..k-1 are needed
    pre = np.zeros((m, n, deg))
    pre[:, 0, 0] = 1.0
    for j in range(1, n):
        pre[:, j] = pre[:, j - 1]
        x = lam[:, j - 1]
        top = min(j, deg - 1)
        for i in range(top, 0, -1):
            pre[:, j, i] += x * pre[:, j, i - 1]
    suf = np.zeros((m, n, deg))
    suf[:, n - 1, 0] = 1.0
    for j in range(n - 2, -1, -1):
        suf[:, j] = suf[:, j + 1]
        x = lam[:, j + 1]
        top = min(n - 1 - j, deg - 1)
        for i in range(top, 0, -1):
            suf[:, j, i] += x * suf[:, j, i - 1]
    out = np.zeros((m, n))
    for a in range(k):
        out += pre[:, :, a] * suf[:, :, k - 1 - a]
    return out
