"""Backend dispatch for the hot batched kernels.

The compiled extension (symcone._ckern, Cython) is preferred; the numpy
fallback (symcone._pykern) is selected when the extension is missing or
when SYMCONE_PURE_PYTHON is set in the environment.  Both implement the
same two primitives over C-contiguous float64 batches:

    elem_sym(lam, kmax)          -> (m, kmax+1)  all sigma_0..sigma_kmax
    elem_sym_partials(lam, k)    -> (m, n)       d(sigma_k)/d(lam_i)

sigma_k is evaluated by the coefficient recurrence of prod_i (x + lam_i),
which is O(n k) per row and numerically stable; subset-sum enumeration is
used only as a test oracle.
"""

import os

import numpy as np

from . import _pykern

if os.environ.get("SYMCONE_PURE_PYTHON"):
    _impl = _pykern
    BACKEND = "python"
else:
    try:
        from . import _ckern as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pykern
        BACKEND = "python"


def as_batch(lam):
    """Coerce to a C-contiguous float64 batch of eigenvalue rows."""
    a = np.ascontiguousarray(lam, dtype=np.float64)
    if a.ndim == 1:
        a = a[None, :]
    if a.ndim != 2:
        raise ValueError("expected a vector or a batch of vectors")
    return a


def elem_sym(lam, kmax):
    lam = as_batch(lam)
    n = lam.shape[1]
    if not 0 <= kmax <= n:
        raise ValueError(f"kmax={kmax} out of range for n={n}")
    return _impl.elem_sym(lam, int(kmax))


def elem_sym_partials(lam, k):
    lam = as_batch(lam)
    n = lam.shape[1]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range for n={n}")
    return _impl.elem_sym_partials(lam, int(k))


def available_backends():
    """Map of backend name -> module, for benchmarking and parity tests."""
    out = {"python": _pykern}
    try:
        from . import _ckern

        out["cython"] = _ckern
    except ImportError:
        pass
    return out
