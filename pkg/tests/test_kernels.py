"""Kernel primitives against brute-force subset enumeration, plus backend parity."""

from itertools import combinations

import numpy as np
import pytest

from symcone import kernels


def brute_sigma(vals, k):
    """Subset-sum oracle: sum of products over all k-subsets."""
    if k == 0:
        return 1.0
    total = 0.0
    for idx in combinations(range(len(vals)), k):
        prod = 1.0
        for i in idx:
            prod *= vals[i]
        total += prod
    return total


def test_elem_sym_matches_brute_force():
    rng = np.random.default_rng(7)
    for n in range(2, 9):
        lam = rng.standard_normal((5, n)) * 3.0
        e = kernels.elem_sym(lam, n)
        for row in range(5):
            for k in range(n + 1):
                expect = brute_sigma(lam[row], k)
                assert e[row, k] == pytest.approx(expect, rel=1e-12, abs=1e-12)


def test_elem_sym_partials_match_deletion_oracle():
    rng = np.random.default_rng(11)
    for n in range(2, 8):
        lam = rng.standard_normal((4, n)) * 2.0
        for k in range(1, n + 1):
            p = kernels.elem_sym_partials(lam, k)
            for row in range(4):
                for i in range(n):
                    sub = np.delete(lam[row], i)
                    assert p[row, i] == pytest.approx(
                        brute_sigma(sub, k - 1), rel=1e-12, abs=1e-12
                    )


def test_known_values():
    assert kernels.elem_sym(np.array([[1.0, 2.0, 3.0]]), 3).tolist() == [[1, 6, 11, 6]]
    assert kernels.elem_sym_partials(np.array([[1.0, 2.0, 3.0]]), 2).tolist() == [[5, 4, 3]]


def test_out_of_range_rejected():
    lam = np.ones((1, 3))
    with pytest.raises(ValueError):
        kernels.elem_sym(lam, 4)
    with pytest.raises(ValueError):
        kernels.elem_sym_partials(lam, 0)


def test_backend_parity_bit_for_bit():
    backends = kernels.available_backends()
    if len(backends) < 2:
        pytest.skip("compiled backend not built")
    rng = np.random.default_rng(23)
    lam = np.ascontiguousarray(rng.standard_normal((64, 7)) * 10.0)
    for k in range(1, 8):
        a = backends["python"].elem_sym(lam, k)
        b = backends["cython"].elem_sym(lam, k)
        assert np.array_equal(a, b)
        pa = backends["python"].elem_sym_partials(lam, k)
        pb = backends["cython"].elem_sym_partials(lam, k)
        assert np.array_equal(pa, pb)
