"""Concave symmetric operator families on eigenvalue tuples.

Four families, each with a closed-form value, gradient, natural domain
cone, and asymptotic cone:

  sigma_root(k):      sigma_k^(1/k)            on garding(k)
  sigma_quotient(k):  sigma_k / sigma_{k-1}    on garding(k)
  guan_zhang(k,a,b):  sigma_k/sigma_{k-1} - sum_j a_j/sigma_j
                                         - sum_j b_j sigma_j/sigma_k
                      on garding(k-1), asymptotic cone garding(k)
  linear:             sigma_1                  on garding(1)

sigma_root and sigma_quotient are positively homogeneous of degree one, so
their asymptotic cone coincides with the domain; guan_zhang is not
homogeneous and its asymptotic cone garding(k) is a proper subcone of the
domain.  Gradients are closed-form throughout (finite differences appear
only in tests); for an ascending tuple the gradient components come out
descending, a consequence of symmetry plus concavity.
"""

from dataclasses import dataclass, field

import numpy as np

from . import cones, kernels
from .errors import DomainError, InfeasiblePointError

GZ_SIGMA_K_GUARD = 1e-30
GRAD_SLACK = 1e-12


@dataclass(frozen=True)
class EigenTuple:
    """Ordered real n-vector of eigenvalues; immutable once constructed."""

    values: tuple

    def __init__(self, values):
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 2:
            raise DomainError("eigenvalue tuple needs n >= 2 entries")
        if not np.all(np.isfinite(arr)):
            raise DomainError("eigenvalue entries must be finite")
        object.__setattr__(self, "values", tuple(float(x) for x in arr))

    @property
    def n(self):
        return len(self.values)

    def array(self):
        return np.array(self.values)

    def sorted(self):
        return EigenTuple(sorted(self.values))


def _vals(lam):
    if isinstance(lam, EigenTuple):
        return lam.array()
    return np.asarray(lam, dtype=np.float64)


@dataclass(frozen=True)
class OperatorSpec:
    family: str  # "sigma_root" | "sigma_quotient" | "guan_zhang" | "linear"
    n: int
    k: int = 1
    alphas: tuple = field(default_factory=tuple)
    betas: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("ambient dimension must be >= 2")
        if self.family in ("sigma_root", "sigma_quotient"):
            if not 1 <= self.k <= self.n:
                raise DomainError(f"k={self.k} out of range for n={self.n}")
        elif self.family == "linear":
            if self.k != 1:
                raise DomainError("linear operator has k = 1")
        elif self.family == "guan_zhang":
            if not 2 <= self.k <= self.n:
                raise DomainError(f"guan_zhang needs 2 <= k <= n, got k={self.k}")
            if len(self.alphas) != self.k - 1 or len(self.betas) != self.k - 1:
                raise DomainError("guan_zhang needs k-1 alpha and k-1 beta weights")
            if any(a < 0 for a in self.alphas) or any(b < 0 for b in self.betas):
                raise DomainError("guan_zhang weights must be nonnegative")
            if sum(self.alphas) + sum(self.betas) <= 0:
                raise DomainError("guan_zhang needs sum(alphas) + sum(betas) > 0")
        else:
            raise DomainError(f"unknown family {self.family!r}")

    # -- cone structure ----------------------------------------------------

    def domain(self):
        """Natural domain cone of the family."""
        if self.family == "guan_zhang":
            return cones.garding(self.k - 1, self.n)
        return cones.garding(self.k, self.n)

    def asymptotic_cone(self):
        """Interior asymptotic cone: directions along which f stays bounded below."""
        return cones.garding(self.k, self.n)

    def domain_mask(self, lam):
        """Strict-domain membership for a batch of rows (unchecked eval guard)."""
        lam = kernels.as_batch(lam)
        mask = cones.contains_batch(self.domain(), lam)
        if self.family == "guan_zhang":
            # keep clear of the sigma_k = 0 divide inside garding(k-1)
            ek = kernels.elem_sym(lam, self.k)[:, self.k]
            mask = mask & (np.abs(ek) >= GZ_SIGMA_K_GUARD)
        return mask

    # -- batched value and gradient (no feasibility checks) -----------------

    def eval_batch(self, lam):
        with np.errstate(divide="ignore", invalid="ignore"):
            return self._eval_batch(lam)

    def _eval_batch(self, lam):
        lam = kernels.as_batch(lam)
        k = self.k
        if self.family == "linear":
            return lam.sum(axis=1)
        e = kernels.elem_sym(lam, k)
        if self.family == "sigma_root":
            if k == 1:
                return e[:, 1]
            # signed continuation outside the cone keeps Newton recovery
            # steps informative; checked evaluation still rejects such points
            return np.sign(e[:, k]) * np.abs(e[:, k]) ** (1.0 / k)
        if self.family == "sigma_quotient":
            if k == 1:
                return e[:, 1]
            return e[:, k] / e[:, k - 1]
        val = e[:, k] / e[:, k - 1]
        for j, a in enumerate(self.alphas, start=1):
            if a:
                val = val - a / e[:, j]
        for j, b in enumerate(self.betas, start=0):
            if b:
                val = val - b * e[:, j] / e[:, k]
        return val

    def grad_batch(self, lam):
        with np.errstate(divide="ignore", invalid="ignore"):
            return self._grad_batch(lam)

    def _grad_batch(self, lam):
        lam = kernels.as_batch(lam)
        k = self.k
        m, n = lam.shape
        if self.family == "linear" or k == 1:
            return np.ones((m, n))
        e = kernels.elem_sym(lam, k)
        pk = kernels.elem_sym_partials(lam, k)
        if self.family == "sigma_root":
            v = e[:, k]
            return (1.0 / k) * np.abs(v)[:, None] ** (1.0 / k - 1.0) * pk
        pk1 = kernels.elem_sym_partials(lam, k - 1)
        quot = (e[:, k - 1, None] * pk - e[:, k, None] * pk1) / e[:, k - 1, None] ** 2
        if self.family == "sigma_quotient":
            return quot
        g = quot
        parts = {k: pk, k - 1: pk1}

        def partial(j):
            if j == 0:
                return np.zeros((m, n))
            if j not in parts:
                parts[j] = kernels.elem_sym_partials(lam, j)
            return parts[j]

        for j, a in enumerate(self.alphas, start=1):
            if a:
                g = g + a * partial(j) / e[:, j, None] ** 2
        for j, b in enumerate(self.betas, start=0):
            if b:
                g = g - b * (partial(j) * e[:, k, None] - e[:, j, None] * pk) / e[:, k, None] ** 2
        return g


def sigma_root(k, n):
    return OperatorSpec("sigma_root", n, k=k)


def sigma_quotient(k, n):
    return OperatorSpec("sigma_quotient", n, k=k)


def guan_zhang(k, n, alphas, betas):
    return OperatorSpec("guan_zhang", n, k=k, alphas=tuple(alphas), betas=tuple(betas))


def linear(n):
    return OperatorSpec("linear", n, k=1)


# -- elementary symmetric polynomials ---------------------------------------


def sigma(lam, k):
    """sigma_k(lam) by the stable coefficient recurrence; sigma_0 = 1."""
    v = _vals(lam)
    if not 0 <= k <= v.size:
        raise DomainError(f"k={k} out of range for n={v.size}")
    return float(kernels.elem_sym(v, k)[0, k])


def sigma_partial(lam, k, i):
    """d(sigma_k)/d(lam_i): sigma_{k-1} of the tuple with entry i deleted."""
    v = _vals(lam)
    n = v.size
    if not 1 <= k <= n:
        raise DomainError(f"k={k} out of range for n={n}")
    if not 0 <= i < n:
        raise DomainError(f"index i={i} out of range for n={n}")
    return float(kernels.elem_sym_partials(v, k)[0, i])


# -- checked scalar operations ----------------------------------------------


def evaluate(op, lam):
    """f(lam); raises InfeasiblePointError outside the domain cone."""
    v = _vals(lam)
    if not op.domain_mask(v)[0]:
        raise InfeasiblePointError(f"point outside domain of {op.family}(k={op.k})")
    return float(op.eval_batch(v)[0])


def gradient(op, lam):
    """(f_1, ..., f_n) at a strictly interior point; components >= 0."""
    v = _vals(lam)
    eps = 1e-12 * (1.0 + np.abs(v).max())
    if not op.domain_mask(v - eps)[0]:
        raise InfeasiblePointError(
            f"gradient needs a strict interior point of {op.family}(k={op.k})"
        )
    g = op.grad_batch(v)[0]
    if g.min() < -GRAD_SLACK:
        raise InfeasiblePointError("gradient clipped below the nonnegativity slack")
    return EigenTuple(g)


def concavity_probe(op, lam, mu):
    """Midpoint concavity test: f((lam+mu)/2) >= (f(lam)+f(mu))/2 - 1e-10."""
    a, b = _vals(lam), _vals(mu)
    fa = evaluate(op, a)
    fb = evaluate(op, b)
    fm = evaluate(op, 0.5 * (a + b))
    return fm >= 0.5 * (fa + fb) - 1e-10


def asymptotic_cone(op):
    return op.asymptotic_cone()


def domain(op):
    return op.domain()


# -- serialization -----------------------------------------------------------


def to_json(op):
    return {
        "family": op.family,
        "k": op.k,
        "n": op.n,
        "alphas": list(op.alphas),
        "betas": list(op.betas),
    }


def from_json(obj):
    if not isinstance(obj, dict):
        raise DomainError("operator spec must be a JSON object")
    allowed = {"family", "k", "n", "alphas", "betas"}
    unknown = set(obj) - allowed
    if unknown:
        raise DomainError(f"unknown operator spec keys: {sorted(unknown)}")
    family = obj.get("family")
    n = obj.get("n")
    if not isinstance(n, int):
        raise DomainError("operator spec needs an integer dimension 'n'")
    if family == "linear":
        return linear(n)
    k = obj.get("k")
    if not isinstance(k, int):
        raise DomainError("operator spec needs an integer order 'k'")
    if family == "sigma_root":
        return sigma_root(k, n)
    if family == "sigma_quotient":
        return sigma_quotient(k, n)
    if family == "guan_zhang":
        return guan_zhang(k, n, obj.get("alphas", ()), obj.get("betas", ()))
    raise DomainError(f"unknown family {family!r}")
