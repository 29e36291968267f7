"""Open symmetric convex cones as membership predicates.

Four kinds are supported:

  garding(k)      sigma_j > 0 for all j <= k (the k-th Garding cone)
  pk(k)           every sum of k entries is positive
  transformed     preimage of a base cone under the linear map
                  lam_i = (sum_j mu_j - (n - rho) mu_i) / rho
  projection      one dimension down: (lam, R) in base for some R > 0

Each cone carries two computable invariants: kappa, the largest number of
leading zeros such that (0,..,0,1,..,1) stays strictly inside, and rho,
the supremum of rho >= 0 with (1,..,1,1-rho) still a member.  For the
Garding cone these are n-k and n/k; for pk(k) they are k-1 and k.

Membership predicates are exact for garding/pk; strict-interior questions
are decided by nudging the probe by -eps*(1+|lam|_inf) toward -1, which
converts boundary ambiguity into a deterministic answer.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DomainError, InternalConsistencyError

STRICT_EPS = 1e-9
RHO_TOL = 1e-8
PROJECTION_R_CAP = 1e12
MAX_DEPTH = 4


@dataclass(frozen=True)
class ConeDescriptor:
    kind: str  # "garding" | "pk" | "transformed" | "projection"
    n: int
    k: int = 0
    rho: float = 0.0  # transformed only
    base: "ConeDescriptor | None" = None

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("cone dimension must be >= 2")
        if self.kind in ("garding", "pk"):
            if not 1 <= self.k <= self.n:
                raise DomainError(f"order k={self.k} out of range for n={self.n}")
        elif self.kind == "transformed":
            if self.base is None or self.base.n != self.n:
                raise DomainError("transformed cone needs a base of the same dimension")
            if self.rho == 0.0 or self.rho >= self.n:
                raise DomainError("transform parameter must satisfy rho != 0, rho < n")
        elif self.kind == "projection":
            if self.base is None or self.base.n != self.n + 1:
                raise DomainError("projection cone needs a base one dimension up")
        else:
            raise DomainError(f"unknown cone kind {self.kind!r}")
        if depth(self) > MAX_DEPTH:
            raise DomainError(f"descriptor nesting deeper than {MAX_DEPTH}")


def garding(k, n):
    return ConeDescriptor("garding", n, k=k)


def pk(k, n):
    return ConeDescriptor("pk", n, k=k)


def depth(cone):
    d = 1
    while cone.base is not None:
        d += 1
        cone = cone.base
    return d


def contains_batch(cone, lam):
    """Boolean membership mask for a batch of eigenvalue rows."""
    lam = kernels.as_batch(lam)
    if lam.shape[1] != cone.n:
        raise DomainError(f"tuple dimension {lam.shape[1]} != cone dimension {cone.n}")
    finite = np.isfinite(lam).all(axis=1)
    if not finite.all():
        # non-finite rows are never members; mask them out of the predicates
        out = np.zeros(lam.shape[0], dtype=bool)
        if finite.any():
            out[finite] = contains_batch(cone, lam[finite])
        return out
    if cone.kind == "garding":
        e = kernels.elem_sym(lam, cone.k)
        return np.all(e[:, 1:] > 0.0, axis=1)
    if cone.kind == "pk":
        tails = np.sort(lam, axis=1)[:, : cone.k]
        return tails.sum(axis=1) > 0.0
    if cone.kind == "transformed":
        mu = (lam.sum(axis=1, keepdims=True) - cone.rho * lam) / (cone.n - cone.rho)
        return contains_batch(cone.base, mu)
    # projection: (lam, R, ..., R) in base for some R > 0.  Membership is
    # monotone in R (base + closed positive cone stays in base), so a
    # doubling search capped at R = 1e12 is a sound one-sided decision.
    m = lam.shape[0]
    inside = np.zeros(m, dtype=bool)
    r = 1.0
    aug = np.empty((m, cone.n + 1))
    aug[:, :-1] = lam
    while r <= PROJECTION_R_CAP and not inside.all():
        aug[:, -1] = r
        rest = ~inside
        inside[rest] = contains_batch(cone.base, aug[rest])
        r *= 2.0
    return inside


def contains(cone, lam):
    return bool(contains_batch(cone, lam)[0])


def strictly_inside(cone, lam):
    """Membership after a relative nudge toward -1 in every entry."""
    v = np.asarray(lam, dtype=np.float64)
    eps = STRICT_EPS * (1.0 + np.abs(v).max())
    return contains(cone, v - eps)


def kappa(cone):
    """Largest count of leading zeros keeping (0,..,0,1,..,1) strictly inside."""
    n = cone.n
    for k in range(n - 1, 0, -1):
        v = np.ones(n)
        v[:k] = 0.0
        if strictly_inside(cone, v):
            return k
    return 0


def type_of(cone):
    """2 if (0,..,0,1) is strictly inside, else 1."""
    v = np.zeros(cone.n)
    v[-1] = 1.0
    return 2 if strictly_inside(cone, v) else 1


def rho(cone):
    """sup { rho >= 0 : (1,..,1,1-rho) in cone }, by bisection on [0, n]."""
    n = cone.n

    def member(t):
        v = np.ones(n)
        v[-1] = 1.0 - t
        return contains(cone, v)

    if not member(0.0):
        raise InternalConsistencyError("cone does not contain the all-ones vector")
    if member(float(n)):
        raise InternalConsistencyError("cone membership extends past rho = n")
    lo, hi = 0.0, float(n)
    while hi - lo > RHO_TOL:
        mid = 0.5 * (lo + hi)
        if member(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def transform(cone, rho_param):
    """Preimage cone under lam_i = (sum mu_j - (n - rho) mu_i) / rho.

    The inverse map mu_i = (sum lam_j - rho lam_i) / (n - rho) is what the
    membership predicate evaluates; transform(transform(C, rho), n - rho)
    is the identity.
    """
    r = float(rho_param)
    if r == 0.0 or r >= cone.n:
        raise DomainError("transform parameter must satisfy rho != 0, rho < n")
    return ConeDescriptor("transformed", cone.n, rho=r, base=cone)


def projection(cone):
    """Project out the last coordinate (type-1 cones only)."""
    if type_of(cone) == 2:
        raise DomainError("projection of a type-2 cone is all of R^(n-1)")
    if cone.n - 1 < 2:
        raise DomainError("projection would drop below dimension 2")
    return ConeDescriptor("projection", cone.n - 1, base=cone)


def sampled_containment(inner, outer, count=2000, seed=0x5EED):
    """Fraction of sampled members of ``inner`` that lie in ``outer``.

    A probe, not a certificate: whether e.g. garding(n - k) sits inside a
    cone of kappa = k is open in general, so this reports evidence only.
    """
    if inner.n != outer.n:
        raise DomainError("containment probe needs matching dimensions")
    rng = np.random.Generator(np.random.PCG64(seed))
    members = np.empty((count, inner.n))
    have = 0
    attempts = 0
    while have < count:
        attempts += 1
        if attempts > 400:
            raise InternalConsistencyError("containment probe failed to sample members")
        pts = rng.standard_normal((4 * count, inner.n)) * 2.0
        keep = contains_batch(inner, pts)
        take = min(int(keep.sum()), count - have)
        members[have : have + take] = pts[keep][:take]
        have += take
    return float(contains_batch(outer, members).mean())


def to_json(cone):
    out = {"kind": cone.kind, "n": cone.n}
    if cone.kind in ("garding", "pk"):
        out["k"] = cone.k
    if cone.kind == "transformed":
        out["rho"] = cone.rho
    if cone.base is not None:
        out["base"] = to_json(cone.base)
    return out


def from_json(obj):
    if not isinstance(obj, dict):
        raise DomainError("cone spec must be a JSON object")
    allowed = {"kind", "n", "k", "rho", "base"}
    unknown = set(obj) - allowed
    if unknown:
        raise DomainError(f"unknown cone spec keys: {sorted(unknown)}")
    kind = obj.get("kind")
    n = obj.get("n")
    if not isinstance(n, int):
        raise DomainError("cone spec needs an integer dimension 'n'")
    if kind in ("garding", "pk"):
        k = obj.get("k")
        if not isinstance(k, int):
            raise DomainError(f"{kind} cone needs an integer order 'k'")
        return ConeDescriptor(kind, n, k=k)
    if kind == "transformed":
        if "base" not in obj or "rho" not in obj:
            raise DomainError("transformed cone needs 'base' and 'rho'")
        return transform(from_json(obj["base"]), float(obj["rho"]))
    if kind == "projection":
        if "base" not in obj:
            raise DomainError("projection cone needs 'base'")
        return projection(from_json(obj["base"]))
    raise DomainError(f"unknown cone kind {kind!r}")
