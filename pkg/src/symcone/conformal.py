"""Conformal curvature eigenvalues of radial metrics on the flat ball.

For g_u = e^{2u} |dx|^2 with radial u(r), the augmented Hessian tensor
W[u] = Hess u + (1/2)|grad u|^2 g - du (x) du + c g is diagonal in the
radial frame, so its eigenvalues against g_u come in closed form:

    radial      e^{-2u} (u'' - u'^2 / 2 + c)
    tangential  e^{-2u} (u'/r + u'^2 / 2 + c)   (n-1 copies)

with the tangential entry replaced by its limit u''(0) at the center.
With c = 0 these are the eigenvalues of -g_u^{-1} A_{g_u} (minus the
Schouten tensor); the hyperbolic profile u = log(2/(1-r^2)) gives the
constant tuple (1/2, ..., 1/2) at every radius, which is the exact oracle
used by the radial solver tests.

The modified tensor replaces the scalar-curvature coefficient by tau and
carries a sign alpha; its eigenvalues relate to the plain ones through a
linear map, which check2_identity verifies numerically:

    sum_j nu_j - rho nu_i  =  (rho / alpha) m_i,   rho = (n-2)/(tau-1).
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, RangeError

TAU_GUARD = 1e-3


@dataclass(frozen=True)
class ConformalParams:
    tau: float
    alpha: int  # +1 or -1
    n: int
    domain_rho: float | None = None  # rho invariant of the operator's asymptotic cone

    def __post_init__(self):
        if self.alpha not in (-1, 1):
            raise DomainError("alpha must be +1 or -1")
        if self.n < 3:
            raise DomainError("modified Schouten tensors need n >= 3")
        if abs(self.tau - 1.0) < TAU_GUARD:
            raise DomainError("tau too close to 1: rho = (n-2)/(tau-1) blows up")

    @property
    def rho(self):
        return (self.n - 2) / (self.tau - 1.0)

    @property
    def gamma(self):
        return (self.tau - 2.0) * (self.n - 2) / (2.0 * (self.tau - 1.0))

    @property
    def sharp(self):
        """Whether (tau, alpha) is in the uniformly elliptic regime.

        alpha = -1 branch needs tau < 1; alpha = +1 needs
        tau > 1 + (n-2)/domain_rho, which requires domain_rho to be set.
        """
        if self.alpha == -1:
            return self.tau < 1.0
        if self.domain_rho is None:
            return None
        return self.tau > 1.0 + (self.n - 2) / self.domain_rho


@dataclass(frozen=True)
class RadialJet:
    """Second-order data (u, u', u'') of a radial profile at radius r."""

    r: float
    u: float
    up: float
    upp: float

    def __post_init__(self):
        vals = (self.r, self.u, self.up, self.upp)
        if not all(math.isfinite(v) for v in vals) or self.r < 0:
            raise DomainError("jet needs finite entries and r >= 0")
        if self.r == 0.0 and self.up != 0.0:
            raise DomainError("radial regularity requires u'(0) = 0")


def hyperbolic_jet(r):
    """Jet of u = log(2 / (1 - r^2)), the exact complete solution."""
    s = 1.0 - r * r
    return RadialJet(r=r, u=math.log(2.0 / s), up=2.0 * r / s, upp=(2.0 + 2.0 * r * r) / s**2)


def schouten_eigs(j, n, chi_scale=0.0):
    """Eigenvalues of g_u^{-1} W[u] for radial u on the flat ball."""
    if n < 2:
        raise DomainError("need n >= 2")
    scale = math.exp(-2.0 * j.u)
    rad = scale * (j.upp - 0.5 * j.up**2 + chi_scale)
    up_over_r = j.upp if j.r == 0.0 else j.up / j.r
    tan = scale * (up_over_r + 0.5 * j.up**2 + chi_scale)
    out = np.full(n, tan)
    out[0] = rad
    return out


def modified_schouten_eigs(j, p):
    """Eigenvalues of g_u^{-1} A^{tau,alpha}_{g_u} for radial u, flat background."""
    n, a, tau = p.n, p.alpha, p.tau
    up_over_r = j.upp if j.r == 0.0 else j.up / j.r
    lap = j.upp + (n - 1) * up_over_r
    common = a * (tau - 1.0) / (n - 2) * lap + a * (tau - 2.0) / 2.0 * j.up**2
    scale = math.exp(-2.0 * j.u)
    rad = scale * (common - a * j.upp + a * j.up**2)
    tan = scale * (common - a * up_over_r)
    out = np.full(n, tan)
    out[0] = rad
    return out


def check2_identity(j, p):
    """Max-norm gap between the transformed Schouten tuple and the modified one.

    Both sides are closed-form, so the return value is pure rounding
    error (<= 1e-12 for well-scaled jets).
    """
    nu = schouten_eigs(j, p.n, 0.0)
    mod = modified_schouten_eigs(j, p)
    lhs = nu.sum() - p.rho * nu
    rhs = (p.rho / p.alpha) * mod
    return float(np.abs(lhs - rhs).max())


def einstein_eigs(nu):
    """Einstein-tensor eigenvalues (n-2)(sum_j nu_j - nu_i) from nu = eigs(-g^{-1}A_g).

    In dimension 3 the entry for a direction equals minus the sectional
    curvature of the orthogonal plane.
    """
    nu = np.asarray(nu, dtype=np.float64)
    n = nu.size
    if n < 3:
        raise DomainError("Einstein eigenvalue relation needs n >= 3")
    return (n - 2) * (nu.sum() - nu)


# -- barrier profiles ---------------------------------------------------------


def barrier_lower(sig, k, delta, phi):
    """log(delta^2 / (delta^2 + k sig)) + phi; boundary value phi at sig = 0."""
    if k <= 0 or delta <= 0:
        raise DomainError("barrier needs k > 0 and delta > 0")
    if sig < 0:
        raise DomainError("boundary distance must be >= 0")
    return math.log(delta**2 / (delta**2 + k * sig)) + phi


def barrier_upper(sig, delta, phi, n):
    """log(1 + sig/delta^2) / (2(n-2)) + phi, increasing in sig."""
    if n < 3:
        raise DomainError("upper barrier needs n >= 3")
    if delta <= 0:
        raise DomainError("delta must be > 0")
    return math.log(1.0 + sig / delta**2) / (2.0 * (n - 2)) + phi


def barrier_asymptotic(sig, k, eps, delta, op, psi_bdry):
    """Boundary-rate barrier log(k/(k sig + 1)) + log((1-eps)^2/(2 C)) / 2
    + 1/(sig + delta) - 1/delta, with f(C * ones) = psi_bdry + eps."""
    if not 0.0 < eps < 1.0:
        raise DomainError("eps must lie in (0, 1)")
    c = c_tilde(op, psi_bdry + eps)
    return (
        math.log(k / (k * sig + 1.0))
        + 0.5 * math.log((1.0 - eps) ** 2 / (2.0 * c))
        + 1.0 / (sig + delta)
        - 1.0 / delta
    )


def c_tilde(op, sigma):
    """The unique c > 0 with f(c * ones) = sigma, by bisection.

    Uniqueness holds because f is strictly increasing along rays in the
    interior of the asymptotic cone.
    """
    ones = np.ones(op.n)

    def f(c):
        return float(op.eval_batch(c * ones)[0])

    lo, hi = 1.0, 1.0
    for _ in range(200):
        if f(hi) >= sigma:
            break
        hi *= 2.0
    else:
        raise RangeError(f"level {sigma} not attainable on the diagonal ray")
    for _ in range(200):
        if f(lo) <= sigma:
            break
        lo *= 0.5
    else:
        raise RangeError(f"level {sigma} not attainable on the diagonal ray")
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if f(mid) < sigma:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
