"""Damped Newton solver for f(eigs(g_u^{-1} W[u])) = psi, radial on the ball.

The unknown is the profile u(r) of a conformal factor e^{2u} on the ball
of radius r_max (default 1).  The discretization is the standard
second-order one: central differences at interior nodes, a symmetric
ghost u_{-1} = u_1 enforcing u'(0) = 0 at the center, and an exact
Dirichlet row u_N = phi at the boundary, which keeps the Jacobian
tridiagonal.  Nodal eigenvalue tuples come from the closed radial form in
symcone.conformal, so each Newton step costs one batched operator
evaluation plus one tridiagonal solve.

Infinite boundary data is reached by exhaustion: a schedule of finite
problems with boundary values log k, warm-started in k, monotone by the
comparison principle.  The boundary rate is extracted by fitting
u + log(1 - r) linearly in (1 - r) near the boundary; for a datum with
f(D * ones) on the boundary the continuum value of the fit intercept is
log(1 / (2 D)) / 2, with the hyperbolic profile log(2 / (1 - r^2)) as the
exact reference for D = 1/2.
"""

import csv
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import solve_banded

from . import cones, symops
from .conformal import c_tilde
from .errors import (
    DomainError,
    EstimateUnavailableError,
    InvariantBreachError,
    NonconvergenceError,
    RangeError,
    StallError,
)

DEFAULT_GRID = 2048
DEFAULT_TOL = 1e-9
DEFAULT_SCHEDULE = tuple(float(2**j) for j in range(1, 13))
MAX_HALVINGS = 30
MAX_STALLS = 30
FIT_WINDOW = (0.8, 0.97)
STRICT_EPS = 1e-9


@dataclass(frozen=True)
class FiniteValue:
    phi: float


@dataclass(frozen=True)
class Exhaustion:
    k_schedule: tuple = DEFAULT_SCHEDULE

    def __post_init__(self):
        ks = tuple(float(k) for k in self.k_schedule)
        if len(ks) == 0 or any(b <= a for a, b in zip(ks, ks[1:])):
            raise DomainError("exhaustion schedule must be strictly increasing")
        if ks[0] <= 0:
            raise DomainError("exhaustion schedule must be positive")
        object.__setattr__(self, "k_schedule", ks)


@dataclass(frozen=True)
class PsiProfile:
    """Constant or piecewise-linear-in-r right-hand side."""

    value: float | None = None
    r_knots: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        if self.value is None:
            if len(self.r_knots) != len(self.values) or len(self.r_knots) < 2:
                raise DomainError("tabulated psi needs matching r/value lists")
            if any(b <= a for a, b in zip(self.r_knots, self.r_knots[1:])):
                raise DomainError("psi table knots must be strictly increasing")

    def __call__(self, r):
        r = np.asarray(r, dtype=np.float64)
        if self.value is not None:
            return np.full_like(r, self.value)
        return np.interp(r, self.r_knots, self.values)


def constant_psi(value):
    return PsiProfile(value=float(value))


@dataclass(frozen=True)
class RadialProblem:
    n: int
    op: symops.OperatorSpec
    psi: PsiProfile
    chi_scale: float = 0.0
    boundary: object = None  # FiniteValue | Exhaustion
    grid_n: int = DEFAULT_GRID
    tol: float = DEFAULT_TOL
    max_newton: int = 60
    r_max: float = 1.0

    def __post_init__(self):
        if self.n < 3:
            raise DomainError("radial problems need n >= 3")
        if self.op.n != self.n:
            raise DomainError("operator dimension must match the problem dimension")
        if self.grid_n < 64:
            raise DomainError("grid must have at least 64 cells")
        if not 0.0 < self.tol <= 1e-4:
            raise DomainError("tolerance must lie in (0, 1e-4]")
        if not 0.0 < self.r_max <= 1.0:
            raise DomainError("r_max must lie in (0, 1]")
        if not isinstance(self.boundary, (FiniteValue, Exhaustion)):
            raise DomainError("boundary must be FiniteValue or Exhaustion")

    def grid(self):
        return np.linspace(0.0, self.r_max, self.grid_n + 1)


def validate_problem(p):
    """Reject psi outside the band attainable on the diagonal ray."""
    psi_vals = p.psi(p.grid())
    try:
        c_tilde(p.op, float(psi_vals.min()))
        c_tilde(p.op, float(psi_vals.max()))
    except RangeError as exc:
        raise RangeError(f"psi violates the nondegeneracy band: {exc}") from exc


@dataclass(frozen=True)
class RadialSolution:
    r: np.ndarray
    u: np.ndarray
    residual_inf: float
    admissible: np.ndarray
    lam_rad: np.ndarray
    lam_tan: np.ndarray
    B1: float
    B2: float
    newton_iters: int
    converged: bool
    boundary_value: float
    problem: RadialProblem
    asymptotic_offset: float | None = None


# -- discretization -----------------------------------------------------------


def nodal_eigs(p, u):
    """(N+1, n) eigenvalue rows of g_u^{-1} W[u] on the grid.

    Interior nodes use central differences; the center uses the ghost
    u_{-1} = u_1; the boundary node uses one-sided second-order stencils
    (reporting and admissibility only, never the Newton rows).
    """
    u = np.asarray(u, dtype=np.float64)
    N = p.grid_n
    h = p.r_max / N
    r = p.grid()
    c = p.chi_scale
    rows = np.empty((N + 1, p.n))

    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        scale = np.exp(-2.0 * u)
        up = np.empty(N + 1)
        upp = np.empty(N + 1)
        up[1:-1] = (u[2:] - u[:-2]) / (2.0 * h)
        upp[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / h**2
        up[0] = 0.0
        upp[0] = 2.0 * (u[1] - u[0]) / h**2
        up[-1] = (3.0 * u[-1] - 4.0 * u[-2] + u[-3]) / (2.0 * h)
        upp[-1] = (2.0 * u[-1] - 5.0 * u[-2] + 4.0 * u[-3] - u[-4]) / h**2

        rad = scale * (upp - 0.5 * up**2 + c)
        tan = scale * (up / r + 0.5 * up**2 + c)
        tan[0] = scale[0] * (upp[0] + c)  # tangential limit u''(0) at the center
    rows[:, 0] = rad
    rows[:, 1:] = tan[:, None]
    return rows, up


def residual(p, u, boundary_value=None):
    """Discrete residual, nodal eigenvalue rows, and per-node admissibility.

    Interior rows: f(eigs) - psi(r); boundary row: u_N - phi (exact
    Dirichlet).  Infeasible nodes are flagged but still produce a value.
    """
    if boundary_value is None:
        if not isinstance(p.boundary, FiniteValue):
            raise DomainError("residual needs a boundary value for exhaustion problems")
        boundary_value = p.boundary.phi
    rows, _ = nodal_eigs(p, u)
    feasible = p.op.domain_mask(rows)
    F = p.op.eval_batch(rows) - p.psi(p.grid())
    F[-1] = u[-1] - boundary_value
    return F, rows, feasible


def _jacobian_bands(p, u, rows):
    """Tridiagonal Jacobian in solve_banded layout (closed-form entries)."""
    N = p.grid_n
    h = p.r_max / N
    r = p.grid()
    scale = np.exp(-2.0 * u)
    g = p.op.grad_batch(rows)
    g_rad = g[:, 0]
    g_tan = g[:, 1:].sum(axis=1)
    lam_rad = rows[:, 0]
    lam_tan = rows[:, 1]

    up = np.zeros(N + 1)
    up[1:-1] = (u[2:] - u[:-2]) / (2.0 * h)

    ab = np.zeros((3, N + 1))
    i = np.arange(1, N)
    s = scale[i]
    d_rad_plus = s * (1.0 / h**2 - up[i] / (2.0 * h))
    d_rad_minus = s * (1.0 / h**2 + up[i] / (2.0 * h))
    d_tan_side = s * (1.0 / (2.0 * h * r[i]) + up[i] / (2.0 * h))
    ab[0, i + 1] = g_rad[i] * d_rad_plus + g_tan[i] * d_tan_side
    ab[2, i - 1] = g_rad[i] * d_rad_minus - g_tan[i] * d_tan_side
    ab[1, i] = g_rad[i] * (-2.0 * s / h**2 - 2.0 * lam_rad[i]) + g_tan[i] * (
        -2.0 * lam_tan[i]
    )

    g_all = g_rad[0] + g_tan[0]
    ab[0, 1] = g_all * scale[0] * 2.0 / h**2
    ab[1, 0] = g_all * (-scale[0] * 2.0 / h**2 - 2.0 * lam_rad[0])
    ab[1, N] = 1.0
    ab[2, N - 1] = 0.0
    return ab


def _norm(F):
    a = np.abs(F)
    return float(np.where(np.isfinite(a), a, 1e50).max())


def _presmooth(p, u, boundary_value):
    """Neighbor averaging until >= 90% of nodes are admissible."""
    u = u.copy()
    for _ in range(50):
        _, _, feas = residual(p, u, boundary_value)
        if feas.mean() >= 0.9:
            return u
        u[1:-1] = 0.25 * u[:-2] + 0.5 * u[1:-1] + 0.25 * u[2:]
        u[-1] = boundary_value
    return u


def newton_solve(p, init, boundary_value=None):
    """Damped Newton with monotone residual decrease and admissibility.

    Backtracking halves the step (at most 30 times) until the max residual
    drops and every node stays admissible; 30 consecutive full backtracks
    raise StallError, an exhausted iteration budget NonconvergenceError,
    both carrying the last iterate.
    """
    validate_problem(p)
    if boundary_value is None:
        boundary_value = p.boundary.phi
    u = np.array(init, dtype=np.float64)
    if u.shape != (p.grid_n + 1,):
        raise DomainError("initial guess does not match the grid")
    F, rows, feas = residual(p, u, boundary_value)
    if feas.mean() < 0.9:
        u = _presmooth(p, u, boundary_value)
        F, rows, feas = residual(p, u, boundary_value)

    res = _norm(F)
    stalls = 0
    iters = 0
    for iters in range(1, p.max_newton + 1):
        if res <= p.tol and feas.all():
            return _finish(p, u, init, boundary_value, res, iters - 1, True)
        ab = _jacobian_bands(p, u, rows)
        try:
            delta = solve_banded((1, 1), ab, -F)
        except np.linalg.LinAlgError as exc:
            raise NonconvergenceError(
                f"singular Jacobian at iteration {iters}",
                _finish(p, u, init, boundary_value, res, iters, False),
            ) from exc
        step = 1.0
        accepted = False
        feas_count = int(feas.sum())
        last_trial = None
        for _ in range(MAX_HALVINGS + 1):
            u_try = u + step * delta
            F_try, rows_try, feas_try = residual(p, u_try, boundary_value)
            res_try = _norm(F_try)
            ok_feas = feas_try.all() if feas.all() else int(feas_try.sum()) >= feas_count
            last_trial = (u_try, F_try, rows_try, feas_try, res_try, ok_feas)
            if ok_feas and res_try < res:
                accepted = True
                break
            step *= 0.5
        if accepted:
            stalls = 0
            u, F, rows, feas, res, _ = last_trial
        else:
            stalls += 1
            if last_trial is not None and last_trial[5]:
                u, F, rows, feas, res, _ = last_trial
            if stalls >= MAX_STALLS:
                raise StallError(
                    f"{stalls} consecutive full backtracks",
                    _finish(p, u, init, boundary_value, res, iters, False),
                )
    if res <= p.tol and feas.all():
        return _finish(p, u, init, boundary_value, res, iters, True)
    raise NonconvergenceError(
        f"residual {res:.3e} > tol after {p.max_newton} Newton steps",
        _finish(p, u, init, boundary_value, res, iters, False),
    )


def _finish(p, u, init, boundary_value, res, iters, converged):
    F, rows, feas = residual(p, u, boundary_value)
    b1 = b2 = math.nan
    try:
        b1, b2, _ = c0_bounds_raw(p, u, np.asarray(init, dtype=np.float64))
    except (DomainError, RangeError):
        pass
    return RadialSolution(
        r=p.grid(),
        u=u.copy(),
        residual_inf=_norm(F),
        admissible=feas,
        lam_rad=rows[:, 0].copy(),
        lam_tan=rows[:, 1].copy(),
        B1=b1,
        B2=b2,
        newton_iters=iters,
        converged=converged,
        boundary_value=float(boundary_value),
        problem=p,
    )


def exhaustion_init(p, k):
    """Hyperbolic-shaped start log k - log(1 + k (1 - r^2)/2).

    Matches the boundary datum log k, is admissible for every family (its
    nodal eigenvalue tuple is a positive multiple of the all-ones vector
    in the continuum), and converges to the hyperbolic profile as k grows.
    """
    r = p.grid()
    return math.log(k) - np.log(1.0 + k * (1.0 - r**2) / 2.0)


def exhaustion_solve(p, monotone_slack=None):
    """Finite solves with boundary log k along the schedule, warm-started.

    Pointwise monotonicity u^(k_{j+1}) >= u^(k_j) - 10 tol is asserted at
    every node (comparison principle); a breach signals a solver bug.  The
    limit is declared when consecutive solutions differ by < tol on
    r <= 0.95 r_max.  The last solution carries the boundary-rate offset
    when the rate hypothesis (1,..,1,-1) in the closed asymptotic cone
    holds; otherwise the estimate is suppressed.
    """
    if not isinstance(p.boundary, Exhaustion):
        raise DomainError("exhaustion_solve needs an Exhaustion boundary")
    slack = 10.0 * p.tol if monotone_slack is None else monotone_slack
    core = p.grid() <= 0.95 * p.r_max
    sols = []
    prev = None
    for k in p.boundary.k_schedule:
        phi = math.log(k)
        init = exhaustion_init(p, k)
        if prev is not None:
            init = np.maximum(prev.u, init)
        try:
            sol = newton_solve(p, init, boundary_value=phi)
        except NonconvergenceError:
            sol = newton_solve(p, exhaustion_init(p, k), boundary_value=phi)
        if prev is not None:
            drop = float((prev.u - sol.u).max())
            if drop > slack:
                raise InvariantBreachError(
                    f"exhaustion iterate decreased by {drop:.3e} at k={k}"
                )
        sols.append(sol)
        limit_reached = prev is not None and float(
            np.abs(sol.u[core] - prev.u[core]).max()
        ) < p.tol
        prev = sol
        if limit_reached:
            break
    if _rate_hypothesis(p.op):
        try:
            d_o = c_tilde(p.op, float(p.psi(np.array([p.r_max]))[0]))
            off = asymptotic_estimate(sols[-1], d_o)
            sols[-1] = replace(sols[-1], asymptotic_offset=off)
        except (RangeError, EstimateUnavailableError):
            pass
    return sols


def _rate_hypothesis(op):
    """(1,..,1,-1) in the closed asymptotic cone (nudged membership)."""
    v = np.ones(op.n)
    v[-1] = -1.0
    return cones.contains(op.asymptotic_cone(), v + STRICT_EPS * 2.0)


def asymptotic_estimate(sol, d_o):
    """Boundary-rate mismatch of u against the datum f(d_o * ones).

    Extrapolates y = u + log(1-r) linearly in s = 1-r through the two edge
    nodes of the window r in [0.8, 0.97] (the straight line through the
    window ends evaluated at s = 0 keeps the curvature bias of y below
    1e-3 for the exact hyperbolic profile), then subtracts the predicted
    intercept log(1/(2 d_o)) / 2.
    """
    r = sol.r
    window = (r >= FIT_WINDOW[0]) & (r <= FIT_WINDOW[1])
    if not window.any():
        raise EstimateUnavailableError("fit window contains no grid nodes")
    if not sol.admissible[window].all():
        raise EstimateUnavailableError("fit window contains inadmissible nodes")
    s = 1.0 - r[window]
    y = sol.u[window] + np.log(s)
    i_near, i_far = int(s.argmin()), int(s.argmax())
    s1, y1 = s[i_near], y[i_near]
    s2, y2 = s[i_far], y[i_far]
    c = float(y1 - s1 * (y2 - y1) / (s2 - s1))
    return c - 0.5 * math.log(1.0 / (2.0 * d_o))


# -- comparison and C0 bounds ---------------------------------------------------


def _strictly_admissible(op, rows):
    eps = STRICT_EPS * (1.0 + np.abs(rows).max(axis=1, keepdims=True))
    return cones.contains_batch(op.asymptotic_cone(), rows - eps)


def c0_bounds_raw(p, u, background):
    """B1, B2 with f(e^{-2 B1} eigs(background)) >= psi >= f(e^{-2 B2} eigs)
    at every interior node, plus the sandwich check for u against the
    background.  The Dirichlet node is excluded from the shift bisections
    (its one-sided eigenvalue estimate is not an equation row); boundary
    ordering enters through the sandwich endpoints instead.
    """
    rows, _ = nodal_eigs(p, background)
    rows = rows[:-1]
    if not _strictly_admissible(p.op, rows).all():
        raise DomainError("background is not strictly admissible")
    psi_vals = p.psi(p.grid())[:-1]

    def worst_min(c):
        return float((p.op.eval_batch(math.exp(-2.0 * c) * rows) - psi_vals).min())

    def worst_max(c):
        return float((p.op.eval_batch(math.exp(-2.0 * c) * rows) - psi_vals).max())

    b1 = _bisect_decreasing(worst_min)
    b2 = _bisect_decreasing(worst_max)
    diff = u - background
    lo = min(b1, diff[-1])
    hi = max(b2, diff[-1])
    holds = bool(np.all(diff >= lo - 10.0 * p.tol) and np.all(diff <= hi + 10.0 * p.tol))
    return b1, b2, holds


def _bisect_decreasing(fn, tol=1e-10):
    """Largest c with fn(c) >= 0 for a decreasing fn, by expanding bisection."""
    lo, hi = -1.0, 1.0
    for _ in range(200):
        if fn(lo) >= 0:
            break
        lo *= 2.0
    else:
        raise RangeError("no admissible shift: background too degenerate")
    for _ in range(200):
        if fn(hi) < 0:
            break
        hi *= 2.0
    else:
        raise RangeError("shift bracket failed above")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if fn(mid) >= 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def c0_bounds(p, sol, background):
    """(B1, B2, holds) for a solved profile against a strictly admissible
    background grid."""
    return c0_bounds_raw(p, sol.u, np.asarray(background, dtype=np.float64))


def comparison_check(sol_lo_psi, sol_hi_psi):
    """Larger curvature datum forces the pointwise smaller profile.

    Requires the same operator, grid and boundary value, psi_hi >= psi_lo
    pointwise, and at least one solution strictly admissible in the
    asymptotic cone; then checks u_hi <= u_lo + 10 tol at every node.
    """
    plo, phi_ = sol_lo_psi.problem, sol_hi_psi.problem
    if plo.op != phi_.op:
        raise DomainError("mixed-operator comparison rejected")
    if plo.grid_n != phi_.grid_n or plo.r_max != phi_.r_max:
        raise DomainError("comparison needs matching grids")
    if abs(sol_lo_psi.boundary_value - sol_hi_psi.boundary_value) > 1e-12:
        raise DomainError("comparison needs matching boundary data")
    r = plo.grid()
    lo_vals = plo.psi(r)
    hi_vals = phi_.psi(r)
    if not np.all(hi_vals >= lo_vals - 1e-15):
        raise DomainError("psi_hi must dominate psi_lo pointwise")
    rows_lo, _ = nodal_eigs(plo, sol_lo_psi.u)
    rows_hi, _ = nodal_eigs(phi_, sol_hi_psi.u)
    strict = _strictly_admissible(plo.op, rows_lo).all() or _strictly_admissible(
        phi_.op, rows_hi
    ).all()
    if not strict:
        raise DomainError("comparison needs one strictly admissible solution")
    tol = 10.0 * max(plo.tol, phi_.tol)
    return bool(np.all(sol_hi_psi.u <= sol_lo_psi.u + tol))


# -- serialization ---------------------------------------------------------------


def problem_from_json(obj):
    if not isinstance(obj, dict):
        raise DomainError("problem spec must be a JSON object")
    allowed = {
        "n",
        "op",
        "psi",
        "chi_scale",
        "boundary",
        "grid_n",
        "tol",
        "max_newton",
        "r_max",
    }
    unknown = set(obj) - allowed
    if unknown:
        raise DomainError(f"unknown problem keys: {sorted(unknown)}")
    for key in ("n", "op", "psi", "boundary"):
        if key not in obj:
            raise DomainError(f"problem spec missing {key!r}")
    op = symops.from_json(obj["op"])
    psi_obj = obj["psi"]
    if isinstance(psi_obj, (int, float)):
        psi = constant_psi(psi_obj)
    elif isinstance(psi_obj, dict):
        if set(psi_obj) != {"r", "values"}:
            raise DomainError("tabulated psi needs exactly keys 'r' and 'values'")
        psi = PsiProfile(r_knots=tuple(psi_obj["r"]), values=tuple(psi_obj["values"]))
    else:
        raise DomainError("psi must be a number or an {r, values} table")
    bnd = obj["boundary"]
    if not isinstance(bnd, dict) or "mode" not in bnd:
        raise DomainError("boundary needs a 'mode'")
    if bnd["mode"] == "finite":
        if set(bnd) != {"mode", "phi"}:
            raise DomainError("finite boundary needs exactly 'mode' and 'phi'")
        boundary = FiniteValue(float(bnd["phi"]))
    elif bnd["mode"] == "exhaustion":
        extra = set(bnd) - {"mode", "k_schedule"}
        if extra:
            raise DomainError(f"unknown boundary keys: {sorted(extra)}")
        boundary = Exhaustion(tuple(bnd.get("k_schedule", DEFAULT_SCHEDULE)))
    else:
        raise DomainError(f"unknown boundary mode {bnd['mode']!r}")
    return RadialProblem(
        n=int(obj["n"]),
        op=op,
        psi=psi,
        chi_scale=float(obj.get("chi_scale", 0.0)),
        boundary=boundary,
        grid_n=int(obj.get("grid_n", DEFAULT_GRID)),
        tol=float(obj.get("tol", DEFAULT_TOL)),
        max_newton=int(obj.get("max_newton", 60)),
        r_max=float(obj.get("r_max", 1.0)),
    )


def write_profile_csv(sol, path):
    """Profile columns r,u,u_prime,lambda_rad,lambda_tan,residual at 17 digits."""
    p = sol.problem
    F, _, _ = residual(p, sol.u, sol.boundary_value)
    _, up = nodal_eigs(p, sol.u)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "u", "u_prime", "lambda_rad", "lambda_tan", "residual"])
        for i in range(len(sol.r)):
            writer.writerow(
                [
                    format(v, ".17g")
                    for v in (sol.r[i], sol.u[i], up[i], sol.lam_rad[i], sol.lam_tan[i], F[i])
                ]
            )


def summary_dict(sol):
    off = sol.asymptotic_offset
    return {
        "residual_inf": sol.residual_inf,
        "B1": None if math.isnan(sol.B1) else sol.B1,
        "B2": None if math.isnan(sol.B2) else sol.B2,
        "asymptotic_offset": off,
        "newton_iters": sol.newton_iters,
        "converged": sol.converged,
    }
