"""Built-in verification suite.

Each check is a deterministic pass/fail computation parameterized by a
scale: the default scale trades sample counts and grid resolution for a
sub-five-minute wall time, the full scale runs the acceptance settings.
Check results carry only deterministic detail values (no timings), so two
runs with the same seed and scale produce byte-identical reports.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from . import cones, conformal, ellipticity, radial, symops


@dataclass(frozen=True)
class CheckResult:
    check_id: str
    passed: bool
    detail: dict

    def to_json(self):
        return {"check": self.check_id, "passed": self.passed, "detail": self.detail}


def _hyp(r):
    return np.log(2.0 / (1.0 - r**2))


def _smooth_start(r, seed, amplitude=0.1):
    """Grid-resolved random polynomial perturbation vanishing at the boundary."""
    rng = np.random.default_rng(seed)
    c = rng.uniform(-1.0, 1.0, 3)
    v = c[0] + c[1] * r**2 + c[2] * r**4
    return amplitude * (v - v[-1])


def check_cone_invariants(full, seed, samples):
    worst_rho = 0.0
    ok = True
    for n in range(2, 11):
        for k in range(1, n + 1):
            g = cones.garding(k, n)
            worst_rho = max(worst_rho, abs(cones.rho(g) - n / k))
            ok &= cones.kappa(g) == n - k
            p = cones.pk(k, n)
            worst_rho = max(worst_rho, abs(cones.rho(p) - k))
            ok &= cones.kappa(p) == k - 1
    ok &= worst_rho <= 1e-8
    return CheckResult("cone-invariants", bool(ok), {"max_rho_error": worst_rho})


def check_transform_formulas(full, seed, samples):
    worst = 0.0
    ok = True
    for n in (3, 4, 5):
        base = cones.garding(n, n)
        rho_g = float(n) / n  # = 1 for the positive cone
        for rho in (-2.0, -1.0, -0.5):
            predicted = rho_g + rho_g * (n - rho_g) / (rho_g - rho)
            measured = cones.rho(cones.transform(base, rho))
            worst = max(worst, abs(measured - predicted))
            ok &= cones.type_of(cones.transform(base, rho)) == 2
        for rho in (0.5, 1.0):
            measured = cones.rho(cones.transform(base, rho))
            worst = max(worst, abs(measured - (n - rho)))
    ok &= worst <= 1e-6

    probes = 1000 if full else 300
    mismatches = 0
    for n in (3, 4, 5):
        base = cones.garding(n, n)
        rng = np.random.default_rng(seed + n)
        pts = rng.standard_normal((probes, n))
        for rho in (0.5, 1.0, 1.5):
            double = cones.transform(cones.transform(base, rho), n - rho)
            mismatches += int(
                (cones.contains_batch(base, pts) != cones.contains_batch(double, pts)).sum()
            )
    ok &= mismatches == 0
    return CheckResult(
        "transform-formulas",
        bool(ok),
        {"max_formula_error": worst, "involution_mismatches": mismatches},
    )


def check_pue_index(full, seed, samples):
    count = samples or (10_000 if full else 2_000)
    restarts = 50 if full else 12
    sigma = 1.0
    min_stable = math.inf
    max_collapsed = -math.inf
    ok = True
    for n in (3, 4, 5, 6):
        for k in range(1, n + 1):
            op = symops.sigma_root(k, n)
            s = ellipticity.LevelSetSampler(op, sigma, seed, count)
            stable = ellipticity.pue_report(op, sigma, n - k + 1, s, restarts)
            min_stable = min(min_stable, stable.theta)
            ok &= stable.theta > 1e-4 and stable.violations == 0
            if k >= 2:
                sharp = ellipticity.pue_report(op, sigma, n - k + 2, s, restarts)
                max_collapsed = max(max_collapsed, sharp.theta)
                ok &= sharp.theta < 1e-2
    return CheckResult(
        "pue-index",
        bool(ok),
        {"min_stable_theta": min_stable, "max_collapsed_theta": max_collapsed},
    )


def _margin_probes(rng, cone, count, margin, inside):
    """Seeded normal probes inside (or outside) a cone by a relative margin."""
    out = []
    while len(out) < count:
        pts = rng.standard_normal((4 * count, cone.n))
        eps = margin * (1.0 + np.abs(pts).max(axis=1, keepdims=True))
        if inside:
            keep = cones.contains_batch(cone, pts - eps)
        else:
            keep = ~cones.contains_batch(cone, pts + eps)
        out.extend(pts[keep][: count - len(out)])
    return np.array(out)


def check_max_test_cone(full, seed, samples):
    count = samples or (10_000 if full else 2_000)
    probes = 1000 if full else 150
    sigma = 1.0
    detail = {}
    ok = True
    for k, n in ((2, 3), (2, 4), (3, 3), (3, 4)):
        op = symops.guan_zhang(k, n, (1.0,) * (k - 1), (1.0,) * (k - 1))
        target = cones.garding(k, n)
        s = ellipticity.LevelSetSampler(op, sigma, seed, count)
        pts = ellipticity._points_with_pool(op, sigma, seed, count)
        g = op.grad_batch(pts)
        total = g.sum(axis=1)
        rng = np.random.default_rng(seed + 17 * k + n)
        mu_in = _margin_probes(rng, target, probes, 1e-2, inside=True)
        mu_out = _margin_probes(rng, target, probes, 1e-2, inside=False)
        ratios_in = (g @ mu_in.T) / total[:, None]
        ratios_out = (g @ mu_out.T) / total[:, None]
        inside_pass = int((ratios_in.min(axis=0) >= -ellipticity.MARGIN_TOL).sum())
        out_min = ratios_out.min(axis=0)
        unwitnessed = np.where(out_min >= -ellipticity.MARGIN_TOL)[0]
        witnessed = probes - len(unwitnessed)
        for idx in unwitnessed:
            ratio, _ = ellipticity.test_cone_margin(op, sigma, mu_out[idx], s, 8)
            if ratio < -ellipticity.MARGIN_TOL:
                witnessed += 1
        ok &= inside_pass == probes and witnessed == probes
        detail[f"gz_k{k}_n{n}"] = {
            "inside_pass": inside_pass,
            "outside_witnessed": witnessed,
            "probes": probes,
        }
    return CheckResult("max-test-cone", bool(ok), detail)


def _builtin_ops():
    return [
        symops.linear(3),
        symops.sigma_root(2, 4),
        symops.sigma_root(3, 5),
        symops.sigma_quotient(4, 4),
        symops.guan_zhang(2, 3, (1.0,), (1.0,)),
        symops.guan_zhang(3, 4, (1.0, 1.0), (0.5, 0.5)),
    ]


def check_laplace_bound(full, seed, samples):
    count = samples or (10_000 if full else 2_000)
    ok = True
    detail = {}
    for op in _builtin_ops():
        s = ellipticity.LevelSetSampler(op, 1.0, seed, count)
        passed = ellipticity.laplace_bound_check(op, s, refine_restarts=10)
        detail[f"{op.family}_k{op.k}_n{op.n}"] = passed
        ok &= passed
    return CheckResult("laplace-bound", bool(ok), detail)


def check_conformal_identity(full, seed, samples):
    jets = 1000 if full else 300
    rng = np.random.default_rng(seed)
    taus = (-3.0, -1.0, 0.0, 0.5, 0.9, 1.1, 1.5, 2.0, 3.0, 5.0)
    worst = 0.0
    n = 4
    for _ in range(jets):
        j = conformal.RadialJet(
            r=rng.uniform(0.05, 0.95),
            u=0.5 * rng.standard_normal(),
            up=rng.standard_normal(),
            upp=rng.standard_normal(),
        )
        for tau in taus:
            for alpha in (-1, 1):
                p = conformal.ConformalParams(tau=tau, alpha=alpha, n=n)
                worst = max(worst, conformal.check2_identity(j, p))
    ok = worst <= 1e-11
    return CheckResult("conformal-identity", bool(ok), {"worst_gap": worst})


def check_trivial_solver(full, seed, samples):
    ok = True
    detail = {}
    for name, op in (("linear_n3", symops.linear(3)), ("root2_n4", symops.sigma_root(2, 4))):
        chi = 5.0
        psi = float(op.eval_batch(np.full(op.n, chi))[0])
        p = radial.RadialProblem(
            n=op.n,
            op=op,
            psi=radial.constant_psi(psi),
            chi_scale=chi,
            boundary=radial.FiniteValue(0.0),
            grid_n=256,
        )
        sol = radial.newton_solve(p, _smooth_start(p.grid(), seed))
        sup = float(np.abs(sol.u).max())
        ok &= sup <= 1e-10 and sol.newton_iters <= 8
        detail[name] = {"sup_u": sup, "newton_iters": sol.newton_iters}
    return CheckResult("trivial-solver", bool(ok), detail)


def _oracle_ops():
    return [
        ("linear_n3", symops.linear(3)),
        ("root2_n4", symops.sigma_root(2, 4)),
        ("quot_n4", symops.sigma_quotient(4, 4)),
    ]


def check_hyperbolic_oracle(full, seed, samples):
    if full:
        grid_n, jmax, err_bar, off_bar = 4096, 13, 2e-3, 2e-2
    else:
        grid_n, jmax, err_bar, off_bar = 1024, 10, 2e-2, 5e-2
    schedule = tuple(float(2**j) for j in range(1, jmax + 1))
    ok = True
    detail = {"bars": {"err": err_bar, "offset": off_bar}}
    for name, op in _oracle_ops():
        psi = float(op.eval_batch(np.full(op.n, 0.5))[0])
        p = radial.RadialProblem(
            n=op.n,
            op=op,
            psi=radial.constant_psi(psi),
            boundary=radial.Exhaustion(schedule),
            grid_n=grid_n,
            tol=1e-8,
        )
        sols = radial.exhaustion_solve(p)
        last = sols[-1]
        r = p.grid()
        core = r <= 0.9
        err = float(np.abs(last.u[core] - _hyp(r[core])).max())
        offset = radial.asymptotic_estimate(last, 0.5)
        ok &= err <= err_bar and abs(offset) <= off_bar
        detail[name] = {"limit_error": err, "offset": offset}
    return CheckResult("hyperbolic-oracle", bool(ok), detail)


def check_monotone_barriers(full, seed, samples):
    grid_n = 1024 if full else 512
    schedule = tuple(float(2**j) for j in range(1, 8))
    op = symops.linear(3)
    p = radial.RadialProblem(
        n=3,
        op=op,
        psi=radial.constant_psi(1.5),
        boundary=radial.Exhaustion(schedule),
        grid_n=grid_n,
    )
    sols = radial.exhaustion_solve(p)
    slack = 10.0 * p.tol
    r = p.grid()
    sig = 1.0 - r
    delta = 0.1
    band = sig <= delta
    monotone = all(
        float((a.u - b.u).max()) <= slack for a, b in zip(sols, sols[1:])
    )
    lower_ok = True
    upper_ok = True
    for sol, k in zip(sols, schedule):
        w = np.array([conformal.barrier_lower(s, k, delta, math.log(k)) for s in sig[band]])
        lower_ok &= bool(np.all(sol.u[band] >= w - slack))
        wbar = np.array([conformal.barrier_upper(s, delta, math.log(k), 3) for s in sig[band]])
        upper_ok &= bool(np.all(sol.u[band] <= wbar + slack))

    comp_sols = {}
    for v in (1.5, 3.0):
        pc = radial.RadialProblem(
            n=3,
            op=op,
            psi=radial.constant_psi(v),
            boundary=radial.FiniteValue(0.0),
            grid_n=grid_n,
        )
        comp_sols[v] = radial.newton_solve(pc, -0.1 * (1.0 - pc.grid() ** 2))
    comparison = radial.comparison_check(comp_sols[1.5], comp_sols[3.0])
    ok = monotone and lower_ok and upper_ok and comparison
    return CheckResult(
        "monotone-barriers",
        bool(ok),
        {
            "monotone": monotone,
            "lower_barrier": lower_ok,
            "upper_barrier": upper_ok,
            "comparison": comparison,
        },
    )


def check_c0_sandwich(full, seed, samples):
    grid_n = 512 if full else 256
    ok = True
    detail = {}

    op = symops.sigma_root(2, 3)
    chi = 5.0
    psi = float(op.eval_batch(np.full(3, chi))[0])
    p = radial.RadialProblem(
        n=3,
        op=op,
        psi=radial.constant_psi(psi),
        chi_scale=chi,
        boundary=radial.FiniteValue(0.0),
        grid_n=grid_n,
    )
    sol = radial.newton_solve(p, _smooth_start(p.grid(), seed))
    b1, b2, holds = radial.c0_bounds(p, sol, np.zeros(grid_n + 1))
    detail["trivial_vs_zero"] = {"B1": b1, "B2": b2, "holds": holds}
    ok &= holds and abs(b1) <= 1e-6 and abs(b2) <= 1e-6

    pe = radial.RadialProblem(
        n=3,
        op=symops.linear(3),
        psi=radial.constant_psi(1.5),
        boundary=radial.Exhaustion(tuple(float(2**j) for j in range(1, 6))),
        grid_n=grid_n,
    )
    sols = radial.exhaustion_solve(pe)
    b1, b2, holds = radial.c0_bounds(pe, sols[-1], sols[0].u)
    detail["exhaustion_vs_first"] = {"B1": b1, "B2": b2, "holds": holds}
    ok &= holds
    b1, b2, holds = radial.c0_bounds(pe, sols[-1], sols[-1].u)
    detail["exhaustion_vs_self"] = {"B1": b1, "B2": b2, "holds": holds}
    ok &= holds
    return CheckResult("c0-sandwich", bool(ok), detail)


def check_determinism(full, seed, samples):
    count = samples or 2000

    def one_round():
        op = symops.sigma_root(2, 4)
        s = ellipticity.LevelSetSampler(op, 1.0, seed, count)
        report = ellipticity.pue_report(op, 1.0, 3, s, refine_restarts=4)
        cone = cones.garding(2, 4)
        info = {
            "kappa": cones.kappa(cone),
            "rho": cones.rho(cone),
            "type": str(cones.type_of(cone)),
        }
        return json.dumps({"report": report.to_json(), "cone": info}, sort_keys=True)

    a = one_round()
    ellipticity._level_points.cache_clear()
    ellipticity._witness_pool.cache_clear()
    b = one_round()
    ok = a == b
    return CheckResult("determinism", bool(ok), {"bytes": len(a), "identical": ok})


CHECKS = (
    ("cone-invariants", check_cone_invariants),
    ("transform-formulas", check_transform_formulas),
    ("pue-index", check_pue_index),
    ("max-test-cone", check_max_test_cone),
    ("laplace-bound", check_laplace_bound),
    ("conformal-identity", check_conformal_identity),
    ("trivial-solver", check_trivial_solver),
    ("hyperbolic-oracle", check_hyperbolic_oracle),
    ("monotone-barriers", check_monotone_barriers),
    ("c0-sandwich", check_c0_sandwich),
    ("determinism", check_determinism),
)


def run_checks(check_ids=None, full=False, seed=1, samples=None):
    """Run the requested checks in registry order; returns CheckResults."""
    wanted = None if check_ids is None else set(check_ids)
    if wanted is not None:
        known = {cid for cid, _ in CHECKS}
        unknown = wanted - known
        if unknown:
            raise ValueError(f"unknown check ids: {sorted(unknown)}")
    results = []
    for cid, fn in CHECKS:
        if wanted is not None and cid not in wanted:
            continue
        results.append(fn(full, seed, samples))
    return results


def report_json(results):
    return json.dumps([r.to_json() for r in results], sort_keys=True, indent=2)
