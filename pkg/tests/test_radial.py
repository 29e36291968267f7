"""Radial solver: discretization order, oracles, exhaustion, and checks."""

import json
import math

import numpy as np
import pytest

from symcone import radial, symops
from symcone.errors import (
    DomainError,
    EstimateUnavailableError,
    NonconvergenceError,
    RangeError,
)


def hyp(r):
    return np.log(2.0 / (1.0 - r**2))


def smooth_start(r, seed, amplitude=0.1):
    rng = np.random.default_rng(seed)
    c = rng.uniform(-1.0, 1.0, 3)
    v = c[0] + c[1] * r**2 + c[2] * r**4
    return amplitude * (v - v[-1])


def trivial_problem(op, chi=5.0, grid_n=128):
    psi = float(op.eval_batch(np.full(op.n, chi))[0])
    return radial.RadialProblem(
        n=op.n,
        op=op,
        psi=radial.constant_psi(psi),
        chi_scale=chi,
        boundary=radial.FiniteValue(0.0),
        grid_n=grid_n,
    )


def test_trivial_residual_is_zero():
    p = trivial_problem(symops.sigma_root(2, 3))
    F, rows, feas = radial.residual(p, np.zeros(p.grid_n + 1))
    assert np.abs(F).max() <= 1e-14
    assert feas.all()
    assert np.allclose(rows, 5.0)


def test_interior_residual_second_order():
    # substituted hyperbolic profile: residual drops ~4x per grid doubling
    maxes = []
    for grid_n in (128, 256, 512):
        p = radial.RadialProblem(
            n=3,
            op=symops.linear(3),
            psi=radial.constant_psi(1.5),
            boundary=radial.FiniteValue(0.0),
            grid_n=grid_n,
            r_max=0.95,
        )
        r = p.grid()
        F, _, feas = radial.residual(p, hyp(r), boundary_value=float(hyp(r[-1])))
        assert feas.all()
        maxes.append(np.abs(F[:-1]).max())
    assert maxes[0] / maxes[1] == pytest.approx(4.0, rel=0.15)
    assert maxes[1] / maxes[2] == pytest.approx(4.0, rel=0.15)


def test_constant_shift_scales_eigenvalues():
    p = trivial_problem(symops.sigma_root(2, 3))
    u = smooth_start(p.grid(), 3)
    rows, _ = radial.nodal_eigs(p, u)
    rows_shift, _ = radial.nodal_eigs(p, u + 0.7)
    assert np.allclose(rows_shift, math.exp(-1.4) * rows, rtol=1e-12)


def test_trivial_solver_converges_fast():
    for seed in (1, 2):
        for op in (symops.linear(3), symops.sigma_root(2, 4), symops.sigma_quotient(3, 4)):
            p = trivial_problem(op, grid_n=256)
            sol = radial.newton_solve(p, smooth_start(p.grid(), seed))
            assert sol.converged
            assert np.abs(sol.u).max() <= 1e-10
            assert sol.newton_iters <= 8
            assert sol.admissible.all()


def test_hyperbolic_newton_oracle():
    # finite-data solve on a truncated ball against the exact profile
    p = radial.RadialProblem(
        n=3,
        op=symops.linear(3),
        psi=radial.constant_psi(1.5),
        boundary=radial.FiniteValue(float(hyp(np.array([0.99]))[0])),
        grid_n=4096,
        r_max=0.99,
    )
    r = p.grid()
    sol = radial.newton_solve(p, 0.9 * hyp(r) + 0.1 * hyp(r)[-1] * (r**2))
    core = r <= 0.9
    assert np.abs(sol.u[core] - hyp(r[core])).max() <= 1e-3


def test_uniqueness_from_independent_starts():
    p = trivial_problem(symops.sigma_root(2, 3), grid_n=256)
    a = radial.newton_solve(p, smooth_start(p.grid(), 11))
    b = radial.newton_solve(p, smooth_start(p.grid(), 12))
    assert np.abs(a.u - b.u).max() <= 10 * p.tol


def test_psi_below_floor_rejected_before_newton():
    op = symops.sigma_root(2, 3)
    p = radial.RadialProblem(
        n=3,
        op=op,
        psi=radial.constant_psi(-1.0),
        boundary=radial.FiniteValue(0.0),
        grid_n=128,
    )
    with pytest.raises(RangeError):
        radial.validate_problem(p)
    with pytest.raises(RangeError):
        radial.newton_solve(p, np.zeros(129))


def test_nonconvergence_carries_last_iterate():
    p = trivial_problem(symops.linear(3), grid_n=128)
    p = radial.RadialProblem(
        n=3,
        op=p.op,
        psi=p.psi,
        chi_scale=p.chi_scale,
        boundary=p.boundary,
        grid_n=128,
        max_newton=1,
        tol=1e-9,
    )
    with pytest.raises(NonconvergenceError) as err:
        radial.newton_solve(p, smooth_start(p.grid(), 5, amplitude=0.3))
    assert err.value.last_solution is not None
    assert not err.value.last_solution.converged


def test_exhaustion_monotone_and_limits():
    p = radial.RadialProblem(
        n=3,
        op=symops.linear(3),
        psi=radial.constant_psi(1.5),
        boundary=radial.Exhaustion(tuple(float(2**j) for j in range(1, 11))),
        grid_n=1024,
    )
    sols = radial.exhaustion_solve(p)
    assert len(sols) == 10
    for a, b in zip(sols, sols[1:]):
        assert float((a.u - b.u).max()) <= 10 * p.tol
    r = p.grid()
    core = r <= 0.9
    assert np.abs(sols[-1].u[core] - hyp(r[core])).max() <= 2e-2
    assert sols[-1].asymptotic_offset is not None
    assert abs(sols[-1].asymptotic_offset) <= 5e-2
    for sol, k in zip(sols, p.boundary.k_schedule):
        assert sol.boundary_value == pytest.approx(math.log(k))
        assert sol.admissible.all()


def test_rate_hypothesis_gates_offset():
    # (1,..,1,-1) in closed garding(k) iff k <= n/2
    assert radial._rate_hypothesis(symops.linear(3))
    assert radial._rate_hypothesis(symops.sigma_root(2, 4))
    assert not radial._rate_hypothesis(symops.sigma_quotient(4, 4))
    assert not radial._rate_hypothesis(symops.sigma_root(3, 4))


def test_asymptotic_estimate_exact_profile():
    p = radial.RadialProblem(
        n=3,
        op=symops.linear(3),
        psi=radial.constant_psi(1.5),
        boundary=radial.Exhaustion((2.0, 4.0)),
        grid_n=4096,
    )
    r = p.grid()
    sol = radial.RadialSolution(
        r=r,
        u=hyp(np.minimum(r, 1.0 - 1e-12)),
        residual_inf=0.0,
        admissible=np.ones(r.size, dtype=bool),
        lam_rad=np.full(r.size, 0.5),
        lam_tan=np.full(r.size, 0.5),
        B1=0.0,
        B2=0.0,
        newton_iters=0,
        converged=True,
        boundary_value=0.0,
        problem=p,
    )
    assert abs(radial.asymptotic_estimate(sol, 0.5)) <= 1e-3
    bad = radial.RadialSolution(
        r=r,
        u=sol.u,
        residual_inf=0.0,
        admissible=np.zeros(r.size, dtype=bool),
        lam_rad=sol.lam_rad,
        lam_tan=sol.lam_tan,
        B1=0.0,
        B2=0.0,
        newton_iters=0,
        converged=True,
        boundary_value=0.0,
        problem=p,
    )
    with pytest.raises(EstimateUnavailableError):
        radial.asymptotic_estimate(bad, 0.5)


def test_comparison_check():
    sols = {}
    for v in (1.5, 3.0):
        p = radial.RadialProblem(
            n=3,
            op=symops.linear(3),
            psi=radial.constant_psi(v),
            boundary=radial.FiniteValue(0.0),
            grid_n=256,
        )
        sols[v] = radial.newton_solve(p, -0.1 * (1.0 - p.grid() ** 2))
    assert radial.comparison_check(sols[1.5], sols[3.0])
    with pytest.raises(DomainError):
        radial.comparison_check(sols[3.0], sols[1.5])  # psi ordering violated
    p_other = radial.RadialProblem(
        n=3,
        op=symops.sigma_root(2, 3),
        psi=radial.constant_psi(1.5),
        boundary=radial.FiniteValue(0.0),
        grid_n=256,
    )
    other = radial.newton_solve(p_other, -0.1 * (1.0 - p_other.grid() ** 2))
    with pytest.raises(DomainError):
        radial.comparison_check(sols[1.5], other)  # mixed operators rejected


def test_c0_bounds():
    op = symops.sigma_root(2, 3)
    p = trivial_problem(op, grid_n=256)
    sol = radial.newton_solve(p, smooth_start(p.grid(), 7))
    b1, b2, holds = radial.c0_bounds(p, sol, np.zeros(p.grid_n + 1))
    assert holds and abs(b1) <= 1e-8 and abs(b2) <= 1e-8
    b1, b2, holds = radial.c0_bounds(p, sol, sol.u)
    assert holds and b1 <= 1e-8 and b2 >= -1e-8
    with pytest.raises(DomainError):
        radial.c0_bounds(p, sol, np.full(p.grid_n + 1, 40.0))  # degenerate background


def test_problem_json_round_trip(tmp_path):
    spec = {
        "n": 3,
        "op": {"family": "linear", "k": 1, "n": 3, "alphas": [], "betas": []},
        "psi": 1.5,
        "chi_scale": 0.0,
        "boundary": {"mode": "exhaustion", "k_schedule": [2.0, 4.0, 8.0]},
        "grid_n": 128,
        "tol": 1e-9,
    }
    p = radial.problem_from_json(spec)
    assert isinstance(p.boundary, radial.Exhaustion)
    assert p.boundary.k_schedule == (2.0, 4.0, 8.0)
    with pytest.raises(DomainError):
        radial.problem_from_json({**spec, "weird": 1})
    with pytest.raises(DomainError):
        radial.problem_from_json({**spec, "boundary": {"mode": "finite"}})
    tab = {**spec, "psi": {"r": [0.0, 1.0], "values": [1.5, 2.0]}}
    p2 = radial.problem_from_json(tab)
    assert p2.psi(np.array([0.5]))[0] == pytest.approx(1.75)


def test_profile_csv_format(tmp_path):
    p = trivial_problem(symops.linear(3), grid_n=64)
    sol = radial.newton_solve(p, smooth_start(p.grid(), 9))
    path = tmp_path / "profile.csv"
    radial.write_profile_csv(sol, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "r,u,u_prime,lambda_rad,lambda_tan,residual"
    assert len(lines) == p.grid_n + 2
    first = lines[1].split(",")
    assert float(first[0]) == 0.0
    assert float(first[2]) == 0.0  # u'(0) = 0 by the center scheme
    summary = radial.summary_dict(sol)
    json.dumps(summary)  # serializable
    assert summary["converged"] is True
