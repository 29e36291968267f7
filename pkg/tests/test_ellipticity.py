"""Level-set sampler, test-cone identity, PUE constants, and inequalities."""

import numpy as np
import pytest

from symcone import cones, ellipticity as el, symops
from symcone.errors import SamplerStarvedError

ROOT24 = symops.sigma_root(2, 4)


def sampler(op, sigma=1.0, count=1500, seed=0x5EED):
    return el.LevelSetSampler(op, sigma, seed, count)


def test_samples_sit_on_level_inside_cone():
    for op in (ROOT24, symops.sigma_quotient(3, 4), symops.guan_zhang(2, 3, (1.0,), (1.0,))):
        s = sampler(op)
        pts = el.sample_level_set(s)
        assert pts.shape == (s.count, op.n)
        vals = op.eval_batch(pts)
        assert np.abs(vals - s.sigma).max() <= 1e-9 * (1 + abs(s.sigma))
        assert cones.contains_batch(op.asymptotic_cone(), pts).all()


def test_diagonal_ray_bisection():
    # f(t * ones) = sigma has the unique diagonal solution, hit exactly
    lin = symops.linear(3)
    pts, ok = el._bisect_onto_level(lin, 3.0, np.ones((1, 3)))
    assert ok[0] and np.allclose(pts[0], 1.0, atol=1e-9)
    pts, ok = el._bisect_onto_level(ROOT24, float(np.sqrt(6.0)), np.ones((1, 4)))
    assert ok[0] and np.allclose(pts[0], 1.0, atol=1e-9)


def test_sampler_determinism_bit_for_bit():
    s = sampler(ROOT24, count=600)
    a = el.sample_level_set(s)
    el._level_points.cache_clear()
    b = el.sample_level_set(s)
    assert np.array_equal(a, b)
    c = el.sample_level_set(el.LevelSetSampler(ROOT24, 1.0, 0x5EED + 1, 600))
    assert not np.array_equal(a, c)


def test_sampler_starved_on_unattainable_level():
    quot = symops.sigma_quotient(4, 4)
    with pytest.raises(SamplerStarvedError):
        el.sample_level_set(el.LevelSetSampler(quot, -1.0, 1, 200))


def test_asymptotic_contains_basics():
    s = sampler(ROOT24, count=800)
    assert el.asymptotic_contains(ROOT24, np.ones(4), s)
    # boundary direction within tolerance: (1,1,1,1-n/k) for k=2, n=4
    assert el.max_test_cone_contains(ROOT24, 1.0, np.array([1.0, 1, 1, -1]), s)
    ratio, witness = el.test_cone_margin(
        ROOT24, 1.0, np.array([1.0, 1, 1, -1.1]), s, refine_restarts=10
    )
    assert ratio < -el.MARGIN_TOL
    assert witness.shape == (4,)
    # same structure one family member up: rho = n/k = 5/3
    root35 = symops.sigma_root(3, 5)
    s35 = sampler(root35, count=800)
    edge = np.array([1.0, 1, 1, 1, 1 - 5.0 / 3.0])
    assert el.max_test_cone_contains(root35, 1.0, edge, s35)
    beyond = edge.copy()
    beyond[-1] -= 0.1
    r, _ = el.test_cone_margin(root35, 1.0, beyond, s35, refine_restarts=10)
    assert r < -el.MARGIN_TOL


def test_guan_zhang_two_sided():
    gz = symops.guan_zhang(2, 3, (1.0,), (1.0,))
    s = sampler(gz, count=800)
    inside = np.array([0.3, 0.5, 1.0])
    assert cones.strictly_inside(cones.garding(2, 3), inside)
    assert el.asymptotic_contains(gz, inside, s)
    outside = np.array([-0.6, 1.0, 1.0])  # sigma_2 = -0.2 < 0
    assert not el.asymptotic_contains(gz, outside, s, refine_restarts=8)


@pytest.mark.parametrize(
    "op",
    [ROOT24, symops.sigma_quotient(3, 4), symops.guan_zhang(2, 4, (1.0,), (1.0,))],
)
def test_level_set_and_global_test_cones_agree(op):
    # the maximal test cone of a level set equals the closed asymptotic
    # cone; probes within a 1e-3 band of the boundary are skipped
    s = sampler(op, count=700, seed=3)
    cone = op.asymptotic_cone()
    rng = np.random.default_rng(71)
    checked = 0
    for mu in rng.standard_normal((120, op.n)):
        eps = 1e-3 * (1.0 + np.abs(mu).max())
        strictly_in = cones.contains(cone, mu - eps)
        clearly_out = not cones.contains(cone, mu + eps)
        if not (strictly_in or clearly_out):
            continue
        level_ans = el.max_test_cone_contains(op, s.sigma, mu, s, refine_restarts=4)
        global_ans = el.asymptotic_contains(op, mu, s, refine_restarts=4)
        assert level_ans == global_ans == strictly_in
        checked += 1
    assert checked > 60


def test_pue_report_linear_exact():
    lin = symops.linear(3)
    s = sampler(lin, sigma=3.0, count=400)
    for m in (1, 2, 3):
        rep = el.pue_report(lin, 3.0, m, s)
        assert rep.theta == pytest.approx(1 / 3, abs=1e-12)
        assert rep.violations == 0
    # on the level set sum f_i lam_i = f(lam) = sigma, up to the sampler's
    # level tolerance 1e-9 * (1 + sigma)
    rep = el.pue_report(lin, 3.0, 1, s)
    assert rep.K0 == pytest.approx(-1.0, abs=2e-9)


@pytest.mark.parametrize(
    "op",
    [
        symops.sigma_root(2, 4),
        symops.sigma_root(3, 5),
        symops.sigma_quotient(3, 4),
        symops.guan_zhang(2, 4, (1.0,), (1.0,)),
        symops.guan_zhang(3, 4, (1.0, 0.5), (0.5, 0.0)),
    ],
)
def test_pue_index_law(op):
    # the largest m with stable theta equals 1 + kappa of the asymptotic cone
    m_star = 1 + cones.kappa(op.asymptotic_cone())
    s = sampler(op, count=1500, seed=5)
    stable = el.pue_report(op, 1.0, m_star, s, refine_restarts=10)
    assert stable.theta > 1e-4
    assert stable.violations == 0
    if m_star < op.n:
        collapsed = el.pue_report(op, 1.0, m_star + 1, s, refine_restarts=10)
        assert collapsed.theta < 1e-2


def test_theta_never_exceeds_one_over_m():
    s = sampler(ROOT24, count=500)
    for m in (1, 2, 3, 4):
        rep = el.pue_report(ROOT24, 1.0, m, s)
        assert 0.0 <= rep.theta <= 1.0 / m + 1e-12


def test_euler_identity_on_level_sets():
    # degree-one homogeneity: sum f_i(lam) lam_i = f(lam) at every sample
    for op in (symops.linear(4), ROOT24, symops.sigma_quotient(4, 4)):
        pts = el.sample_level_set(sampler(op, count=600))
        g = op.grad_batch(pts)
        euler = (g * pts).sum(axis=1)
        vals = op.eval_batch(pts)
        assert np.abs(euler - vals).max() <= 1e-10 * (1.0 + np.abs(vals).max())


def test_fully_uniform_check():
    lin = symops.linear(3)
    assert el.fully_uniform_check(lin, 3.0, sampler(lin, sigma=3.0, count=400))
    assert not el.fully_uniform_check(ROOT24, 1.0, sampler(ROOT24, count=400))


def test_tilde_transform_gradient_and_domain():
    til = el.tilde_transform(ROOT24, 1.0)
    lam = np.array([0.5, 0.8, 1.2, 2.0])
    g = til.grad_batch(lam)[0]
    h = 1e-5
    for i in range(4):
        e = np.zeros(4)
        e[i] = 1.0
        fd = (til.eval_batch(lam + h * e)[0] - til.eval_batch(lam - h * e)[0]) / (2 * h)
        assert g[i] == pytest.approx(fd, rel=1e-6)
    assert til.domain() == cones.transform(cones.garding(2, 4), 1.0)
    base_g = ROOT24.grad_batch(til._map(lam))[0]
    assert np.allclose(g, base_g.sum() - 1.0 * base_g, rtol=1e-12)


def test_tilde_transform_ellipticity_sharpness():
    rho_g = cones.rho(ROOT24.asymptotic_cone())  # = 2
    below = el.tilde_transform(ROOT24, rho_g / 2)
    assert el.fully_uniform_check(below, 1.0, sampler(below, count=800), refine_restarts=8)
    at = el.tilde_transform(ROOT24, rho_g)
    rep = el.pue_report(at, 1.0, 4, sampler(at, count=800), refine_restarts=12)
    assert rep.theta < 1e-4


def test_laplace_bound():
    for op in (symops.linear(3), ROOT24, symops.guan_zhang(2, 3, (1.0,), (1.0,))):
        assert el.laplace_bound_check(op, sampler(op, count=900), refine_restarts=8)
    # linear has exact equality f_i = sum f / n everywhere
    lin = symops.linear(5)
    pts = el.sample_level_set(sampler(lin, sigma=2.0, count=100))
    g = lin.grad_batch(pts)
    assert np.allclose(g.max(axis=1), g.sum(axis=1) / 5.0, rtol=1e-14)


def test_k0_propagation():
    for op in (symops.linear(3), ROOT24, symops.guan_zhang(2, 3, (1.0,), (1.0,))):
        assert el.k0_propagation_check(op, 1.0, sampler(op, count=900))
    # homogeneous ops have K0 <= 0 (Euler identity makes sum f_i lam_i > 0)
    rep = el.pue_report(ROOT24, 1.0, 1, sampler(ROOT24, count=900))
    assert rep.K0 <= 0.0


def test_report_determinism():
    s = sampler(ROOT24, count=700)
    a = el.pue_report(ROOT24, 1.0, 3, s, refine_restarts=6)
    el._level_points.cache_clear()
    el._witness_pool.cache_clear()
    b = el.pue_report(ROOT24, 1.0, 3, s, refine_restarts=6)
    assert a == b
