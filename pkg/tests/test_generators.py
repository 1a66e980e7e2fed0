import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from farpoint.balance import classify_balance
from farpoint.generators import (
    DEFAULT_PHI, InfeasibleTarget, a_schedule, b_certified_m, b_epsilon_for_target, b_m_bounds,
    b_max_feasible_i, b_round_ceilings, b_schedule, b_sigma, b_steps_for_target, c_m_bound,
    c_max_feasible_i, c_mu_for_target, c_schedule, c_steps_for_target, equidistant,
    equidistant_set, family_A, family_B, family_C, growth_demo, nudge_away, perturb,
    random_balanced, verify_prescribed_schedule,
)
from farpoint.geometry import validate

PHI = math.pi / 6


@pytest.mark.parametrize("l", [1, 2, 3, 4, 6])
def test_equidistant(l):
    X = equidistant(l)
    assert X.shape == (l + 1, l)
    G = X @ X.T
    off = G[~np.eye(l + 1, dtype=bool)]
    assert np.allclose(off, -1 / l, atol=1e-12)
    assert np.allclose(np.diag(G), 1, atol=1e-12)
    assert np.allclose(X.sum(axis=0), 0, atol=1e-12)


def test_equidistant_low_dims():
    assert np.array_equal(equidistant(1), [[1.0], [-1.0]])
    ps = equidistant_set(3)
    assert ps.gram[0][1] == Fraction(-1, 3) and ps.gram[2][2] == 1
    assert validate(ps).ok


def test_family_A_examples():
    ps = family_A(2, 1)
    assert [list(map(int, p)) for p in ps.points] == [[1, 0], [0, 1], [-1, 0]]
    assert classify_balance(ps).b == 1
    assert classify_balance(family_A(3, 3)).b == 3
    rep = verify_prescribed_schedule(family_A(3, 1), a_schedule(3, 1))
    assert rep.ok and rep.max_norm >= math.sqrt(3) - 1e-12
    with pytest.raises(ValueError):
        family_A(3, 4)


def test_family_B_sigma_and_sum():
    ps = family_B(3, 1, 0.2, PHI)
    X = ps.float_points()
    sigma = 1 - 2 * math.cos(0.2) ** 2
    assert b_sigma(2, 0.2) == pytest.approx(sigma)
    assert X[1] @ X[2] == pytest.approx(sigma, abs=1e-12)
    for d, b, eps in [(3, 1, 0.2), (5, 2, 0.1), (6, 1, 0.05)]:
        ps = family_B(d, b, eps)
        X, c = ps.float_points(), d - b
        v = np.zeros(d)
        v[c - 1] = 1
        assert np.allclose(X[1:c + 1].sum(axis=0), c * math.sin(eps) * v, atol=1e-12)
        G = X[1:c + 1] @ X[1:c + 1].T
        assert np.allclose(G[~np.eye(c, dtype=bool)], b_sigma(c, eps), atol=1e-12)
    assert classify_balance(family_B(4, 2, 0.1)).b == 2


def test_family_B_rejects_bad_params():
    with pytest.raises(ValueError, match="epsilon"):
        family_B(5, 2, 1.2)
    with pytest.raises(ValueError):
        family_B(3, 2, 0.1)


def test_family_B_x0_variants():
    lit = family_B(3, 1, 0.2, x0="literal").float_points()[0]
    assert np.linalg.norm(lit) < 1
    assert validate(family_B(3, 1, 0.2)).ok


def test_family_C_examples():
    assert classify_balance(family_C(3, 0.05, 0.15)).b == 3
    assert classify_balance(family_C(3, 0.0, 0.1)).b == 2
    for phi, mu in [(PHI, 0.1), (0.4, 0.3)]:
        X = family_C(4, 0.0, mu, phi).float_points()
        # <x0, x_{d+1}> = -cos(phi) cos(mu) + sin(phi) sin(mu) = -cos(phi + mu)
        assert X[0] @ X[-1] == pytest.approx(-math.cos(phi + mu), abs=1e-12)
    with pytest.raises(ValueError):
        family_C(3, 0.2, 0.1)


def test_b_ceilings_plug_in():
    i_a1, i_a2 = b_max_feasible_i(3, 1, 0.2, PHI)
    assert i_a1 == pytest.approx((math.cos(PHI) - math.sin(PHI) * math.sin(0.2)) / (2 * math.sin(0.2) ** 2))
    # for c = 2 the j = c-1 ceiling is the only b-block one
    assert b_round_ceilings(3, 1, 0.2, PHI) == pytest.approx([i_a1, i_a2])
    a1, a2 = b_max_feasible_i(3, 1, 1e-4, PHI)
    assert a1 > 1e7 and a2 > 1e6


def _first_failing_round(d, b, eps, phi):
    c = d - b
    ceil = min(b_round_ceilings(d, b, eps, phi))
    ps = family_B(d, b, eps, phi, x0="literal")
    rep = verify_prescribed_schedule(ps, b_schedule(c, max(0, int(ceil)) + 4))
    assert not rep.ok
    return (rep.first_violation - 1) // c, ceil


def test_b_simulation_matches_closed_form():
    i, ceil = _first_failing_round(3, 1, 0.2, PHI)
    assert i in (math.floor(ceil), math.floor(ceil) + 1)
    rng = np.random.default_rng(0)
    for _ in range(20):
        d = int(rng.integers(3, 7))
        b = int(rng.integers(1, d - 1))
        eps = float(rng.uniform(0.02, 0.15))
        phi = float(rng.uniform(0.2, 1.2))
        i, ceil = _first_failing_round(d, b, eps, phi)
        if ceil < 0:
            assert i == 0
        else:
            assert i in (math.floor(ceil), math.floor(ceil) + 1)


def test_b_block_condition_tightest_at_j1():
    # sigma < 0 makes sigma (cos phi - j) smallest at j = 1, not at j = c - 1
    ceil = b_round_ceilings(6, 2, 0.05, PHI)
    assert ceil[1] == min(ceil[1:]) and ceil[1] < ceil[-1]
    i, _ = _first_failing_round(6, 2, 0.05, PHI)
    assert i <= ceil[1] + 1 < ceil[-1]


def test_b_steps_examples():
    assert b_steps_for_target(3, 1, 0.1, PHI, 1 + 1e-9) in (0, 1)
    with pytest.raises(InfeasibleTarget):
        b_steps_for_target(3, 1, 0.1, PHI, 10 * max(b_m_bounds(3, 1, 0.1, PHI)))


def test_b_a1_only_epsilon_is_not_enough():
    # epsilon with cos^2(phi)(1 + 1/sin^2 eps) = 30: the j = 1 bound is below 25
    eps = math.asin(1 / math.sqrt(30 / math.cos(PHI) ** 2 - 1))
    m1, m2 = b_m_bounds(3, 1, eps, PHI)
    assert m1 == pytest.approx(30)
    assert m2 < 25
    with pytest.raises(InfeasibleTarget):
        b_steps_for_target(3, 1, eps, PHI, 25)
    k = math.ceil((math.sqrt(math.sin(PHI) ** 2 + 24) - math.sin(PHI)) / (2 * math.sin(eps)))
    rep = verify_prescribed_schedule(family_B(3, 1, eps, PHI, x0="literal"), b_schedule(2, k))
    assert not rep.ok and rep.condition == "a"


def test_b_certified_epsilon_reaches_target():
    eps = b_epsilon_for_target(3, 1, 25)
    assert b_certified_m(3, 1, eps) == pytest.approx(25)
    k = b_steps_for_target(3, 1, eps, PHI, 25)
    rep = verify_prescribed_schedule(family_B(3, 1, eps, x0="literal"), b_schedule(2, k))
    assert rep.ok and rep.max_norm >= 5


def test_c_closed_forms():
    mu = 0.1
    assert c_max_feasible_i(3, 0.0, mu, PHI) == pytest.approx((math.cos(PHI) - 1) / (math.cos(mu) - 1))
    assert c_m_bound(1e-4, 3e-4) > c_m_bound(1e-3, 3e-3) > c_m_bound(1e-2, 3e-2)
    assert c_m_bound(1e-5, 3e-5) > 1e6


def test_c_simulation_matches_ceiling_and_conditions():
    rng = np.random.default_rng(1)
    for _ in range(15):
        d = int(rng.integers(3, 6))
        eps = float(rng.choice([0.0, rng.uniform(0.005, 0.05)]))
        mu = eps + float(rng.uniform(0.02, 0.15))
        ceil = c_max_feasible_i(d, eps, mu, PHI)
        k = math.floor(ceil)
        ps = family_C(d, eps, mu, PHI)
        assert verify_prescribed_schedule(ps, c_schedule(d, k)).ok
        rep = verify_prescribed_schedule(ps, c_schedule(d, k + 3))
        assert not rep.ok
        # x0 is never preferred and x1 / x_{d+1} never swap
        assert rep.condition == "c"


def test_c_growth_from_m_bound():
    mu = c_mu_for_target(25.0)
    assert c_m_bound(0.0, mu) == pytest.approx(25.0)
    res = growth_demo("C", d=3, M=25.0, variant="mu")
    assert res.ok and res.achieved >= 5
    assert res.params["mu"] <= mu
    res = growth_demo("C", d=3, M=25.0, variant="eps")
    assert res.ok and res.params["mu"] == pytest.approx(3 * res.params["epsilon"])


def test_schedule_reports():
    assert verify_prescribed_schedule(family_A(5, 2), a_schedule(5, 2)).ok
    eps = 0.05
    ps = family_B(3, 1, eps)
    k = min(b_steps_for_target(3, 1, eps, PHI, 4), int(min(b_round_ceilings(3, 1, eps, PHI))))
    assert verify_prescribed_schedule(ps, b_schedule(2, k)).ok
    assert verify_prescribed_schedule(family_C(3, 0.0, 0.1), c_schedule(3, 5)).ok
    bad = verify_prescribed_schedule(family_A(2, 1), [0, 0])
    assert not bad.ok and bad.first_violation == 1
    with pytest.raises(ValueError):
        verify_prescribed_schedule(family_A(2, 1), [])


@pytest.mark.parametrize("d,b", [(3, 1), (4, 1), (5, 2), (6, 2)])
def test_b_growth_demo(d, b):
    res = growth_demo("B", d=d, b=b, M=25.0)
    assert res.ok and res.achieved >= 5 and res.report.ok


def test_random_balanced_and_perturb():
    assert classify_balance(random_balanced(2, 5, seed=3)).b == 2
    a21 = family_A(2, 1)
    moved = nudge_away(a21, 0, 1, 0.01)
    assert classify_balance(moved).b == 2
    same = perturb(a21, 0.0)
    assert same.points is a21 and same.b == 1
    p = perturb(a21, 0.05, seed=2)
    assert validate(p.points).ok and p.b == classify_balance(p.points).b
    with pytest.raises(ValueError):
        random_balanced(3, 3)


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 6), st.integers(0, 10**6))
def test_family_classes_property(d, seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, d + 1))
    assert classify_balance(family_A(d, m)).b == m
    b = int(rng.integers(1, d - 1))
    eps = float(rng.uniform(0.01, 0.2))
    assert classify_balance(family_B(d, b, eps)).b == b
    mu = float(rng.uniform(0.05, 0.3))
    e = float(rng.uniform(0.001, mu * 0.9))
    assert classify_balance(family_C(d, e, mu)).b == d
    assert classify_balance(family_C(d, 0.0, mu)).b == d - 1
