import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from farpoint.balance import classify_balance, min_norm_point
from farpoint.generators import (
    b_schedule, equidistant_set, family_A, family_B, growth_demo, random_balanced,
)
from farpoint.geometry import FLOAT, RATIONAL, PointSet
from farpoint.iteration import (
    GREEDY, LOWEST, POLICIES, RANDOM, IllegalStep, IterationTrace, StateBudgetExceeded,
    farthest_step, law_of_cosines_check, max_norm_fast, reachable_set, run_iteration,
    ustar_estimate, ustar_exact,
)

TWO = PointSet([[0, 1], [1, 0]], RATIONAL)


def test_farthest_step_examples():
    ties, succ = farthest_step(TWO, np.array([Fraction(0), Fraction(1)], dtype=object))
    assert ties == (1,)
    assert [float(x) for x in succ[0]] == [1.0, 1.0]
    for ps in (TWO, equidistant_set(3), PointSet(np.eye(3))):
        ties, _ = farthest_step(ps, np.zeros(ps.d))
        assert ties == tuple(range(ps.n))


def test_farthest_step_equidistant_triangle():
    # <x_j, x_0> = -1/2 for j = 1, 2
    ps = equidistant_set(2)
    ties, _ = farthest_step(ps, ps.float_points()[0])
    assert ties == (1, 2)


def test_two_point_example_reaches_sqrt2():
    tr = run_iteration(TWO, 2, LOWEST)
    assert tr.max_norm == pytest.approx(math.sqrt(2), abs=1e-15)
    assert tr.norms_sq_exact[-1] == 2


def test_zero_steps():
    tr = run_iteration(equidistant_set(3), 0)
    assert tr.n_steps == 0 and tr.max_norm == 0
    assert all(float(x) == 0 for x in tr.us[0])


def test_a31_greedy_reaches_sqrt3():
    tr = run_iteration(family_A(3, 1), 6, GREEDY, seed=0)
    assert tr.max_norm >= math.sqrt(3) - 1e-12


def test_illegal_prefix_rejected():
    with pytest.raises(IllegalStep):
        run_iteration(TWO, 2, prefix=[0, 0])


def test_unknown_policy():
    with pytest.raises(ValueError):
        run_iteration(TWO, 2, "sideways")


@pytest.mark.parametrize("d,count", [(2, 7), (3, 15)])
def test_reachable_counts(d, count):
    rs = reachable_set(equidistant_set(d))
    assert rs.closed and rs.count == count


@pytest.mark.parametrize("d,sq", [(2, Fraction(1)), (3, Fraction(4, 3)), (4, Fraction(6, 4)), (5, Fraction(9, 5))])
def test_ustar_exact_equidistant(d, sq):
    assert ustar_exact(equidistant_set(d)).squared == sq


def test_zero_balanced_is_unbounded_suspect():
    rs = reachable_set(TWO, norm_cap=10)
    assert rs.status == "unbounded-suspect"
    assert rs.witness.norm_sq > 100


def test_budget_exhaustion():
    with pytest.raises(StateBudgetExceeded):
        reachable_set(TWO, budget=50)


def test_reachable_set_requires_exact():
    with pytest.raises(ValueError):
        reachable_set(PointSet([[0, 1], [1, 0]]))


def test_lattice_state_invariants():
    ps = equidistant_set(3)
    rs = reachable_set(ps)
    for st_ in rs.states.values():
        assert all(k >= 0 for k in st_.coeffs)
        assert sum(st_.coeffs) == st_.depth
        # the stored norm matches the coefficient vector
        u = sum(k * x for k, x in zip(st_.coeffs, ps.float_points()))
        assert float(u @ u) == pytest.approx(float(st_.norm_sq), abs=1e-12)


def test_reachable_set_is_order_independent():
    A = family_A(3, 2)
    perm = [3, 0, 4, 2, 1]
    B = PointSet(A.points[perm], RATIONAL)

    def values(ps):
        rs = reachable_set(ps)
        out = set()
        for s in rs.states.values():
            u = sum((k * x for k, x in zip(s.coeffs, ps.points)), np.zeros(3, dtype=object))
            out.add(tuple(u))
        return out

    assert values(A) == values(B)


def test_ustar_estimate_examples():
    assert ustar_estimate(TWO, budget=4, steps=10) >= math.sqrt(2) - 1e-9
    rng = np.random.default_rng(3)
    for _ in range(10):
        ps = random_balanced(2, int(rng.integers(3, 8)), seed=int(rng.integers(10**6)))
        assert ustar_estimate(ps, budget=6, steps=200) <= math.sqrt(2) + 1e-9


def test_ustar_estimate_with_growth_witness():
    res = growth_demo("B", d=3, M=25.0)
    ps = family_B(3, 1, res.params["epsilon"])
    sched = b_schedule(2, res.params["k"])
    assert ustar_estimate(ps, budget=2, steps=20, witnesses=[sched]) >= 5


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_estimate_below_exact(d):
    ps = equidistant_set(d)
    assert ustar_estimate(ps, budget=8, steps=200) <= ustar_exact(ps).value + 1e-9


def test_law_of_cosines():
    assert law_of_cosines_check(run_iteration(TWO, 5))
    rng = np.random.default_rng(5)
    for _ in range(100):
        ps = random_balanced(2, int(rng.integers(3, 7)), seed=int(rng.integers(10**6)))
        assert law_of_cosines_check(run_iteration(ps, 30, RANDOM, seed=1))


def test_law_of_cosines_rejects_fabricated_trace():
    tr = run_iteration(PointSet([[0, 1], [1, 0], [-1, 0]]), 4)
    fake = IterationTrace(tr.points, tr.us, tr.ties, tr.chosen, list(tr.norms), tr.policy)
    fake.norms[3] += 0.25
    assert not law_of_cosines_check(fake)


def test_zero_balanced_linear_growth():
    ps = PointSet([[0, 1], [1, 0]])
    eps = float(np.linalg.norm(min_norm_point(ps)))
    assert eps == pytest.approx(math.sqrt(2) / 2)
    for policy in POLICIES:
        tr = run_iteration(ps, 200, policy, seed=2)
        for i, nrm in enumerate(tr.norms):
            assert nrm >= i * eps - 1e-9


def test_trace_jsonl_format():
    tr = run_iteration(TWO, 3)
    lines = tr.to_jsonl().strip().splitlines()
    assert len(lines) == 4
    rec = json.loads(lines[1])
    assert set(rec) == {"i", "u", "chosen", "ties", "norm"}
    assert rec["i"] == 1 and rec["norm"] == 1


def test_exact_trace_is_exact():
    tr = run_iteration(family_A(3, 2), 20, RANDOM, seed=4)
    X = tr.points.points
    for i, j in enumerate(tr.chosen):
        assert all(a == b + c for a, b, c in zip(tr.us[i + 1], tr.us[i], X[j]))


def test_greedy_beats_or_matches_lowest():
    ps = family_A(4, 1)
    assert run_iteration(ps, 12, GREEDY).max_norm >= run_iteration(ps, 12, LOWEST).max_norm


def test_fast_loop_agrees_with_traces():
    ps = random_balanced(3, 7, seed=11)
    tr = run_iteration(ps, 300, LOWEST)
    best, us = max_norm_fast(ps.float_points(), 300, LOWEST)
    assert best == pytest.approx(tr.max_norm, abs=1e-9)
    assert np.allclose(us, np.array(tr.us, dtype=float), atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 4), st.integers(0, 10**6), st.sampled_from(POLICIES))
def test_step_soundness(d, seed, policy):
    rng = np.random.default_rng(seed)
    ps = random_balanced(d, int(rng.integers(d + 1, d + 6)), seed=seed)
    tr = run_iteration(ps, 60, policy, seed=seed)
    X = ps.float_points()
    for i, j in enumerate(tr.chosen):
        s = X @ np.asarray(tr.us[i], dtype=float)
        assert j in tr.ties[i]
        assert s[j] <= s.min() + 1e-9
        assert np.allclose(tr.us[i + 1], np.asarray(tr.us[i]) + X[j], atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 4), st.integers(0, 10**6))
def test_balanced_bound_property(d, seed):
    ps = random_balanced(d, d + 3, seed=seed)
    delta = classify_balance(ps).delta
    best, _ = max_norm_fast(ps.float_points(), 500, RANDOM, np.random.default_rng(seed))
    assert best <= 1 / (2 * delta) + 1 + 1e-9
