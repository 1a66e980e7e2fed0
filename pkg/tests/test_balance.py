import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from farpoint.balance import (
    classify_balance, dedup, delta, facet_distance, min_norm_certificate, min_norm_point,
    seb_equivalence_check,
)
from farpoint.generators import equidistant, equidistant_set, family_A, family_B, family_C, random_balanced
from farpoint.geometry import PointSet

from oracles import delta_by_sampling, facet_distance_by_hull, min_norm_by_grid, random_rotation

E12 = PointSet([[1, 0], [0, 1]])
PM = PointSet([[1, 0], [0, 1], [-1, 0], [0, -1]])
TRI = PointSet(equidistant(2))


def test_min_norm_point_examples():
    oracle = min_norm_by_grid(E12.float_points())
    assert np.allclose(oracle, [0.5, 0.5], atol=1e-12)
    p = min_norm_point(E12)
    assert np.allclose(p, oracle, atol=1e-10)
    assert np.linalg.norm(p) == pytest.approx(math.sqrt(2) / 2, abs=1e-10)
    assert np.allclose(min_norm_point(PM), 0)
    assert np.allclose(min_norm_point(TRI), 0)


def test_min_norm_point_against_grid_oracle():
    rng = np.random.default_rng(0)
    for _ in range(20):
        t = rng.uniform(0, math.pi / 2, 3) + rng.uniform(0, 2 * math.pi)
        P = np.column_stack([np.cos(t), np.sin(t)])
        p = min_norm_point(P)
        q = min_norm_by_grid(P, 300)
        assert np.linalg.norm(p) <= np.linalg.norm(q) + 1e-10
        assert np.linalg.norm(p - q) < 1e-2


def test_classify_examples():
    assert classify_balance(PointSet([[1, 0], [0, 1], [-1, 0]])).b == 1
    assert classify_balance(PM).b == 2
    assert classify_balance(E12).b == 0
    assert classify_balance(family_C(3, 0.0, 0.1)).b == 2


def test_delta_examples():
    assert delta(E12) == pytest.approx(-math.sqrt(2) / 2, abs=1e-9)
    assert delta_by_sampling(TRI.float_points()) == pytest.approx(0.5, abs=1e-6)
    assert delta(TRI) == pytest.approx(0.5, abs=1e-9)
    assert delta(PointSet([[1, 0], [0, 1], [-1, 0]])) == 0


def test_seb_equivalence_examples():
    assert seb_equivalence_check(PM)
    assert seb_equivalence_check(E12)
    assert seb_equivalence_check(equidistant_set(3))


def test_report_export():
    rep = classify_balance(E12).to_dict()
    assert set(rep) == {"b", "delta", "support", "min_norm_point"}
    assert rep["support"] == []


def test_duplicates_do_not_change_class():
    P = np.array([[1, 0], [1, 0], [0, 1], [-1, 0], [0, 1.0]])
    kept, idx = dedup(P)
    assert len(kept) == 3 and idx == [0, 2, 3]
    assert classify_balance(P).b == 1


def test_facet_distance_matches_qhull():
    rng = np.random.default_rng(1)
    for d in (2, 3):
        for _ in range(20):
            ps = random_balanced(d, d + 4, seed=int(rng.integers(10**6)))
            P = ps.float_points()
            assert facet_distance(P) == pytest.approx(facet_distance_by_hull(P), abs=1e-9)


def _check_trichotomy(ps):
    rep = classify_balance(ps)
    d = ps.d
    if rep.b == 0:
        assert rep.delta < 0 and np.linalg.norm(rep.min_norm_point) > 0
    elif rep.b == d:
        assert rep.delta > 0
    else:
        assert rep.delta == 0 and np.allclose(rep.min_norm_point, 0)
    if rep.b >= 1:
        S = ps.float_points()[list(rep.support)]
        assert np.linalg.matrix_rank(S, tol=1e-9) == rep.b
    return rep


def test_trichotomy_on_families():
    for d in (2, 3, 4):
        for m in range(1, d + 1):
            assert _check_trichotomy(family_A(d, m)).b == m
    assert _check_trichotomy(family_B(4, 2, 0.1)).b == 2
    assert _check_trichotomy(family_C(3, 0.05, 0.15)).b == 3


def test_trichotomy_random():
    rng = np.random.default_rng(2)
    classes = set()
    for _ in range(1000):
        d = int(rng.integers(2, 4))
        n = int(rng.integers(d, d + 5))
        V = rng.normal(size=(n, d))
        ps = PointSet(V / np.linalg.norm(V, axis=1, keepdims=True))
        if np.linalg.matrix_rank(ps.float_points()) < d:
            continue
        classes.add(_check_trichotomy(ps).b in (0, d))
    assert classes == {True}


def test_delta_matches_sampling_oracle():
    rng = np.random.default_rng(4)
    for d in (2, 3):
        for _ in range(4):
            n = int(rng.integers(d + 1, d + 5))
            V = rng.normal(size=(n, d))
            P = V / np.linalg.norm(V, axis=1, keepdims=True)
            if np.linalg.matrix_rank(P) < d:
                continue
            assert delta(P) == pytest.approx(delta_by_sampling(P, 10**6, seed=d), abs=2e-3)


unit_sets = st.integers(0, 10**6).map(lambda s: np.random.default_rng(s))


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 4), st.integers(0, 10**6))
def test_min_norm_certificate_always(d, seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    V = rng.normal(size=(n, d))
    P = V / np.linalg.norm(V, axis=1, keepdims=True)
    p = min_norm_point(P)
    assert min_norm_certificate(P, p) >= -1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 3), st.integers(0, 10**6))
def test_rotation_invariance(d, seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(d + 1, d + 5))
    V = rng.normal(size=(n, d))
    P = V / np.linalg.norm(V, axis=1, keepdims=True)
    if np.linalg.matrix_rank(P) < d:
        return
    Q = random_rotation(d, rng)
    a, b = classify_balance(P), classify_balance(P @ Q.T)
    assert a.b == b.b
    assert a.delta == pytest.approx(b.delta, abs=1e-9)
