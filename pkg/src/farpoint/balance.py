"""Balance class of a point set, delta(X) and the min-norm point of conv X.

X is b-balanced when the origin lies in the relative interior of a
b-dimensional face of conv X: b = 0 means the origin is outside the hull,
b = d that it is an interior point.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .geometry import RANK_TOL, PointSet, matrix_rank, require_valid
from .lp import OPTIMAL, linprog_max

WEIGHT_TOL = 1e-10
CERT_TOL = 1e-9


@dataclass
class BalanceReport:
    b: int
    delta: float
    min_norm_point: np.ndarray
    support: tuple

    def to_dict(self) -> dict:
        return {"b": self.b, "delta": self.delta, "support": list(self.support),
                "min_norm_point": [float(x) for x in self.min_norm_point]}


def _points(ps) -> np.ndarray:
    if isinstance(ps, PointSet):
        return ps.float_points()
    return np.asarray(ps, dtype=float)


def dedup(points: np.ndarray, tol: float = 1e-12):
    """Unique rows and, for each kept row, its original index."""
    kept, idx = [], []
    for i, p in enumerate(points):
        if not any(np.max(np.abs(p - q)) <= tol for q in kept):
            kept.append(p)
            idx.append(i)
    return np.array(kept), idx


def min_norm_point(ps, tol: float = 1e-12, max_iter: int = 10000) -> np.ndarray:
    """Point of conv X closest to the origin (Wolfe's algorithm).

    The result satisfies <p, x_j - p> >= -1e-9 for every input point, which
    certifies optimality.
    """
    P = _points(ps)
    n = len(P)
    scale = float(np.max(np.sum(P * P, axis=1)))
    S = [int(np.argmin(np.sum(P * P, axis=1)))]
    lam = np.array([1.0])
    x = P[S[0]].copy()
    for _ in range(max_iter):
        xx = float(x @ x)
        if xx <= 1e-28 * scale:
            return np.zeros(P.shape[1])
        prods = P @ x
        j = int(np.argmin(prods))
        if prods[j] >= xx - tol * scale or j in S:
            break
        S.append(j)
        lam = np.append(lam, 0.0)
        while True:
            Q = P[S]
            k = len(S)
            M = np.zeros((k + 1, k + 1))
            M[:k, :k] = Q @ Q.T
            M[:k, k] = 1.0
            M[k, :k] = 1.0
            rhs = np.zeros(k + 1)
            rhs[k] = 1.0
            mu = np.linalg.lstsq(M, rhs, rcond=None)[0][:k]
            if np.all(mu > tol):
                lam = mu
                x = mu @ Q
                break
            mask = mu <= tol
            theta = min(1.0, float(np.min(lam[mask] / (lam[mask] - mu[mask]))))
            lam = lam + theta * (mu - lam)
            keep = lam > tol
            if not keep.any():
                keep[int(np.argmax(lam))] = True
            S = [s for s, kf in zip(S, keep) if kf]
            lam = lam[keep]
            lam = lam / lam.sum()
            x = lam @ P[S]
    return x


def min_norm_certificate(ps, p: np.ndarray) -> float:
    """min_j <p, x_j - p>; nonnegative (up to rounding) iff p is optimal."""
    P = _points(ps)
    return float(np.min((P - p) @ p))


def support_set(P: np.ndarray, tol: float = WEIGHT_TOL):
    """Indices that carry positive weight in some convex representation of 0.

    Returns None when 0 is not in conv P.
    """
    n, d = P.shape
    A = np.vstack([P.T, np.ones((1, n))])
    b = np.zeros(d + 1)
    b[-1] = 1.0
    support = []
    for i in range(n):
        c = np.zeros(n)
        c[i] = 1.0
        res = linprog_max(c, A, b)
        if res.status != OPTIMAL:
            return None
        if res.value > tol:
            support.append(i)
    return tuple(support)


def facet_distance(P: np.ndarray, tol: float = 1e-10) -> float:
    """Smallest distance from the origin to a facet hyperplane of conv P.

    Brute force over all d-subsets; a subset defines a facet when every
    point lies on one side of its affine hull.  Assumes the origin is
    interior.
    """
    n, d = P.shape
    best = math.inf
    for idx in itertools.combinations(range(n), d):
        base = P[list(idx)]
        diffs = base[1:] - base[0]
        if d > 1:
            _, sv, vt = np.linalg.svd(diffs)
            if len(sv) < d - 1 or sv[-1] <= RANK_TOL * max(sv[0], 1.0):
                continue
            a = vt[-1]
        else:
            a = np.array([1.0])
        beta = float(a @ base[0])
        side = P @ a - beta
        if np.all(side <= tol):
            best = min(best, beta)
        elif np.all(side >= -tol):
            best = min(best, -beta)
    return best


def classify_balance(ps) -> BalanceReport:
    """Balance class b, delta(X), min-norm point and support set.

    delta is -|p*| when b = 0, zero for 1 <= b <= d-1, and the distance
    from the origin to the nearest facet of conv X when b = d.
    """
    if isinstance(ps, PointSet):
        require_valid(ps)
    P0 = _points(ps)
    d = P0.shape[1]
    P, idx = dedup(P0)
    S = support_set(P)
    if not S:
        p = min_norm_point(P)
        return BalanceReport(0, -float(np.linalg.norm(p)), p, ())
    b = matrix_rank(P[list(S)])
    support = tuple(idx[i] for i in S)
    zero = np.zeros(d)
    if b < d:
        return BalanceReport(b, 0.0, zero, support)
    return BalanceReport(d, facet_distance(P), zero, support)


def delta(ps) -> float:
    """delta(X) = -max_{|u|=1} min_x <x, u>."""
    return classify_balance(ps).delta


def seb_equivalence_check(ps, tol: float = 1e-9) -> bool:
    """Whether (SEB(X) is the unit ball about 0) <=> (delta(X) >= 0) holds for X."""
    from .miniball import seb

    ball = seb(_points(ps))
    unit_ball = float(np.linalg.norm(ball.center)) <= tol and abs(ball.radius - 1.0) <= tol
    return unit_ball == (delta(ps) >= -tol)
