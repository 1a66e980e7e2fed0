"""Smallest enclosing ball and the Badoiu-Clarkson center approximation.

    c_0 = 0,   c_{i+1} = c_i + (xi_i - c_i) / (i + 1)

with xi_i a point farthest from c_i.  After normalising the input by its
smallest enclosing ball (center c, radius R) the approximation is tied to
the farthest-point iteration on the normalised set through
R u_i = i (c_i - c).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .balance import min_norm_point
from .geometry import PointSet
from .iteration import FLOAT_TIE_TOL, GREEDY, LOWEST, POLICIES, RANDOM

ENCLOSE_TOL = 1e-9
BOUNDARY_TOL = 1e-9


class DegenerateInput(ValueError):
    pass


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float
    support: tuple = ()

    def contains(self, y, tol: float = ENCLOSE_TOL) -> bool:
        return float(np.linalg.norm(np.asarray(y, dtype=float) - self.center)) <= self.radius + tol


def circumball(points: np.ndarray):
    """Smallest ball with all ``points`` on its boundary (center in their affine hull).

    Returns None for affinely dependent input.
    """
    p0 = points[0]
    if len(points) == 1:
        return p0.copy(), 0.0
    A = points[1:] - p0
    G = A @ A.T
    rhs = 0.5 * np.sum(A * A, axis=1)
    try:
        lam = np.linalg.solve(G, rhs)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(lam)) or np.linalg.cond(G) > 1e12:
        return None
    c = p0 + lam @ A
    return c, float(np.linalg.norm(points[0] - c))


def _welzl(P: np.ndarray, order: list, n: int, support: list, d: int):
    # move-to-front variant; recursion depth bounded by d + 1
    ball = circumball(P[support]) if support else None
    if ball is None:
        ball = (P[order[0]].copy(), 0.0) if not support else (P[support[0]].copy(), 0.0)
    c, r = ball
    if len(support) == d + 1:
        return c, r, list(support)
    best_support = list(support)
    i = 0
    while i < n:
        k = order[i]
        if np.linalg.norm(P[k] - c) > r * (1 + 1e-12) + 1e-12:
            c, r, best_support = _welzl(P, order, i, support + [k], d)
            order.insert(0, order.pop(i))
        i += 1
    return c, r, best_support


def seb(points, seed: int = 0, restarts: int = 3) -> Ball:
    """Smallest enclosing ball of a finite point set.

    Parameters
    ----------
    points : (n, d) array-like, n >= 2
    seed : int
        Seed of the random input permutation.
    restarts : int
        Extra attempts with fresh permutations if the verification pass
        (enclosure and boundary witness) fails.

    Raises
    ------
    DegenerateInput
        Fewer than two points, or all points equal.
    """
    P0 = np.asarray(points.float_points() if isinstance(points, PointSet) else points, dtype=float)
    if len(P0) < 2:
        raise DegenerateInput("smallest enclosing ball needs at least two points")
    P, _ = _unique(P0)
    if len(P) < 2:
        raise DegenerateInput("all points coincide")
    d = P.shape[1]
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts + 1):
        order = list(rng.permutation(len(P)))
        c, r, sup = _welzl(P, order, len(P), [], d)
        dist = np.linalg.norm(P - c, axis=1)
        r = float(max(r, dist.max()))
        ball = Ball(c, r, tuple(int(s) for s in sup))
        if _verified(P, ball):
            return ball
        if best is None or ball.radius < best.radius:
            best = ball
    return best


def _unique(P: np.ndarray):
    uniq, idx = np.unique(np.round(P, 14), axis=0, return_index=True)
    idx = np.sort(idx)
    return P[idx], idx


def _verified(P: np.ndarray, ball: Ball) -> bool:
    dist = np.linalg.norm(P - ball.center, axis=1)
    if np.any(dist > ball.radius + ENCLOSE_TOL):
        return False
    witness = P[list(ball.support)] if ball.support else P[dist >= ball.radius - BOUNDARY_TOL]
    wb = circumball(witness) if len(witness) >= 2 else None
    if wb is None:
        return False
    if np.linalg.norm(wb[0] - ball.center) > 1e-7 or abs(wb[1] - ball.radius) > 1e-7:
        return False
    # minimality: the center lies in conv(witness)
    p = min_norm_point(witness - ball.center)
    return float(np.linalg.norm(p)) <= 1e-7 * max(1.0, ball.radius)


def seb_bruteforce(points) -> Ball:
    """Oracle: smallest enclosing circumball over all subsets of size <= d+1."""
    P, _ = _unique(np.asarray(points, dtype=float))
    d = P.shape[1]
    best = None
    for k in range(2, min(d + 1, len(P)) + 1):
        for idx in itertools.combinations(range(len(P)), k):
            cb = circumball(P[list(idx)])
            if cb is None:
                continue
            c, r = cb
            if np.all(np.linalg.norm(P - c, axis=1) <= r + ENCLOSE_TOL):
                if best is None or r < best.radius:
                    best = Ball(c, r, idx)
    return best


@dataclass
class Normalized:
    points: np.ndarray
    ball: Ball
    boundary: tuple

    def point_set(self) -> PointSet:
        return PointSet(self.points)


def normalize(points, seed: int = 0) -> Normalized:
    """Map y -> (y - c) / R and identify the points on the SEB boundary."""
    P = np.asarray(points.float_points() if isinstance(points, PointSet) else points, dtype=float)
    ball = seb(P, seed)
    Xt = (P - ball.center) / ball.radius
    nrm = np.linalg.norm(Xt, axis=1)
    boundary = tuple(int(i) for i in np.flatnonzero(nrm >= 1 - BOUNDARY_TOL))
    return Normalized(Xt, ball, boundary)


@dataclass
class ApproxTrace:
    centers: list
    chosen: list
    errors: list
    ball: Ball
    points: np.ndarray
    ties: list = field(default_factory=list)
    residuals: Optional[list] = None

    @property
    def n_steps(self) -> int:
        return len(self.chosen)

    def csv_rows(self, ustar: Optional[float] = None):
        for i in range(1, len(self.centers)):
            yield [i, self.errors[i], 1 / math.sqrt(i), None if ustar is None else ustar / i,
                   None if self.residuals is None else self.residuals[i]]


def bc_approximate(points, steps: int, policy: str = LOWEST, seed=None,
                   tie_tol: float = FLOAT_TIE_TOL, ball: Optional[Ball] = None) -> ApproxTrace:
    """Run ``steps`` Badoiu-Clarkson updates from c_0 = 0.

    ``err_i = |c - c_i| / R`` is recorded against the exact ball.  Ties for
    the farthest point are broken by ``policy``; ``greedy`` picks the tie
    that moves c_{i+1} farthest from the true center.

    A squared-distance gap g at step i corresponds to a scalar-product gap
    i g / (2 R^2) in the normalised iteration, so ties are taken within
    2 R^2 tie_tol / i.  This keeps the tie sets of both recurrences equal.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown tie policy {policy!r}")
    P = np.asarray(points.float_points() if isinstance(points, PointSet) else points, dtype=float)
    if len(P) < 2:
        raise DegenerateInput("need at least two points")
    ball = ball or seb(P)
    rng = np.random.default_rng(seed)
    c = np.zeros(P.shape[1])
    centers, chosen, ties_log = [c], [], []
    errors = [float(np.linalg.norm(ball.center - c)) / ball.radius]
    sq = np.sum(P * P, axis=1)
    for i in range(steps):
        # |y - c|^2 up to the constant |c|^2
        far = sq - 2.0 * (P @ c)
        m = far.max()
        ties = np.flatnonzero(far >= m - 2.0 * ball.radius ** 2 * tie_tol / max(i, 1))
        if len(ties) == 1 or policy == LOWEST:
            j = int(ties[0])
        elif policy == RANDOM:
            j = int(ties[rng.integers(len(ties))])
        else:
            cand = [c + (P[t] - c) / (i + 1) for t in ties]
            j = int(ties[int(np.argmax([np.linalg.norm(x - ball.center) for x in cand]))])
        c = c + (P[j] - c) / (i + 1)
        centers.append(c)
        chosen.append(j)
        ties_log.append(tuple(int(t) for t in ties))
        errors.append(float(np.linalg.norm(ball.center - c)) / ball.radius)
    return ApproxTrace(centers, chosen, errors, ball, P, ties_log)


@dataclass
class RelationReport:
    max_residual: float
    residuals: list
    divergence: Optional[int]


def relation_check(trace: ApproxTrace, ball: Optional[Ball] = None,
                   tie_tol: float = FLOAT_TIE_TOL) -> RelationReport:
    """Compare R u_i with i (c_i - c) along a synchronised pair of runs.

    The farthest-point iteration runs on the normalised set, taking the BC
    choice xi_i whenever it is a legal farthest point for u_i.  ``divergence``
    is the first index where it is not (None if the runs stay in step).
    Residuals are reported up to that index.
    """
    ball = ball or trace.ball
    Xt = (trace.points - ball.center) / ball.radius
    u = np.zeros(Xt.shape[1])
    residuals = [0.0]
    divergence = None
    for i, j in enumerate(trace.chosen):
        s = Xt @ u
        if s[j] > s.min() + tie_tol:
            divergence = i
            break
        u = u + Xt[j]
        lhs = ball.radius * u
        rhs = (i + 1) * (trace.centers[i + 1] - ball.center)
        residuals.append(float(np.linalg.norm(lhs - rhs)))
    trace.residuals = residuals
    return RelationReport(max(residuals), residuals, divergence)


def interior_absorption_index(points, trace: ApproxTrace, boundary: Optional[Sequence[int]] = None):
    """Smallest i0 after which every chosen xi_i lies on the SEB boundary.

    Returns ``"not yet"`` if the last recorded choice was an interior point.
    """
    if boundary is None:
        boundary = normalize(points).boundary
    on = set(boundary)
    last_interior = None
    for i, j in enumerate(trace.chosen):
        if j not in on:
            last_interior = i
    if last_interior is None:
        return 0
    if last_interior == len(trace.chosen) - 1:
        return "not yet"
    return last_interior + 1
