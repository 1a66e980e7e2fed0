"""Example point sets: regular simplices, A_{d,m}, B_{d,b}, C_d, random sets.

Also closed-form step counts for the growth constructions, their prescribed
iteration schedules, and replay of those schedules through the
farthest-point rule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .balance import classify_balance
from .geometry import FLOAT, RATIONAL, PointSet, normalize_rows, validate
from .iteration import FLOAT_TIE_TOL, replay_schedule

DEFAULT_PHI = math.pi / 6


class InfeasibleTarget(ValueError):
    """The requested norm cannot be certified with the given parameters."""


def equidistant(l: int) -> np.ndarray:
    """l+1 unit vectors in R^l with all pairwise scalar products -1/l.

    Built recursively: from the simplex one dimension lower, scale by
    cos(alpha), append the coordinate sin(alpha) = -1/l, and add the pole
    (0, ..., 0, 1).
    """
    if l < 1:
        raise ValueError("l must be at least 1")
    pts = np.array([[1.0], [-1.0]])
    for k in range(2, l + 1):
        sin_a = -1.0 / k
        cos_a = math.sqrt(1.0 - sin_a * sin_a)
        pole = np.zeros(k)
        pole[-1] = 1.0
        lower = np.hstack([pts * cos_a, np.full((len(pts), 1), sin_a)])
        pts = np.vstack([pole, lower])
    return pts


def equidistant_gram(l: int) -> list:
    s = Fraction(-1, l)
    return [[Fraction(1) if i == j else s for j in range(l + 1)] for i in range(l + 1)]


def equidistant_set(d: int, mode: str = RATIONAL) -> PointSet:
    """Regular simplex on S^{d-1}; rational mode carries the exact Gram matrix."""
    if d < 2:
        raise ValueError("d must be at least 2")
    pts = equidistant(d)
    gram = equidistant_gram(d) if mode == RATIONAL else None
    return PointSet(pts, mode, gram=gram, meta={"family": "equidistant", "d": d})


def family_A(d: int, m: int, mode: str = RATIONAL) -> PointSet:
    """A_{d,m} = {e_1, ..., e_d, -e_1, ..., -e_m}; m-balanced."""
    if not 1 <= m <= d:
        raise ValueError(f"need 1 <= m <= d, got d={d}, m={m}")
    eye = np.eye(d, dtype=int)
    pts = [list(r) for r in eye] + [list(-eye[i]) for i in range(m)]
    labels = [f"e{i + 1}" for i in range(d)] + [f"-e{i + 1}" for i in range(m)]
    return PointSet(pts, mode, labels=labels, meta={"family": "A", "d": d, "m": m})


def a_schedule(d: int, m: int) -> list:
    """Indices of e_{m+1}, ..., e_d followed by -e_1 (legal for A_{d,m})."""
    return list(range(m, d)) + [d]


def b_sigma(c: int, epsilon: float) -> float:
    return 1.0 - c / (c - 1) * math.cos(epsilon) ** 2


def b_epsilon_range(c: int):
    """Open epsilon interval on which -1/(c-1) < sigma < 0."""
    lo = 0.0
    hi = math.acos(math.sqrt((c - 1) / c))
    return lo, hi


def family_B(d: int, b: int, epsilon: float, phi: float = DEFAULT_PHI, x0: str = "unit") -> PointSet:
    """B_{d,b}(epsilon, phi), n = d + 2 points, b-balanced.

    Layout: x0, x1..xc (c = d - b, tilted simplex in the first c
    coordinates with v = e_c) and b+1 simplex points in the last b
    coordinates.  ``x0="literal"`` keeps -cos(phi) x1 + sin(phi) v as
    written, which has norm slightly below one; the default rescales it
    onto the sphere.
    """
    if d < 3 or not 1 <= b <= d - 2:
        raise ValueError(f"need d >= 3 and 1 <= b <= d-2, got d={d}, b={b}")
    if not 0 < phi < math.pi / 2:
        raise ValueError("phi must lie in (0, pi/2)")
    c = d - b
    sigma = b_sigma(c, epsilon)
    lo, hi = b_epsilon_range(c)
    if not (epsilon > 0 and -1.0 / (c - 1) < sigma < 0):
        raise ValueError(f"epsilon={epsilon} outside the admissible range ({lo}, {hi:.17g}) where -1/(c-1) < sigma < 0")
    X = np.zeros((d + 2, d))
    v = np.zeros(d)
    v[c - 1] = 1.0
    bar = equidistant(c - 1)
    X[1:c + 1, :c - 1] = math.cos(epsilon) * bar
    X[1:c + 1, c - 1] = math.sin(epsilon)
    x_0 = -math.cos(phi) * X[1] + math.sin(phi) * v
    if x0 == "unit":
        x_0 = x_0 / np.linalg.norm(x_0)
    elif x0 != "literal":
        raise ValueError("x0 must be 'unit' or 'literal'")
    X[0] = x_0
    X[c + 1:, c:] = equidistant(b)
    labels = [f"x{i}" for i in range(d + 2)]
    return PointSet(X, FLOAT, labels=labels,
                    meta={"family": "B", "d": d, "b": b, "c": c, "epsilon": epsilon, "phi": phi, "sigma": sigma, "x0": x0})


def b_schedule(c: int, k: int, m: int = 0) -> list:
    """x0, then k full rounds x1..xc, then x1..xm; ends at x0 + k(x1 + ... + xc) + (x1 + ... + xm)."""
    return [0] + list(range(1, c + 1)) * k + list(range(1, m + 1))


def b_max_feasible_i(d: int, b: int, epsilon: float, phi: float = DEFAULT_PHI):
    """Closed-form ceilings on the round index i from conditions (a), j = 0 and j = c-1."""
    c = d - b
    s2 = math.sin(epsilon) ** 2
    sigma = b_sigma(c, epsilon)
    i_a1 = (math.cos(phi) - math.sin(phi) * math.sin(epsilon)) / (c * s2)
    i_a2 = (sigma * (math.cos(phi) - (c - 1)) - math.sin(phi) * math.sin(epsilon)) / (c * s2)
    return i_a1, i_a2


def b_m_bounds(d: int, b: int, epsilon: float, phi: float = DEFAULT_PHI):
    """Largest squared norm M certified by each pairing of (a) with the step bound."""
    c = d - b
    s2 = math.sin(epsilon) ** 2
    sigma = b_sigma(c, epsilon)
    m1 = math.cos(phi) ** 2 * (1 + 1 / s2)
    m2 = sigma**2 * (math.cos(phi) - (c - 1)) ** 2 / s2 + math.cos(phi) ** 2
    return m1, m2


def b_round_ceilings(d: int, b: int, epsilon: float, phi: float = DEFAULT_PHI) -> list:
    """Ceiling on the round index i from condition (a) for every j = 0..c-1.

    For j >= 1 the condition reads i c sin^2(eps) <= sigma (cos(phi) - j) - sin(phi) sin(eps).
    Since sigma < 0 it is tightest at j = 1, not at j = c - 1; the two
    coincide only for c = 2.
    """
    c = d - b
    s2 = math.sin(epsilon) ** 2
    sigma = b_sigma(c, epsilon)
    tail = math.sin(phi) * math.sin(epsilon)
    out = [(math.cos(phi) - tail) / (c * s2)]
    out += [(sigma * (math.cos(phi) - j) - tail) / (c * s2) for j in range(1, c)]
    return out


def b_certified_m(d: int, b: int, epsilon: float, phi: float = DEFAULT_PHI) -> float:
    """Largest M reachable under every condition (a), j = 0..c-1."""
    c = d - b
    s2 = math.sin(epsilon) ** 2
    sigma = b_sigma(c, epsilon)
    cos2 = math.cos(phi) ** 2
    bounds = [cos2 * (1 + 1 / s2)]
    bounds += [sigma**2 * (math.cos(phi) - j) ** 2 / s2 + cos2 for j in range(1, c)]
    return min(bounds)


def b_steps_for_target(d: int, b: int, epsilon: float, phi: float, M: float) -> int:
    """Smallest k with |u_{(k+1)c+1}|^2 >= M along the prescribed schedule.

    Raises InfeasibleTarget when M exceeds the bound certified by
    condition (a) for any j.
    """
    if M <= 1:
        return 0
    c = d - b
    cert = b_certified_m(d, b, epsilon, phi)
    if M > cert:
        raise InfeasibleTarget(f"M={M} exceeds the certified bound {cert:.6g} at epsilon={epsilon}")
    s = math.sin(phi)
    k = (math.sqrt(s * s - 1 + M) - s) / (c * math.sin(epsilon))
    return max(0, math.ceil(k - 1e-12))


def b_epsilon_for_target(d: int, b: int, M: float, phi: float = DEFAULT_PHI) -> float:
    """Largest epsilon whose certified M-bound reaches M."""
    top = b_epsilon_range(d - b)[1] * (1 - 1e-9)
    return _largest_feasible(lambda e: b_certified_m(d, b, e, phi) - M, 0.0, top)


def family_C(d: int, epsilon: float, mu: float, phi: float = DEFAULT_PHI) -> PointSet:
    """C_d(epsilon, mu, phi): x0, x1..xd (tilted simplex), x_{d+1}; n = d + 2.

    d-balanced for epsilon > 0, (d-1)-balanced for epsilon = 0.
    """
    if d < 3:
        raise ValueError("d must be at least 3")
    if epsilon < 0 or mu <= epsilon or not 0 < phi < math.pi / 2:
        raise ValueError("need mu > epsilon >= 0 and 0 < phi < pi/2")
    X = np.zeros((d + 2, d))
    bar = equidistant(d - 1)
    X[1:d + 1, :d - 1] = math.cos(epsilon) * bar
    X[1:d + 1, d - 1] = -math.sin(epsilon)
    X[d + 1, :d - 1] = -math.cos(mu) * bar[0]
    X[d + 1, d - 1] = math.sin(mu)
    X[0, :d - 1] = math.cos(phi) * bar[0]
    X[0, d - 1] = math.sin(phi)
    labels = [f"x{i}" for i in range(d + 2)]
    return PointSet(X, FLOAT, labels=labels,
                    meta={"family": "C", "d": d, "epsilon": epsilon, "mu": mu, "phi": phi})


def c_schedule(d: int, k: int) -> list:
    """x0 followed by k pairs (x_{d+1}, x1); ends at u_{2k+1} = x0 + k(x1 + x_{d+1})."""
    return [0] + [d + 1, 1] * k


def c_max_feasible_i(d: int, epsilon: float, mu: float, phi: float = DEFAULT_PHI) -> float:
    return (math.cos(phi) - math.cos(epsilon)) / (math.cos(mu) - math.cos(epsilon))


def c_m_bound(epsilon: float, mu: float, phi: float = DEFAULT_PHI) -> float:
    h = (mu + epsilon) / 2
    gap = math.cos(epsilon) - math.cos(phi)
    return gap**2 / math.sin(h) ** 2 + 2 * gap * math.sin(phi + h) / math.sin(h) + 1


def c_steps_for_target(d: int, epsilon: float, mu: float, phi: float, M: float) -> int:
    """Smallest k with |u_{2k+1}|^2 >= M; InfeasibleTarget if k exceeds the (c) ceiling."""
    if M <= 1:
        return 0
    h = (mu + epsilon) / 2
    s = math.sin(phi + h)
    k = math.ceil((math.sqrt(s * s + M - 1) - s) / (2 * math.sin((mu - epsilon) / 2)) - 1e-12)
    if k > math.floor(c_max_feasible_i(d, epsilon, mu, phi) + 1e-12):
        raise InfeasibleTarget(f"need k={k} pairs but condition (c) allows {c_max_feasible_i(d, epsilon, mu, phi):.6g}")
    return max(0, k)


def c_mu_for_target(M: float, phi: float = DEFAULT_PHI, epsilon: float = 0.0) -> float:
    """Largest mu at which the final M-bound for C_d(epsilon, mu, phi) still reaches M."""
    return _largest_feasible(lambda mu: c_m_bound(epsilon, mu, phi) - M, epsilon, math.pi / 2)


def c_epsilon_for_target(M: float, phi: float = DEFAULT_PHI, ratio: float = 3.0) -> float:
    """Largest epsilon at which the M-bound for C_d(epsilon, ratio*epsilon, phi) reaches M."""
    return _largest_feasible(lambda e: c_m_bound(e, ratio * e, phi) - M, 0.0, 0.99 * math.pi / (2 * ratio))


def _largest_feasible(f, floor: float, top: float) -> float:
    """Largest x in (floor, top] with f(x) >= 0, for f decreasing away from ``floor``."""
    if f(top) >= 0:
        return top
    hi, lo = top, floor + (top - floor) / 2
    while f(lo) < 0:
        hi, lo = lo, floor + (lo - floor) / 2
        if lo - floor < 1e-14:
            raise InfeasibleTarget("target norm not reachable for any parameter value")
    return brentq(f, lo, hi, xtol=1e-16, rtol=1e-15)


@dataclass
class ScheduleReport:
    ok: bool
    first_violation: Optional[int]
    condition: Optional[str]
    prescribed: Optional[str]
    preferred: list
    steps_done: int
    max_norm: float
    final_norm: float

    def to_dict(self) -> dict:
        return {"ok": self.ok, "first_violation": self.first_violation, "condition": self.condition,
                "prescribed": self.prescribed, "preferred": self.preferred,
                "steps_done": self.steps_done, "max_norm": self.max_norm, "final_norm": self.final_norm}


def _violated_condition(ps: PointSet, prescribed: int, preferred: Sequence[int]) -> Optional[str]:
    fam = ps.meta.get("family")
    if fam == "B":
        c = ps.meta["c"]
        if 0 in preferred:
            return "c"
        if any(j > c for j in preferred):
            return "a"
        return "b"
    if fam == "C":
        d = ps.meta["d"]
        if 0 in preferred:
            return "a"
        if prescribed in (1, d + 1) and ({1, d + 1} & set(preferred)):
            return "b"
        return "c"
    return None


def verify_prescribed_schedule(ps: PointSet, schedule: Sequence[int], tie_tol: float = FLOAT_TIE_TOL) -> ScheduleReport:
    """Replay a schedule and report the first step where it is not a legal choice.

    For B and C sets the report names the violated construction condition:
    B: (a) the chosen point has positive scalar product, so a b-block point
    wins; (b) another of x1..xc wins; (c) x0 wins.  C: (a) x0 wins; (b)
    x1 and x_{d+1} swap; (c) one of x2..xd wins.
    """
    if len(schedule) < 1:
        raise ValueError("schedule must contain at least one step")
    rep = replay_schedule(ps, schedule, tie_tol)
    if rep.ok:
        return ScheduleReport(True, None, None, None, [], rep.steps_done, rep.max_norm, rep.final_norm)
    preferred = list(rep.ties)
    return ScheduleReport(False, rep.first_violation, _violated_condition(ps, rep.prescribed, preferred),
                          ps.label(rep.prescribed), [ps.label(j) for j in preferred],
                          rep.steps_done, rep.max_norm, rep.final_norm)


def random_sphere_points(d: int, n: int, rng) -> np.ndarray:
    return normalize_rows(rng.normal(size=(n, d)))


def random_balanced(d: int, n: int, seed=None, max_tries: int = 10000) -> PointSet:
    """Uniform random points on S^{d-1}, resampled until the set is balanced."""
    if n < d + 1:
        raise ValueError("a balanced set needs at least d + 1 points")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        ps = PointSet(random_sphere_points(d, n, rng))
        if validate(ps).ok and classify_balance(ps).b == d:
            return ps
    raise RuntimeError(f"no balanced sample after {max_tries} tries")


@dataclass
class Perturbed:
    points: PointSet
    b: int


def perturb(ps: PointSet, magnitude: float, seed=None) -> Perturbed:
    """Add Gaussian noise of the given magnitude and project back onto the sphere."""
    if magnitude == 0:
        return Perturbed(ps, classify_balance(ps).b)
    rng = np.random.default_rng(seed)
    X = normalize_rows(ps.float_points() + magnitude * rng.normal(size=(ps.n, ps.d)))
    out = PointSet(X, labels=ps.labels)
    return Perturbed(out, classify_balance(out).b)


def nudge_away(ps: PointSet, i: int, j: int, angle: float) -> PointSet:
    """Rotate x_i by ``angle`` away from x_j inside the plane they span."""
    X = ps.float_points().copy()
    xi, xj = X[i], X[j]
    w = xj - (xi @ xj) * xi
    w /= np.linalg.norm(w)
    X[i] = math.cos(angle) * xi - math.sin(angle) * w
    return PointSet(X, labels=ps.labels)


@dataclass
class GrowthResult:
    family: str
    params: dict
    target: float
    achieved: float
    steps: int
    report: ScheduleReport
    closed_form_param: float
    attempts: int

    @property
    def ok(self) -> bool:
        return self.report.ok and self.achieved >= self.target

    def to_dict(self) -> dict:
        return {"family": self.family, "params": self.params, "target": self.target,
                "achieved": self.achieved, "steps": self.steps, "ok": self.ok,
                "closed_form_param": self.closed_form_param, "attempts": self.attempts,
                "schedule": self.report.to_dict()}


def growth_demo(family: str, d: int = 3, M: float = 25.0, b: int = 1, phi: float = DEFAULT_PHI,
                variant: str = "mu", shrink: float = 0.995, max_attempts: int = 400) -> GrowthResult:
    """Build a B or C set whose prescribed schedule reaches |u| >= sqrt(M).

    The free parameter (epsilon for B and for C with mu = 3 epsilon, mu for
    C with epsilon = 0) starts at the closed-form value where the M-bound
    equals M.  The closed forms are first-order in the parameter, so it is
    shrunk geometrically until replaying the schedule through the
    farthest-point rule certifies the target.
    """
    target = math.sqrt(M)
    if family == "B":
        param0 = b_epsilon_for_target(d, b, M, phi)
    elif family == "C" and variant == "mu":
        param0 = c_mu_for_target(M, phi, 0.0)
    elif family == "C" and variant == "eps":
        param0 = c_epsilon_for_target(M, phi, 3.0)
    else:
        raise ValueError(f"unknown growth family/variant {family!r}/{variant!r}")
    param = param0
    last = None
    for attempt in range(1, max_attempts + 1):
        try:
            if family == "B":
                ps = family_B(d, b, param, phi)
                k = b_steps_for_target(d, b, param, phi, M)
                sched = b_schedule(d - b, k)
                params = {"d": d, "b": b, "epsilon": param, "phi": phi, "k": k}
            elif variant == "mu":
                ps = family_C(d, 0.0, param, phi)
                k = c_steps_for_target(d, 0.0, param, phi, M)
                sched = c_schedule(d, k)
                params = {"d": d, "epsilon": 0.0, "mu": param, "phi": phi, "k": k}
            else:
                ps = family_C(d, param, 3 * param, phi)
                k = c_steps_for_target(d, param, 3 * param, phi, M)
                sched = c_schedule(d, k)
                params = {"d": d, "epsilon": param, "mu": 3 * param, "phi": phi, "k": k}
        except InfeasibleTarget:
            param *= shrink
            continue
        rep = verify_prescribed_schedule(ps, sched)
        last = GrowthResult(family, params, target, rep.max_norm, len(sched), rep, param0, attempt)
        if last.ok:
            return last
        param *= shrink
    if last is None:
        raise InfeasibleTarget(f"no feasible parameter found for M={M}")
    return last
