"""Planar proof apparatus: base-gap frame, the regions T, R, Q, P, U and audits.

In the base-gap frame the points are numbered counterclockwise from
x_1 at angle 2pi - phi to x_n at angle pi + phi, so the point-free base gap
(pi + phi, 2pi - phi) of size pi - 2phi is symmetric about the downward
axis.  All region predicates take coordinates in that frame.

Every predicate accepts a ``grow`` slack: a positive value enlarges each
named set by that much (P, being a set difference, is enlarged by
shrinking R and Q).  Audits test antecedents with ``-slack`` and
consequents with ``+slack`` so that float noise on shared boundaries
cannot produce spurious violations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .geometry import FLOAT, TWO_PI, PointSet, require_valid, rotation2
from .iteration import FLOAT_TIE_TOL, POLICIES, max_norm_fast

SQRT2 = math.sqrt(2.0)
AUDIT_SLACK = 1e-9
GAP_TIE_TOL = 1e-12
TAGS = ("T", "R", "Q", "P", "P+", "P-", "TnP+", "T1P-", "U")


class HypothesisNotMet(ValueError):
    """The audited statement does not apply to this input."""


@dataclass(frozen=True)
class BaseGapFrame:
    """Rotation and renumbering that put the base gap at (pi + phi, 2pi - phi).

    ``permutation[k]`` is the original index of frame point x_{k+1}.
    """

    phi: float
    rotation: float
    permutation: tuple
    gap: float

    @property
    def matrix(self) -> np.ndarray:
        return rotation2(self.rotation)

    def to_frame(self, v) -> np.ndarray:
        """Rotate vectors (shape (2,) or (N, 2)) into the frame."""
        return np.asarray(v, dtype=float) @ self.matrix.T

    def frame_points(self, ps) -> np.ndarray:
        P = ps.float_points() if isinstance(ps, PointSet) else np.asarray(ps, dtype=float)
        return self.to_frame(P[list(self.permutation)])


def _angles(P: np.ndarray) -> np.ndarray:
    return np.mod(np.arctan2(P[:, 1], P[:, 0]), TWO_PI)


def angular_gaps(P: np.ndarray):
    """Counterclockwise order of the points and the gap following each one.

    Returns ``(order, start_angles, gaps)``; gap k runs from point
    ``order[k]`` to ``order[k+1]`` (cyclically).
    """
    theta = _angles(P)
    order = np.argsort(theta, kind="stable")
    th = theta[order]
    gaps = np.diff(np.append(th, th[0] + TWO_PI))
    return order, th, gaps


def base_gap_frame(ps, gap_choice: Union[str, int] = "largest") -> BaseGapFrame:
    """Base-gap parametrization of a planar set that is not 0-balanced.

    ``gap_choice`` is ``"largest"`` or the position k of a gap in
    counterclockwise order (the gap after the k-th point).  Among equally
    large gaps the one starting at the smallest angle wins.

    Raises
    ------
    HypothesisNotMet
        The chosen gap exceeds pi, i.e. the set is 0-balanced and phi
        would leave [0, pi/2).
    """
    if isinstance(ps, PointSet):
        require_valid(ps)
        P = ps.float_points()
    else:
        P = np.asarray(ps, dtype=float)
    if P.ndim != 2 or P.shape[1] != 2:
        raise ValueError("base-gap frame needs planar points")
    order, th, gaps = angular_gaps(P)
    if gap_choice == "largest":
        k = int(np.flatnonzero(gaps >= gaps.max() - GAP_TIE_TOL)[0])
    else:
        k = int(gap_choice)
        if not 0 <= k < len(gaps):
            raise IndexError(f"gap index {k} out of range for {len(gaps)} gaps")
    gap = float(gaps[k])
    if gap > math.pi + GAP_TIE_TOL:
        raise HypothesisNotMet(f"gap {gap:.17g} exceeds pi: the set is 0-balanced")
    phi = max(0.0, (math.pi - gap) / 2)
    rotation = float(np.mod(math.pi + phi - th[k], TWO_PI))
    n = len(order)
    # x_1 follows the gap, x_n precedes it
    perm = tuple(int(order[(k + 1 + t) % n]) for t in range(n))
    return BaseGapFrame(phi, rotation, perm, gap)


def large_gap_frames(ps, threshold: float = 2 * math.pi / 3) -> list:
    """One frame for each gap larger than ``threshold`` (at most two when above 2pi/3)."""
    P = ps.float_points() if isinstance(ps, PointSet) else np.asarray(ps, dtype=float)
    _, _, gaps = angular_gaps(P)
    return [base_gap_frame(P, int(k)) for k in np.flatnonzero(gaps > threshold)]


@dataclass(frozen=True)
class RegionSpec:
    phi: float

    @property
    def phibar(self) -> float:
        return math.pi / 6 - self.phi

    @property
    def lambda_min(self) -> float:
        return math.sqrt(3) / (2 * math.cos(self.phi))

    @property
    def x1(self) -> np.ndarray:
        return np.array([math.cos(self.phi), -math.sin(self.phi)])

    @property
    def xn(self) -> np.ndarray:
        return np.array([-math.cos(self.phi), -math.sin(self.phi)])


def _as2(u) -> np.ndarray:
    return np.atleast_2d(np.asarray(u, dtype=float))


def _arg(U: np.ndarray) -> np.ndarray:
    return np.mod(np.arctan2(U[:, 1], U[:, 0]), TWO_PI)


def in_T(spec: RegionSpec, u, grow: float = 0.0) -> np.ndarray:
    """r in (1, sqrt 2] and angle in (pi/2 - phibar, pi/2 + phibar)."""
    U = _as2(u)
    r = np.hypot(U[:, 0], U[:, 1])
    ang = _arg(U)
    w = spec.phibar + grow
    return (r > 1 - grow) & (r <= SQRT2 + grow) & (np.abs(ang - math.pi / 2) < w)


def in_R(spec: RegionSpec, u, grow: float = 0.0) -> np.ndarray:
    """r > 0 and angle in the open arc (pi - phi, 2pi + phi)."""
    U = _as2(u)
    r = np.hypot(U[:, 0], U[:, 1])
    # distance of the angle from 3pi/2, measured on the circle
    off = np.abs(np.mod(_arg(U) - 1.5 * math.pi + math.pi, TWO_PI) - math.pi)
    return (r > 0) & (off < math.pi / 2 + spec.phi + grow)


def in_Q(spec: RegionSpec, u, grow: float = 0.0) -> np.ndarray:
    """|a| tan(phi) <= b <= |a| tan(phi) + lambda_min (closed)."""
    U = _as2(u)
    base = np.abs(U[:, 0]) * math.tan(spec.phi)
    return (U[:, 1] >= base - grow) & (U[:, 1] <= base + spec.lambda_min + grow)


def in_disk(u, grow: float = 0.0) -> np.ndarray:
    U = _as2(u)
    return np.hypot(U[:, 0], U[:, 1]) <= 1 + grow


def in_P(spec: RegionSpec, u, grow: float = 0.0) -> np.ndarray:
    return in_disk(u, grow) & ~in_R(spec, u, -grow) & ~in_Q(spec, u, -grow)


def in_P_plus(spec: RegionSpec, u, grow: float = 0.0) -> np.ndarray:
    return in_P(spec, u, grow) & (_as2(u)[:, 0] >= -grow)


def in_P_minus(spec: RegionSpec, u, grow: float = 0.0) -> np.ndarray:
    return in_P(spec, u, grow) & (_as2(u)[:, 0] <= grow)


def in_TnP_plus(spec: RegionSpec, u, grow: float = 0.0) -> np.ndarray:
    """u lies in P+ translated by x_n."""
    return in_P_plus(spec, _as2(u) - spec.xn, grow)


def in_T1P_minus(spec: RegionSpec, u, grow: float = 0.0) -> np.ndarray:
    """u lies in P- translated by x_1."""
    return in_P_minus(spec, _as2(u) - spec.x1, grow)


def in_PQR(spec: RegionSpec, u, grow: float = 0.0) -> np.ndarray:
    return in_P(spec, u, grow) | in_Q(spec, u, grow) | in_R(spec, u, grow)


def in_U(spec: RegionSpec, u, grow: float = 0.0) -> np.ndarray:
    """U = P, P+ + x_n, P- + x_1, Q and R combined."""
    return (in_PQR(spec, u, grow) | in_TnP_plus(spec, u, grow) | in_T1P_minus(spec, u, grow))


_PREDICATES = {
    "T": in_T, "R": in_R, "Q": in_Q, "P": in_P, "P+": in_P_plus, "P-": in_P_minus,
    "TnP+": in_TnP_plus, "T1P-": in_T1P_minus, "U": in_U,
}


def region_membership(spec: RegionSpec, u, grow: float = 0.0) -> frozenset:
    """Tags of every region containing the frame vector ``u``.

    Tags are ``T, R, Q, P, P+, P-, U`` plus ``TnP+`` and ``T1P-`` for the
    two translated pieces of U.  Boundary points can carry several tags.
    The origin lies in Q.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (2,):
        raise ValueError("region membership takes a single planar vector")
    return frozenset(tag for tag, pred in _PREDICATES.items() if pred(spec, u, grow)[0])


@dataclass
class Violation:
    set_id: int
    step: int
    kind: str
    u: list

    def to_dict(self) -> dict:
        return {"set": self.set_id, "step": self.step, "kind": self.kind, "u": self.u}


@dataclass
class AuditReport:
    audit: str
    params: dict
    samples: int
    violations: list = field(default_factory=list)
    max_norm: Optional[float] = None
    witness: Optional[int] = None

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"audit": self.audit, "params": self.params, "samples": self.samples,
                "violations": [v.to_dict() for v in self.violations],
                "max_norm": self.max_norm, "witness": self.witness, "ok": self.ok}


# transition claims: antecedent -> consequent
_CLAIMS = (
    ("a", in_Q, lambda s, u, g: in_Q(s, u, g) | in_R(s, u, g)),
    ("b", in_P, lambda s, u, g: in_TnP_plus(s, u, g) | in_T1P_minus(s, u, g)),
    ("c", in_R, in_PQR),
    ("d", in_TnP_plus, in_PQR),
    ("e", in_T1P_minus, in_PQR),
)


def audit_frame_trace(frame: BaseGapFrame, us: np.ndarray, set_id: int = 0,
                      slack: float = AUDIT_SLACK) -> list:
    """Membership and transition violations of one trace in one frame."""
    spec = RegionSpec(frame.phi)
    F = frame.to_frame(us)
    out = []
    for j in np.flatnonzero(~in_U(spec, F, slack)):
        out.append(Violation(set_id, int(j), "U", F[j].tolist()))
    cur, nxt = F[:-1], F[1:]
    for name, ante, cons in _CLAIMS:
        bad = ante(spec, cur, -slack) & ~cons(spec, nxt, slack)
        for j in np.flatnonzero(bad):
            out.append(Violation(set_id, int(j), f"claim-{name}", F[j + 1].tolist()))
    return out


def lemma_membership_audit(ps, trace, set_id: int = 0, slack: float = AUDIT_SLACK) -> list:
    """Check u_j in U and the step claims (a)-(e) along a trace.

    ``trace`` is an IterationTrace or an (N, 2) array of iterates.  The
    audit runs in every frame whose base gap exceeds 2pi/3.

    Raises
    ------
    HypothesisNotMet
        No gap exceeds 2pi/3, so phi < pi/6 cannot be arranged.
    """
    P = ps.float_points() if isinstance(ps, PointSet) else np.asarray(ps, dtype=float)
    frames = large_gap_frames(P)
    if not frames:
        phi = base_gap_frame(P).phi
        raise HypothesisNotMet(f"phi = {phi:.6g} is not below pi/6: no gap exceeds 2pi/3")
    us = np.asarray(trace.us if hasattr(trace, "us") else trace, dtype=float)
    out = []
    for frame in frames:
        out.extend(audit_frame_trace(frame, us, set_id, slack))
    return out


def gap_angle_violations(ps, us: np.ndarray, set_id: int = 0, tol: float = 1e-9) -> list:
    """Steps where the angle between u_j != 0 and the chosen point is below pi/2 + phi."""
    P = ps.float_points() if isinstance(ps, PointSet) else np.asarray(ps, dtype=float)
    phi = base_gap_frame(P).phi
    us = np.asarray(us, dtype=float)
    u, chi = us[:-1], np.diff(us, axis=0)
    nu = np.linalg.norm(u, axis=1)
    live = nu > 1e-12
    cosg = np.einsum("ij,ij->i", u[live], chi[live]) / nu[live]
    gamma = np.arccos(np.clip(cosg, -1.0, 1.0))
    bad = np.flatnonzero(live)[gamma < math.pi / 2 + phi - tol]
    return [Violation(set_id, int(j), "gap-angle", us[j].tolist()) for j in bad]


def sample_T(spec: RegionSpec, count: int, rng) -> np.ndarray:
    """Uniform samples from the polar box of T: r in (1, sqrt 2], open angle window."""
    if spec.phibar <= 0:
        raise HypothesisNotMet("T is empty for phi >= pi/6")
    r = SQRT2 - rng.random(count) * (SQRT2 - 1)
    ang = math.pi / 2 + spec.phibar * (2 * rng.random(count) - 1)
    out = np.column_stack([r * np.cos(ang), r * np.sin(ang)])
    keep = in_T(spec, out)
    return out[keep]


def disjointness_audit(spec: Union[RegionSpec, float], samples: int = 10**5, seed: int = 0,
                       points: Optional[np.ndarray] = None) -> AuditReport:
    """Sampled check that U and T do not meet.

    Draws ``samples`` points of T (or audits the given ``points``, each of
    which must lie in T) and records any that fall in U.  A second pass
    samples P+ and P- and checks that their translates by x_n and x_1
    have argument at least pi/2 + phibar and at most pi/2 - phibar.
    """
    if not isinstance(spec, RegionSpec):
        spec = RegionSpec(float(spec))
    if not 0 <= spec.phi < math.pi / 6:
        raise HypothesisNotMet(f"phi = {spec.phi} outside [0, pi/6)")
    rng = np.random.default_rng(seed)
    if points is None:
        pts = sample_T(spec, samples, rng)
    else:
        pts = _as2(points)
        outside = np.flatnonzero(~in_T(spec, pts))
        if len(outside):
            raise ValueError(f"point {pts[outside[0]].tolist()} is not in T")
    report = AuditReport("disjoint", {"phi": spec.phi, "seed": seed}, len(pts))
    for j in np.flatnonzero(in_U(spec, pts)):
        report.violations.append(Violation(0, int(j), "T-in-U", pts[j].tolist()))

    # analytic sub-check on the translated pieces of P
    m = max(samples, 1000) if points is None else 1000
    rad = np.sqrt(rng.random(m))
    ang = TWO_PI * rng.random(m)
    disk = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
    plus = disk[in_P_plus(spec, disk)]
    minus = disk[in_P_minus(spec, disk)]
    arg_n = _arg(plus + spec.xn)
    arg_1 = _arg(minus + spec.x1)
    for j in np.flatnonzero(arg_n < math.pi / 2 + spec.phibar - 1e-12):
        report.violations.append(Violation(0, int(j), "arg-TnP+", plus[j].tolist()))
    for j in np.flatnonzero(arg_1 > math.pi / 2 - spec.phibar + 1e-12):
        report.violations.append(Violation(0, int(j), "arg-T1P-", minus[j].tolist()))
    report.params["translate_samples"] = int(len(plus) + len(minus))
    return report


def random_planar_set(rng, n: int, min_gap: Optional[float] = None) -> PointSet:
    """n random unit vectors in the plane, not 0-balanced.

    With ``min_gap`` one empty arc of at least that size is forced.
    """
    if n < 3:
        # two unit vectors always leave a gap of at least pi
        raise ValueError("need at least three points")
    while True:
        if min_gap is None:
            theta = rng.uniform(0, TWO_PI, n)
        else:
            gap = rng.uniform(min_gap, math.pi)
            start = rng.uniform(0, TWO_PI)
            theta = start + gap + rng.uniform(0, TWO_PI - gap, n)
            # pin both ends of the arc so the gap is exactly as drawn
            theta[0], theta[1] = start + gap, start + TWO_PI
        P = np.column_stack([np.cos(theta), np.sin(theta)])
        _, _, gaps = angular_gaps(P)
        if gaps.max() <= math.pi - 1e-9 and np.linalg.matrix_rank(P) == 2:
            return PointSet(P, FLOAT)


def random_planar_corpus(count: int, seed: int = 0, max_n: int = 12,
                         min_gap: Optional[float] = None) -> list:
    rng = np.random.default_rng(seed)
    return [random_planar_set(rng, int(rng.integers(3, max_n + 1)), min_gap) for _ in range(count)]


def regular_polygon(m: int, offset: float = 0.0) -> PointSet:
    t = offset + TWO_PI * np.arange(m) / m
    return PointSet(np.column_stack([np.cos(t), np.sin(t)]), FLOAT)


def _traces(ps: PointSet, steps: int, policies: Sequence[str], rng, tie_tol: float):
    X = ps.float_points()
    for policy in policies:
        if policy not in POLICIES:
            raise ValueError(f"unknown tie policy {policy!r}")
        yield policy, max_norm_fast(X, steps, policy, rng, tie_tol, ps=ps)


def lemma_corpus_audit(corpus: Sequence[PointSet], steps: int = 1000,
                       policies: Sequence[str] = POLICIES, seed: int = 0,
                       tie_tol: float = FLOAT_TIE_TOL, id_offset: int = 0) -> AuditReport:
    """Membership, step-claim and gap-angle audit over a corpus of planar sets.

    Set k draws its tie-breaking from a generator seeded with
    (seed, id_offset + k), so splitting a corpus into chunks does not
    change the outcome.
    """
    report = AuditReport("lemma", {"steps": steps, "policies": list(policies), "seed": seed,
                                   "sets": len(corpus)}, 0)
    for sid, ps in enumerate(corpus, start=id_offset):
        rng = np.random.default_rng([seed, sid])
        for _, (_, us) in _traces(ps, steps, policies, rng, tie_tol):
            report.violations.extend(lemma_membership_audit(ps, us, sid))
            report.violations.extend(gap_angle_violations(ps, us, sid))
            report.samples += len(us)
    report.violations.sort(key=lambda v: (v.set_id, v.step))
    return report


def sqrt2_bound_audit(corpus: Sequence[PointSet], steps: int = 1000,
                      policies: Sequence[str] = POLICIES, seed: int = 0,
                      tie_tol: float = FLOAT_TIE_TOL, tol: float = 1e-9,
                      id_offset: int = 0) -> AuditReport:
    """Largest |u_i| over every trace; any value above sqrt 2 + tol is a violation.

    Seeding per set follows lemma_corpus_audit.
    """
    report = AuditReport("sqrt2", {"steps": steps, "policies": list(policies), "seed": seed,
                                   "sets": len(corpus)}, 0, max_norm=0.0)
    for sid, ps in enumerate(corpus, start=id_offset):
        rng = np.random.default_rng([seed, sid])
        for _, (best, us) in _traces(ps, steps, policies, rng, tie_tol):
            report.samples += 1
            if best > report.max_norm:
                report.max_norm, report.witness = float(best), sid
            if best > SQRT2 + tol:
                j = int(np.argmax(np.linalg.norm(us, axis=1)))
                report.violations.append(Violation(sid, j, "norm>sqrt2", us[j].tolist()))
    return report


def perturbed_perp_witness(angle: float = 1e-4) -> PointSet:
    """{e1, e2, -e1} with e1 turned slightly away from e2; balanced, reaches about sqrt 2."""
    P = np.array([[math.cos(angle), -math.sin(angle)], [0.0, 1.0], [-1.0, 0.0]])
    return PointSet(P, FLOAT)
