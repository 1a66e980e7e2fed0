"""Farthest-point iteration u_{i+1} = u_i + chi_i, reachable sets and u*.

``chi_i`` is a point of X minimising <x, u_i>.  When several points attain
the minimum every one of them is a legal choice; tie-breaking is delegated
to a policy:

``lowest``  smallest index
``random``  uniform among the ties, seeded
``greedy``  the branch with the largest norm reachable within a short
            depth-first lookahead over tie branches

Exact-mode sets make their decisions on an integer-scaled Gram matrix, so
ties are detected without rounding.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .fileio import fmt_float, dumps
from .geometry import PointSet, dot, exact_sqrt, norm, require_valid, to_polar, zeros

LOWEST, RANDOM, GREEDY = "lowest", "random", "greedy"
POLICIES = (LOWEST, RANDOM, GREEDY)

FLOAT_TIE_TOL = 1e-9
DEFAULT_STATE_BUDGET = 10**7
DEFAULT_LOOKAHEAD = 3
LOOKAHEAD_NODES = 20000


class StateBudgetExceeded(RuntimeError):
    """Reachable-set closure did not terminate within the state budget."""

    def __init__(self, count: int, budget: int):
        super().__init__(f"reachable-set search exceeded {budget} states ({count} seen)")
        self.count = count
        self.budget = budget


class IllegalStep(ValueError):
    """A prescribed choice is not among the farthest points."""

    def __init__(self, step: int, index: int, ties):
        super().__init__(f"step {step}: x{index} is not a farthest point (ties {list(ties)})")
        self.step = step
        self.index = index
        self.ties = tuple(ties)


def _check_policy(policy: str) -> None:
    if policy not in POLICIES:
        raise ValueError(f"unknown tie policy {policy!r}; expected one of {POLICIES}")


class _ExactGram:
    """Gram matrix scaled by the common denominator D to Python ints."""

    def __init__(self, ps: PointSet):
        g = ps.exact_gram()
        den = 1
        for row in g:
            for x in row:
                den = den * x.denominator // math.gcd(den, x.denominator)
        self.den = den
        self.rows = [[int(x * den) for x in row] for row in g]
        self.diag = [self.rows[i][i] for i in range(len(g))]


def farthest_step(ps: PointSet, u, tie_tol: Optional[float] = None):
    """Tie set and successors of ``u`` for one iteration step.

    Parameters
    ----------
    ps : PointSet
    u : array-like
        Current iterate.  Exact-mode sets with rational coordinates expect
        a Fraction vector; ties are then detected exactly.
    tie_tol : float, optional
        Width of the tie band in float mode (default 1e-9).  Ignored in
        exact mode, where only exact minima tie.

    Returns
    -------
    ties : tuple of int
        Indices j with <x_j, u> within the tie band of the minimum.
    successors : list of ndarray
        ``u + x_j`` for each j in ``ties``.
    """
    exact = ps.exact and ps.gram is None and getattr(u, "dtype", None) == object
    if exact:
        prods = [dot(x, u) for x in ps.points]
        m = min(prods)
        ties = tuple(j for j, s in enumerate(prods) if s == m)
    else:
        tol = FLOAT_TIE_TOL if tie_tol is None else tie_tol
        prods = ps.float_points() @ np.asarray(u, dtype=float)
        ties = tuple(int(j) for j in np.flatnonzero(prods <= prods.min() + tol))
    return ties, [u + ps.points[j] for j in ties]


@dataclass
class TraceStep:
    i: int
    u: np.ndarray
    ties: tuple
    chosen: Optional[int]
    norm: float


@dataclass
class IterationTrace:
    """Iterates u_0..u_N with the tie set and choice made at each step."""

    points: PointSet
    us: list
    ties: list
    chosen: list
    norms: list
    policy: str = LOWEST
    norms_sq_exact: Optional[list] = None

    @property
    def n_steps(self) -> int:
        return len(self.chosen)

    @property
    def max_norm(self) -> float:
        return max(self.norms)

    @property
    def steps(self) -> list:
        out = []
        for i, u in enumerate(self.us):
            last = i == len(self.chosen)
            out.append(TraceStep(i, u, () if last else self.ties[i], None if last else self.chosen[i], self.norms[i]))
        return out

    def to_jsonl(self) -> str:
        lines = []
        for st in self.steps:
            rec = {"i": st.i, "u": list(st.u), "chosen": st.chosen, "ties": list(st.ties), "norm": st.norm}
            lines.append(dumps(rec))
        return "\n".join(lines) + "\n"


class _State:
    __slots__ = ("u", "s", "nsq")

    def __init__(self, u, s, nsq):
        self.u, self.s, self.nsq = u, s, nsq


class _Walker:
    """Iteration state machine shared by traces, replays and lookahead."""

    def __init__(self, ps: PointSet, tie_tol: Optional[float]):
        self.ps = ps
        self.exact = ps.exact
        self.tol = FLOAT_TIE_TOL if tie_tol is None else tie_tol
        if self.exact:
            self.gram = _ExactGram(ps)
            self.coords = ps.points
        else:
            self.X = ps.float_points()

    def start(self) -> _State:
        if self.exact:
            return _State(zeros(self.ps.d, "rational" if self.ps.gram is None else "float"),
                          [0] * self.ps.n, 0)
        return _State(np.zeros(self.ps.d), np.zeros(self.ps.n), 0.0)

    def ties(self, st: _State) -> tuple:
        if self.exact:
            m = min(st.s)
            return tuple(j for j, v in enumerate(st.s) if v == m)
        s = st.s
        return tuple(int(j) for j in np.flatnonzero(s <= s.min() + self.tol))

    def advance(self, st: _State, j: int) -> _State:
        if self.exact:
            g = self.gram
            row = g.rows[j]
            nsq = st.nsq + 2 * st.s[j] + g.diag[j]
            return _State(st.u + self.coords[j], [a + b for a, b in zip(st.s, row)], nsq)
        u = st.u + self.X[j]
        return _State(u, self.X @ u, float(u @ u))

    def norm_sq(self, st: _State):
        if self.exact:
            return Fraction(st.nsq, self.gram.den)
        return st.nsq

    def norm(self, st: _State) -> float:
        return math.sqrt(self.norm_sq(st))

    def lookahead(self, st: _State, depth: int, budget: list):
        """Largest squared norm reachable from ``st`` within ``depth`` steps."""
        best = self.norm_sq(st)
        if depth <= 0 or budget[0] <= 0:
            return best
        for j in self.ties(st):
            budget[0] -= 1
            best = max(best, self.lookahead(self.advance(st, j), depth - 1, budget))
        return best


def _choose(walker: _Walker, st: _State, ties: tuple, policy: str, rng, lookahead: int) -> int:
    if len(ties) == 1 or policy == LOWEST:
        return ties[0]
    if policy == RANDOM:
        return ties[int(rng.integers(len(ties)))]
    best_j, best_key = ties[0], None
    for j in ties:
        nxt = walker.advance(st, j)
        key = (walker.lookahead(nxt, lookahead - 1, [LOOKAHEAD_NODES]), walker.norm_sq(nxt))
        if best_key is None or key > best_key:
            best_j, best_key = j, key
    return best_j


def run_iteration(ps: PointSet, steps: int, policy: str = LOWEST, seed=None,
                  tie_tol: Optional[float] = None, prefix: Sequence[int] = (),
                  lookahead: int = DEFAULT_LOOKAHEAD, check: bool = True) -> IterationTrace:
    """Run ``steps`` farthest-point steps from u_0 = 0.

    ``prefix`` forces the first choices; each must be a legal farthest
    point, otherwise :class:`IllegalStep` is raised.
    """
    _check_policy(policy)
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    if check:
        require_valid(ps)
    rng = np.random.default_rng(seed)
    w = _Walker(ps, tie_tol)
    st = w.start()
    us, ties_log, chosen, norms = [st.u], [], [], [0.0]
    exact_sq = [Fraction(0)] if w.exact else None
    for i in range(steps):
        ties = w.ties(st)
        if i < len(prefix):
            j = prefix[i]
            if j not in ties:
                raise IllegalStep(i, j, ties)
        else:
            j = _choose(w, st, ties, policy, rng, lookahead)
        st = w.advance(st, j)
        ties_log.append(ties)
        chosen.append(j)
        us.append(st.u)
        norms.append(w.norm(st))
        if exact_sq is not None:
            exact_sq.append(w.norm_sq(st))
    return IterationTrace(ps, us, ties_log, chosen, norms, policy, exact_sq)


def max_norm_fast(X: np.ndarray, steps: int, policy: str = LOWEST, rng=None,
                  tie_tol: float = FLOAT_TIE_TOL, lookahead: int = DEFAULT_LOOKAHEAD,
                  ps: Optional[PointSet] = None):
    """Max ||u_i|| over one float trace, without per-step bookkeeping.

    Returns ``(max_norm, us)`` where ``us`` is the (steps+1, d) array of
    iterates.  Scalar products are updated through the Gram matrix and
    refreshed every 256 steps to keep rounding drift far below the tie
    tolerance.  Used by the large audits.
    """
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    G = X @ X.T
    u = np.zeros(d)
    s = np.zeros(n)
    chosen = np.empty(steps, dtype=np.intp)
    walker = None
    for i in range(steps):
        if i & 255 == 0:
            s = X @ u
        mask = s <= s.min() + tie_tol
        if policy == LOWEST:
            j = int(mask.argmax())
        else:
            ties = np.flatnonzero(mask)
            if len(ties) == 1:
                j = int(ties[0])
            elif policy == RANDOM:
                j = int(ties[rng.integers(len(ties))])
            else:
                if walker is None:
                    walker = _Walker(ps if ps is not None else PointSet(X), tie_tol)
                j = _choose(walker, _State(u, X @ u, float(u @ u)), tuple(int(t) for t in ties),
                            GREEDY, rng, lookahead)
        chosen[i] = j
        s = s + G[j]
        u = u + X[j]
    us = np.zeros((steps + 1, d))
    np.cumsum(X[chosen], axis=0, out=us[1:])
    best = float(np.sqrt(np.max(np.einsum("ij,ij->i", us, us))))
    return best, us


@dataclass
class ScheduleReplay:
    """Outcome of replaying a prescribed sequence of choices."""

    ok: bool
    steps_done: int
    first_violation: Optional[int]
    prescribed: Optional[int]
    ties: tuple
    max_norm: float
    final_norm: float
    us: list = field(default_factory=list)


def replay_schedule(ps: PointSet, schedule: Sequence[int], tie_tol: Optional[float] = None) -> ScheduleReplay:
    """Replay ``schedule`` through the farthest-point rule.

    Stops at the first step where the prescribed index is not in the tie
    set.  The iterates before that step form a legal iteration prefix.
    """
    w = _Walker(ps, tie_tol)
    st = w.start()
    us = [st.u]
    best = 0.0
    for i, j in enumerate(schedule):
        ties = w.ties(st)
        if j not in ties:
            return ScheduleReplay(False, i, i, j, ties, best, w.norm(st), us)
        st = w.advance(st, j)
        us.append(st.u)
        best = max(best, w.norm(st))
    return ScheduleReplay(True, len(schedule), None, None, (), best, w.norm(st), us)


@dataclass(frozen=True)
class LatticeState:
    """u = sum k_i x_i with the first coefficient vector that reached it."""

    key: tuple
    coeffs: tuple
    depth: int
    norm_sq: Fraction


@dataclass
class ReachableSet:
    states: dict
    status: str
    den: int
    witness: Optional[LatticeState] = None

    @property
    def count(self) -> int:
        return len(self.states)

    @property
    def ustar_sq(self) -> Fraction:
        return max(s.norm_sq for s in self.states.values())

    @property
    def ustar(self) -> float:
        return math.sqrt(self.ustar_sq)

    @property
    def closed(self) -> bool:
        return self.status == "closed"

    def vector(self, state: LatticeState, ps: PointSet) -> np.ndarray:
        u = zeros(ps.d, ps.mode if ps.gram is None else "float")
        for k, x in zip(state.coeffs, ps.points):
            if k:
                u = u + k * x
        return u

    def to_csv_rows(self):
        for st in sorted(self.states.values(), key=lambda s: (s.depth, s.coeffs)):
            yield [" ".join(map(str, st.coeffs)), st.depth, str(st.norm_sq), math.sqrt(st.norm_sq)]


def reachable_set(ps: PointSet, norm_cap: Optional[float] = None,
                  budget: int = DEFAULT_STATE_BUDGET) -> ReachableSet:
    """Breadth-first closure of U(X) over every tie branch (exact mode).

    The canonical key of u is the integer vector D*<x_j, u>; since X spans
    R^d it determines u, so two coefficient vectors differing by a kernel
    element collapse to one state.

    With ``norm_cap`` the search stops as soon as a state is longer than the
    cap and returns status ``"unbounded-suspect"``.  Without a cap a search
    that exceeds ``budget`` states raises :class:`StateBudgetExceeded`.
    """
    if not ps.exact:
        raise ValueError("reachable_set requires an exact (rational) point set")
    require_valid(ps)
    g = _ExactGram(ps)
    n, den = ps.n, g.den
    cap_sq = None if norm_cap is None else Fraction(norm_cap) ** 2 * den
    key0 = (0,) * n
    states = {key0: LatticeState(key0, (0,) * n, 0, Fraction(0))}
    nsq_of = {key0: 0}
    coeffs_of = {key0: (0,) * n}
    queue = deque([key0])
    while queue:
        key = queue.popleft()
        m = min(key)
        depth = states[key].depth
        for j in range(n):
            if key[j] != m:
                continue
            row = g.rows[j]
            nkey = tuple(a + b for a, b in zip(key, row))
            if nkey in states:
                continue
            nsq = nsq_of[key] + 2 * key[j] + g.diag[j]
            k = list(coeffs_of[key])
            k[j] += 1
            st = LatticeState(nkey, tuple(k), depth + 1, Fraction(nsq, den))
            states[nkey] = st
            nsq_of[nkey] = nsq
            coeffs_of[nkey] = st.coeffs
            if cap_sq is not None and nsq > cap_sq:
                return ReachableSet(states, "unbounded-suspect", den, st)
            if len(states) > budget:
                raise StateBudgetExceeded(len(states), budget)
            queue.append(nkey)
    return ReachableSet(states, "closed", den)


@dataclass(frozen=True)
class UStar:
    squared: Fraction
    count: int

    @property
    def value(self) -> float:
        return math.sqrt(self.squared)

    @property
    def exact_value(self):
        root = exact_sqrt(self.squared)
        return root if root is not None else self.value


def ustar_exact(ps: PointSet, budget: int = DEFAULT_STATE_BUDGET) -> UStar:
    """sup ||u|| over U(X); the squared value is exact."""
    rs = reachable_set(ps, budget=budget)
    return UStar(rs.ustar_sq, rs.count)


def ustar_estimate(ps: PointSet, budget: int = 64, seed=0, steps: int = 1000,
                   witnesses: Sequence[Sequence[int]] = (), tie_tol: Optional[float] = None) -> float:
    """Certified lower bound on u*(X) from explicit legal iterations.

    Runs ``budget`` traces that cycle through every forced first choice and
    alternate greedy and random tie-breaking, then replays each witness
    schedule up to its first illegal step.
    """
    require_valid(ps)
    rng = np.random.default_rng(seed)
    best = 0.0
    for t in range(budget):
        policy = GREEDY if t % 2 == 0 else RANDOM
        tr = run_iteration(ps, steps, policy, seed=int(rng.integers(2**32)), tie_tol=tie_tol,
                           prefix=[t % ps.n], check=False)
        best = max(best, tr.max_norm)
    for sched in witnesses:
        best = max(best, replay_schedule(ps, sched, tie_tol).max_norm)
    return best


def law_of_cosines_check(trace: IterationTrace, tol: float = 1e-9) -> bool:
    """Check |u_j|^2 = 1 + 2|u_{j-1}| cos(gamma_{j-1}) + |u_{j-1}|^2 on a planar trace.

    gamma is measured from polar angles of u_{j-1} and chi_{j-1}, and the
    norms are taken from the recorded trace, so a trace whose iterates do
    not follow u_j = u_{j-1} + chi_{j-1} fails.
    """
    if trace.points.d != 2:
        raise ValueError("law of cosines check is planar")
    pts = trace.points.float_points()
    for j in range(1, len(trace.us)):
        prev = np.asarray(trace.us[j - 1], dtype=float)
        lam_prev = float(trace.norms[j - 1])
        lam = float(trace.norms[j])
        if lam_prev == 0.0:
            if abs(lam - 1.0) > tol:
                return False
            continue
        chi = pts[trace.chosen[j - 1]]
        gamma = abs(to_polar(prev).phi - to_polar(chi).phi)
        gamma = min(gamma, 2 * math.pi - gamma)
        rhs = 1 + 2 * lam_prev * math.cos(gamma) + lam_prev**2
        if abs(lam**2 - rhs) > tol * max(1.0, rhs):
            return False
    return True


def unbounded_reason(ps: PointSet) -> Optional[str]:
    """Why an unbounded-suspect search is expected, if the balance class says so."""
    from .balance import classify_balance

    rep = classify_balance(ps)
    if rep.b == 0:
        eps = float(norm(np.asarray(rep.min_norm_point, dtype=float)))
        return f"0-balanced: every step adds at least {fmt_float(eps)} along a fixed direction, so u* is infinite"
    return None
