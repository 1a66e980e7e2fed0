"""Vector arithmetic in two numeric modes, point sets on the unit sphere,
and planar polar coordinates.

Vectors are 1-d numpy arrays.  In ``float`` mode the dtype is float64; in
``rational`` mode it is ``object`` holding :class:`fractions.Fraction`
entries, so every sum and scalar product stays exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

FLOAT = "float"
RATIONAL = "rational"
MODES = (FLOAT, RATIONAL)

UNIT_TOL = 1e-12
RANK_TOL = 1e-9
TWO_PI = 2.0 * math.pi


def to_scalar(value, mode: str):
    """Coerce a number or a ``"p/q"`` string to the scalar type of ``mode``."""
    if mode == RATIONAL:
        return Fraction(value)
    if isinstance(value, str):
        return float(Fraction(value))
    return float(value)


def as_vector(coords: Sequence, mode: str = FLOAT) -> np.ndarray:
    if mode not in MODES:
        raise ValueError(f"unknown numeric mode {mode!r}")
    if mode == FLOAT:
        return np.array([to_scalar(c, mode) for c in coords], dtype=float)
    return np.array([to_scalar(c, mode) for c in coords], dtype=object)


def zeros(d: int, mode: str = FLOAT) -> np.ndarray:
    if mode == RATIONAL:
        return np.array([Fraction(0)] * d, dtype=object)
    return np.zeros(d)


def dot(a: np.ndarray, b: np.ndarray):
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch: {len(a)} != {len(b)}")
    return sum((x * y for x, y in zip(a, b)), Fraction(0)) if _is_exact(a, b) else float(np.dot(a, b))


def norm_sq(a: np.ndarray):
    return dot(a, a)


def exact_sqrt(q: Fraction) -> Optional[Fraction]:
    """Square root of a nonnegative rational if it is rational, else None."""
    q = Fraction(q)
    if q < 0:
        raise ValueError("negative argument")
    p, r = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if p * p == q.numerator and r * r == q.denominator:
        return Fraction(p, r)
    return None


def norm(a: np.ndarray):
    """Euclidean norm; exact Fraction in rational mode when the root is rational."""
    sq = norm_sq(a)
    if isinstance(sq, Fraction):
        root = exact_sqrt(sq)
        return root if root is not None else math.sqrt(sq)
    return math.sqrt(sq)


def _is_exact(*arrays) -> bool:
    return all(getattr(x, "dtype", None) == object for x in arrays)


def matrix_rank(rows, mode: str = FLOAT, rel_tol: float = RANK_TOL) -> int:
    """Rank of a coordinate matrix; exact elimination in rational mode."""
    if mode == RATIONAL:
        m = [[Fraction(x) for x in row] for row in rows]
        rank, ncols = 0, len(m[0]) if m else 0
        for col in range(ncols):
            pivot = next((r for r in range(rank, len(m)) if m[r][col] != 0), None)
            if pivot is None:
                continue
            m[rank], m[pivot] = m[pivot], m[rank]
            for r in range(len(m)):
                if r != rank and m[r][col] != 0:
                    f = m[r][col] / m[rank][col]
                    m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
            rank += 1
        return rank
    a = np.asarray(rows, dtype=float)
    if a.size == 0:
        return 0
    sv = np.linalg.svd(a, compute_uv=False)
    if sv[0] == 0:
        return 0
    return int(np.sum(sv > rel_tol * sv[0]))


@dataclass(frozen=True, eq=False)
class PointSet:
    """Finite point set X = {x_1, ..., x_n} in R^d.

    ``gram`` optionally carries the exact matrix of scalar products; it is
    how sets with irrational coordinates (regular simplices) still support
    exact tie detection.  ``labels`` names the points of the example families.
    """

    points: np.ndarray
    mode: str = FLOAT
    gram: Optional[tuple] = None
    labels: Optional[tuple] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown numeric mode {self.mode!r}")
        pts = self.points
        if self.mode == RATIONAL and self.gram is None:
            arr = np.array([[to_scalar(x, RATIONAL) for x in row] for row in pts], dtype=object)
        else:
            arr = np.array([[float(x) for x in row] for row in pts], dtype=float)
        if arr.ndim != 2:
            raise ValueError("points must form an (n, d) array")
        arr.setflags(write=False)
        object.__setattr__(self, "points", arr)
        if self.gram is not None:
            g = tuple(tuple(Fraction(x) for x in row) for row in self.gram)
            if len(g) != arr.shape[0] or any(len(row) != arr.shape[0] for row in g):
                raise ValueError("gram matrix must be n x n")
            object.__setattr__(self, "gram", g)
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def exact(self) -> bool:
        return self.mode == RATIONAL

    def __len__(self):
        return self.n

    def __getitem__(self, i) -> np.ndarray:
        return self.points[i]

    def float_points(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)

    def exact_gram(self) -> list:
        """Exact Gram matrix as nested lists of Fractions (rational mode only)."""
        if self.gram is not None:
            return [list(row) for row in self.gram]
        if not self.exact:
            raise ValueError("exact Gram matrix requires rational mode")
        pts = self.points
        return [[dot(pts[i], pts[j]) for j in range(self.n)] for i in range(self.n)]

    def label(self, i: int) -> str:
        return self.labels[i] if self.labels else f"x{i}"


@dataclass
class ValidationReport:
    ok: bool
    d: int
    n: int
    rank: int
    norm_deviations: list
    messages: list

    @property
    def max_norm_deviation(self) -> float:
        return max(self.norm_deviations) if self.norm_deviations else 0.0


def validate(ps: PointSet) -> ValidationReport:
    """Check unit norms and that the points span R^d."""
    if ps.n == 0:
        raise ValueError("empty point set")
    if ps.d < 2:
        raise ValueError(f"dimension must be at least 2, got {ps.d}")
    messages = []
    if ps.gram is not None:
        g = ps.gram
        devs = [float(abs(g[i][i] - 1)) for i in range(ps.n)]
        unit_ok = all(g[i][i] == 1 for i in range(ps.n))
        rank = matrix_rank(g, RATIONAL)
        coord_gram = ps.float_points() @ ps.float_points().T
        drift = float(np.max(np.abs(coord_gram - np.array(g, dtype=float))))
        if drift > 1e-9:
            messages.append(f"coordinates disagree with exact gram by {drift:.3g}")
            unit_ok = False
    elif ps.exact:
        sq = [norm_sq(p) for p in ps.points]
        devs = [float(abs(s - 1)) for s in sq]
        unit_ok = all(s == 1 for s in sq)
        rank = matrix_rank(ps.points, RATIONAL)
    else:
        nrm = np.linalg.norm(ps.points, axis=1)
        devs = [float(x) for x in np.abs(nrm - 1.0)]
        unit_ok = max(devs) <= UNIT_TOL
        rank = matrix_rank(ps.points, FLOAT)
    if not unit_ok:
        bad = [i for i, dv in enumerate(devs) if dv > (0 if ps.exact else UNIT_TOL)]
        messages.append(f"points off the unit sphere: {bad}")
    if rank < ps.d:
        messages.append(f"points span a {rank}-dimensional subspace of R^{ps.d}")
    return ValidationReport(unit_ok and rank == ps.d, ps.d, ps.n, rank, devs, messages)


def require_valid(ps: PointSet) -> None:
    report = validate(ps)
    if not report.ok:
        raise ValueError("invalid point set: " + "; ".join(report.messages))


def normalize_rows(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return a / np.linalg.norm(a, axis=-1, keepdims=True)


def reduce_angle(theta: float) -> float:
    """Reduce an angle to [0, 2pi)."""
    t = math.fmod(theta, TWO_PI)
    if t < 0:
        t += TWO_PI
    return 0.0 if t >= TWO_PI else t


def in_open_arc(theta: float, start: float, end: float) -> bool:
    """Whether ``theta`` lies in the counterclockwise open arc (start, end).

    Angles are taken modulo 2pi; the arc length ``end - start`` must be in
    (0, 2pi].
    """
    span = end - start
    off = reduce_angle(theta - start)
    return 0.0 < off < span


@dataclass(frozen=True)
class PolarPoint:
    r: float
    phi: float

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("radius must be nonnegative")
        object.__setattr__(self, "phi", reduce_angle(self.phi))


def to_polar(v) -> PolarPoint:
    x, y = (float(c) for c in v) if len(v) == 2 else _bad_dim(v)
    if x == 0.0 and y == 0.0:
        raise ValueError("angle of the zero vector is undefined")
    return PolarPoint(math.hypot(x, y), reduce_angle(math.atan2(y, x)))


def from_polar(p: PolarPoint) -> np.ndarray:
    return np.array([p.r * math.cos(p.phi), p.r * math.sin(p.phi)])


def _bad_dim(v):
    raise ValueError(f"planar vector expected, got dimension {len(v)}")


def rotation2(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])
