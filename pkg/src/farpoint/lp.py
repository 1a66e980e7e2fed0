"""Dense two-phase simplex for small equality-form linear programs.

    maximize    c . x
    subject to  A x = b,  x >= 0

Bland's rule guarantees termination; problems here have a few dozen
columns at most, so the tableau is recomputed densely at every pivot.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

OPTIMAL, INFEASIBLE, UNBOUNDED = "optimal", "infeasible", "unbounded"


@dataclass
class LPResult:
    status: str
    x: Optional[np.ndarray]
    value: Optional[float]


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    for r in range(T.shape[0]):
        if r != row and T[r, col] != 0.0:
            T[r] -= T[r, col] * T[row]


def _optimize(T: np.ndarray, basis: list, cost: np.ndarray, ncols: int, tol: float) -> str:
    m = T.shape[0]
    while True:
        reduced = cost[:ncols] - cost[basis] @ T[:, :ncols]
        entering = next((j for j in range(ncols) if reduced[j] > tol), None)
        if entering is None:
            return OPTIMAL
        col = T[:, entering]
        best, leave = None, None
        for i in range(m):
            if col[i] > tol:
                ratio = T[i, -1] / col[i]
                if best is None or ratio < best - tol or (abs(ratio - best) <= tol and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave is None:
            return UNBOUNDED
        _pivot(T, leave, entering)
        basis[leave] = entering


def linprog_max(c, A_eq, b_eq, tol: float = 1e-11) -> LPResult:
    """Solve the LP above.  Returns status, a primal optimum and its value."""
    c = np.asarray(c, dtype=float)
    A = np.array(A_eq, dtype=float, ndmin=2)
    b = np.array(b_eq, dtype=float)
    m, n = A.shape
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1

    T = np.hstack([A, np.eye(m), b[:, None]])
    basis = list(range(n, n + m))
    phase1 = np.concatenate([np.zeros(n), -np.ones(m)])
    _optimize(T, basis, phase1, n + m, tol)
    if T[:, -1] @ phase1[basis] < -1e-9:
        return LPResult(INFEASIBLE, None, None)

    # drive artificial variables out of the basis; drop redundant rows
    keep = []
    for i in range(m):
        if basis[i] >= n:
            col = next((j for j in range(n) if abs(T[i, j]) > 1e-9), None)
            if col is None:
                continue
            _pivot(T, i, col)
            basis[i] = col
        keep.append(i)
    T = np.hstack([T[keep, :n], T[keep, -1:]])
    basis = [basis[i] for i in keep]

    status = _optimize(T, basis, c, n, tol)
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED, None, None)
    x = np.zeros(n)
    x[basis] = T[:, -1]
    return LPResult(OPTIMAL, x, float(c @ x))
