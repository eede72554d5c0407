"""Dense-tableau primal simplex with Bland's rule.

Solves ``max c.x  s.t.  A x <= b, x >= 0`` for ``b >= 0``, where the slack
basis is feasible from the start. Problem sizes here are tiny (a few hundred
rows), so a dense tableau is simplest and fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FEAS_TOL = 1e-9
PIVOT_TOL = 1e-12


class LpFailure(RuntimeError):
    pass


@dataclass
class LpSolution:
    x: np.ndarray
    objective: float
    status: str
    pivots: int


def maximize(c, A, b, max_pivots: int | None = None) -> LpSolution:
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    if b.min() < -FEAS_TOL:
        raise LpFailure("right-hand side must be nonnegative for the slack start")
    b = np.maximum(b, 0.0)

    # rows 0..m-1: constraints; last row: reduced costs (c_j - z_j); last column: rhs
    tab = np.zeros((m + 1, n + m + 1))
    tab[:m, :n] = A
    tab[:m, n:n + m] = np.eye(m)
    tab[:m, -1] = b
    tab[m, :n] = c
    basis = np.arange(n, n + m)
    limit = max_pivots if max_pivots is not None else 50 * (n + m)

    pivots = 0
    while True:
        reduced = tab[m, :-1]
        candidates = np.flatnonzero(reduced > PIVOT_TOL)
        if candidates.size == 0:
            break
        if pivots >= limit:
            raise LpFailure(f"pivot limit {limit} reached")
        j = candidates[0]  # Bland: lowest index enters
        col = tab[:m, j]
        rows = np.flatnonzero(col > PIVOT_TOL)
        if rows.size == 0:
            raise LpFailure("objective is unbounded")
        ratios = tab[rows, -1] / col[rows]
        best = ratios.min()
        tied = rows[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
        i = tied[np.argmin(basis[tied])]  # Bland: lowest basic index leaves
        tab[i] /= tab[i, j]
        others = tab[:, j].copy()
        others[i] = 0.0
        tab -= np.outer(others, tab[i])
        basis[i] = j
        pivots += 1

    x = np.zeros(n + m)
    x[basis] = tab[:m, -1]
    return LpSolution(x[:n], float(c @ x[:n]), "optimal", pivots)
