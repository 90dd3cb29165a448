"""Dense tableau simplex for ``max c^T x  s.t.  A x <= b, x >= 0`` with ``b >= 0``.

The origin is feasible under ``b >= 0``, so the slack basis starts the
method and no phase one is needed.  Bland's rule prevents cycling on the
highly degenerate LPs that coalition constraints produce.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError


class UnboundedLP(ArithmeticError):
    pass


@dataclass
class LPResult:
    x: np.ndarray
    objective: float
    duals: np.ndarray  # one multiplier per row of A, all >= 0
    iterations: int


def simplex_max(
    c: np.ndarray,
    A: np.ndarray,
    b: np.ndarray,
    eps: float = 1e-11,
    max_iter: int = 100_000,
) -> LPResult:
    c = np.asarray(c, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    if c.shape != (n,) or b.shape != (m,):
        raise InvalidInputError("inconsistent LP dimensions")
    if np.any(b < 0):
        raise InvalidInputError("simplex_max needs b >= 0 (origin feasible)")

    tab = np.zeros((m + 1, n + m + 1))
    tab[:m, :n] = A
    tab[:m, n:n + m] = np.eye(m)
    tab[:m, -1] = b
    tab[m, :n] = -c
    basis = np.arange(n, n + m)

    for iteration in range(max_iter):
        reduced = tab[m, :-1]
        candidates = np.flatnonzero(reduced < -eps)
        if candidates.size == 0:
            break
        col = int(candidates[0])
        column = tab[:m, col]
        rows = np.flatnonzero(column > eps)
        if rows.size == 0:
            raise UnboundedLP("objective is unbounded")
        ratios = tab[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + eps * max(1.0, abs(best))]
        row = int(ties[np.argmin(basis[ties])])
        tab[row] /= tab[row, col]
        others = np.arange(m + 1) != row
        tab[others] -= np.outer(tab[others, col], tab[row])
        basis[row] = col
    else:
        raise RuntimeError("simplex did not converge")

    x = np.zeros(n + m)
    x[basis] = tab[:m, -1]
    return LPResult(
        x=x[:n],
        objective=float(tab[m, -1]),
        duals=tab[m, n:n + m].copy(),
        iterations=iteration,
    )
