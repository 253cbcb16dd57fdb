"""Dense-tableau simplex for max{c.x : A x <= b, x >= 0} with b >= 0.

All LPs in this package arrive in this form (rank cuts and box rows with
non-negative right-hand sides), so phase one is never needed. Bland's rule
guarantees termination under the degeneracy these cut-generated LPs produce.
Instances are tiny; correctness and determinism beat speed here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-9


class SimplexError(RuntimeError):
    pass


@dataclass(frozen=True)
class LpResult:
    x: np.ndarray
    objective: float
    iterations: int


def maximize(c, a_ub, b_ub, max_iterations: int = 50_000) -> LpResult:
    c = np.asarray(c, dtype=float)
    a = np.atleast_2d(np.asarray(a_ub, dtype=float))
    b = np.asarray(b_ub, dtype=float)
    m, n = a.shape
    if c.shape != (n,) or b.shape != (m,):
        raise SimplexError(f"shape mismatch: c{c.shape} A{a.shape} b{b.shape}")
    if np.any(b < -PIVOT_TOL):
        raise SimplexError("negative right-hand side; this solver assumes b >= 0")

    # tableau: [A | I | b] with objective row [-c | 0 | 0] appended last
    tab = np.zeros((m + 1, n + m + 1))
    tab[:m, :n] = a
    tab[:m, n : n + m] = np.eye(m)
    tab[:m, -1] = np.maximum(b, 0.0)
    tab[m, :n] = -c
    basis = list(range(n, n + m))

    iterations = 0
    while True:
        # Bland: entering variable is the lowest index with a negative
        # reduced cost
        entering = -1
        for j in range(n + m):
            if tab[m, j] < -PIVOT_TOL:
                entering = j
                break
        if entering < 0:
            break
        leaving_row = -1
        best_ratio = None
        for i in range(m):
            coef = tab[i, entering]
            if coef > PIVOT_TOL:
                ratio = tab[i, -1] / coef
                if (
                    best_ratio is None
                    or ratio < best_ratio - PIVOT_TOL
                    or (abs(ratio - best_ratio) <= PIVOT_TOL and basis[i] < basis[leaving_row])
                ):
                    best_ratio = ratio
                    leaving_row = i
        if leaving_row < 0:
            raise SimplexError("LP is unbounded")
        _pivot(tab, leaving_row, entering)
        basis[leaving_row] = entering
        iterations += 1
        if iterations > max_iterations:
            raise SimplexError(f"iteration limit {max_iterations} exceeded")

    x = np.zeros(n)
    for i, var in enumerate(basis):
        if var < n:
            x[var] = tab[i, -1]
    return LpResult(x=x, objective=float(tab[m, -1]), iterations=iterations)


def _pivot(tab: np.ndarray, row: int, col: int) -> None:
    tab[row] /= tab[row, col]
    for i in range(tab.shape[0]):
        if i != row and tab[i, col] != 0.0:
            tab[i] -= tab[i, col] * tab[row]
