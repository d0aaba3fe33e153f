"""Exact two-phase simplex over rationals.

Small, self-contained LP core used by the stability oracle. Works entirely
in Fraction arithmetic, so feasibility decisions are exact (floats convert
to dyadic rationals losslessly) and returned vertices satisfy the
constraints with zero residual. Bland's rule guarantees termination.

Solves: maximize c.x subject to A x = b, x >= 0, with b >= 0.
"""
from __future__ import annotations

from fractions import Fraction


def _pivot(tableau: list[list[Fraction]], basis: list[int], row: int, col: int) -> None:
    piv = tableau[row][col]
    tableau[row] = [v / piv for v in tableau[row]]
    pivot_row = tableau[row]
    for r, current in enumerate(tableau):
        if r != row and current[col] != 0:
            f = current[col]
            tableau[r] = [a - f * p for a, p in zip(current, pivot_row)]
    basis[row] = col


def _run(tableau: list[list[Fraction]], basis: list[int], num_vars: int) -> str:
    """Bland-rule pivoting on a tableau whose last row is the objective."""
    zrow = len(tableau) - 1
    while True:
        enter = -1
        for j in range(num_vars):
            if tableau[zrow][j] < 0:
                enter = j
                break
        if enter == -1:
            return "optimal"
        leave, best = -1, None
        for r in range(zrow):
            coef = tableau[r][enter]
            if coef > 0:
                ratio = tableau[r][-1] / coef
                if best is None or ratio < best or (
                        ratio == best and basis[r] < basis[leave]):
                    leave, best = r, ratio
        if leave == -1:
            return "unbounded"
        _pivot(tableau, basis, leave, enter)


def solve_max(a_rows: list[list[Fraction]], b: list[Fraction],
              c: list[Fraction]) -> tuple[str, list[Fraction] | None, Fraction | None]:
    """Maximize c.x s.t. A x = b, x >= 0 (b must be nonnegative).

    Returns (status, x, value) with status "optimal", "infeasible" or
    "unbounded"; x and value are exact rationals when optimal.
    """
    m, n = len(a_rows), len(c)
    if any(bi < 0 for bi in b):
        raise ValueError("solve_max expects b >= 0 (normalize row signs first)")

    # phase 1: artificial basis, minimize the sum of artificials
    tableau = []
    for r in range(m):
        row = list(a_rows[r]) + [Fraction(0)] * m + [b[r]]
        row[n + r] = Fraction(1)
        tableau.append(row)
    zrow = [Fraction(0)] * (n + m + 1)
    for j in range(n):
        zrow[j] = -sum(a_rows[r][j] for r in range(m))
    zrow[-1] = -sum(b)
    tableau.append(zrow)
    basis = [n + r for r in range(m)]

    status = _run(tableau, basis, n + m)
    if status != "optimal" or tableau[-1][-1] != 0:
        return "infeasible", None, None

    # drive any degenerate artificials out of the basis, drop redundant rows
    for r in range(m - 1, -1, -1):
        if basis[r] >= n:
            pivot_col = next((j for j in range(n) if tableau[r][j] != 0), None)
            if pivot_col is None:
                del tableau[r]
                del basis[r]
            else:
                _pivot(tableau, basis, r, pivot_col)

    # phase 2: real objective on the surviving rows
    rows = len(tableau) - 1
    for r in range(rows + 1):
        tableau[r] = tableau[r][:n] + [tableau[r][-1]]
    zrow = [-cj for cj in c] + [Fraction(0)]
    tableau[-1] = zrow
    for r in range(rows):
        coef = tableau[-1][basis[r]]
        if coef != 0:
            tableau[-1] = [a - coef * p for a, p in zip(tableau[-1], tableau[r])]

    status = _run(tableau, basis, n)
    if status != "optimal":
        return status, None, None
    x = [Fraction(0)] * n
    for r in range(rows):
        x[basis[r]] = tableau[r][-1]
    return "optimal", x, tableau[-1][-1]
