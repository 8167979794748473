"""Dense two-phase simplex solver for small equality-form linear programs.

Solves ``max/min c @ x  s.t.  a_eq @ x == b_eq, x >= 0``.  The design
polytopes this package optimizes over have a few dozen variables at most,
so a dense tableau with Bland's anti-cycling rule is plenty; it also makes
vertex solutions and tie-breaking fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyPolytope

#: pivot / reduced-cost tolerance
PIVOT_TOL = 1e-10


@dataclass(frozen=True)
class LPResult:
    x: np.ndarray
    value: float


class UnboundedError(Exception):
    """The linear program has unbounded objective (never expected here)."""


def _pivot(tableau: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    for i in range(tableau.shape[0]):
        if i != row and abs(tableau[i, col]) > 0.0:
            tableau[i] -= tableau[i, col] * tableau[row]
    basis[row] = col


def _iterate(tableau: np.ndarray, basis: np.ndarray, ncols: int) -> None:
    # Bland's rule: entering variable = smallest improving index,
    # leaving row = ratio test with smallest basis index on ties.
    m = len(basis)
    while True:
        cost = tableau[-1, :ncols]
        entering = -1
        for j in range(ncols):
            if cost[j] < -PIVOT_TOL:
                entering = j
                break
        if entering < 0:
            return
        best_ratio, row = None, -1
        for i in range(m):
            a = tableau[i, entering]
            if a > PIVOT_TOL:
                ratio = tableau[i, -1] / a
                if best_ratio is None or ratio < best_ratio - PIVOT_TOL or (
                        abs(ratio - best_ratio) <= PIVOT_TOL and basis[i] < basis[row]):
                    best_ratio, row = ratio, i
        if row < 0:
            raise UnboundedError(f"column {entering} is unbounded")
        _pivot(tableau, basis, row, entering)


def solve_lp(c, a_eq, b_eq, maximize: bool = False) -> LPResult:
    """Solve ``opt c @ x  s.t.  a_eq @ x == b_eq, x >= 0``.

    Returns a vertex solution (basic feasible point).  Deterministic: the
    same inputs always give the same vertex.

    Raises
    ------
    EmptyPolytope
        If the constraints are infeasible.
    UnboundedError
        If the objective is unbounded over the feasible set.
    """
    a = np.atleast_2d(np.asarray(a_eq, dtype=float)).copy()
    b = np.asarray(b_eq, dtype=float).copy()
    c = np.asarray(c, dtype=float)
    m, nvars = a.shape
    flip = b < 0
    a[flip] *= -1.0
    b[flip] *= -1.0

    # phase 1: artificial basis, minimize sum of artificials
    tableau = np.zeros((m + 1, nvars + m + 1))
    tableau[:m, :nvars] = a
    tableau[:m, nvars:nvars + m] = np.eye(m)
    tableau[:m, -1] = b
    tableau[-1, :nvars] = -a.sum(axis=0)
    tableau[-1, -1] = -b.sum()
    basis = np.arange(nvars, nvars + m)
    _iterate(tableau, basis, nvars + m)
    if tableau[-1, -1] < -1e-8:
        raise EmptyPolytope(f"phase-1 residual {-tableau[-1, -1]:.3e}")

    # drive leftover artificials out of the basis; drop redundant rows
    keep = []
    for i in range(m):
        if basis[i] >= nvars:
            pivot_col = -1
            for j in range(nvars):
                if abs(tableau[i, j]) > PIVOT_TOL:
                    pivot_col = j
                    break
            if pivot_col < 0:
                continue  # redundant constraint row
            _pivot(tableau, basis, i, pivot_col)
        keep.append(i)
    tableau = np.vstack([tableau[keep][:, list(range(nvars)) + [-1]],
                         np.zeros(nvars + 1)])
    basis = basis[keep]

    # phase 2: rebuild reduced costs for the real objective (as minimize)
    obj = -c if maximize else c
    tableau[-1, :nvars] = obj
    tableau[-1, -1] = 0.0
    for i, var in enumerate(basis):
        tableau[-1] -= obj[var] * tableau[i]
    _iterate(tableau, basis, nvars)

    x = np.zeros(nvars)
    x[basis] = tableau[:len(basis), -1]
    np.clip(x, 0.0, None, out=x)
    value = float(c @ x)
    return LPResult(x, value)


def feasible_vertex(a_eq, b_eq) -> np.ndarray:
    """A vertex of ``{x >= 0 : a_eq @ x == b_eq}`` (phase 1 only)."""
    nvars = np.atleast_2d(a_eq).shape[1]
    return solve_lp(np.zeros(nvars), a_eq, b_eq).x
