"""
Dense two-phase simplex for the small equality-form LPs used by the
Blackwell feasibility test and the Frank–Wolfe linear subproblems:

    minimize c·x  subject to  A x = b,  x >= 0

Bland's rule is used for both the entering and leaving variable, so the
method terminates on degenerate problems (transportation polytopes are
highly degenerate).
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

logger = logging.getLogger(__name__)

PIVOT_TOL = 1e-10


@dataclass
class LPResult:
    status: str  # "optimal", "infeasible", "unbounded" or "iteration_limit"
    x: Optional[np.ndarray] = None
    objective: float = float("nan")


class TwoPhaseSimplex:
    def __init__(self, max_iter=10000, feasibility_tol=1e-9):
        self.max_iter = max_iter
        self.feasibility_tol = feasibility_tol

    @staticmethod
    def _pivot(T: np.ndarray, row: int, col: int):
        T[row, :] /= T[row, col]
        column = T[:, col].copy()
        column[row] = 0.0
        T -= np.outer(column, T[row, :])

    @staticmethod
    def _enter(cost_row: np.ndarray, allowed: int) -> int:
        # Bland: lowest-index column with a negative reduced cost
        candidates = np.flatnonzero(cost_row[:allowed] < -PIVOT_TOL)
        return int(candidates[0]) if candidates.size else -1

    @staticmethod
    def _leave(T: np.ndarray, col: int, basis) -> int:
        column = T[:-1, col]
        rows = np.flatnonzero(column > PIVOT_TOL)
        if rows.size == 0:
            return -1
        ratios = T[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
        # Bland: among tied rows, the one whose basic variable has the lowest index
        return int(min(ties, key=lambda r: basis[r]))

    def _simplex(self, T: np.ndarray, basis, allowed: int) -> str:
        for _ in range(self.max_iter):
            col = self._enter(T[-1, :], allowed)
            if col == -1:
                return "optimal"
            row = self._leave(T, col, basis)
            if row == -1:
                return "unbounded"
            self._pivot(T, row, col)
            basis[row] = col
        return "iteration_limit"

    def solve(self, c, A_eq, b_eq) -> LPResult:
        c = np.asarray(c, dtype=float)
        A = np.array(A_eq, dtype=float, ndmin=2)
        b = np.array(b_eq, dtype=float)
        m, n = A.shape
        if c.size != n or b.size != m:
            raise ValueError(f"LP dimension mismatch: c has {c.size}, A is {A.shape}, b has {b.size}")

        negative = b < 0
        A[negative] *= -1.0
        b[negative] *= -1.0

        # Phase I: one artificial per row, minimize their sum
        T = np.zeros((m + 1, n + m + 1))
        T[:m, :n] = A
        T[:m, n:n + m] = np.eye(m)
        T[:m, -1] = b
        T[-1, n:n + m] = 1.0
        T[-1, :] -= T[:m, :].sum(axis=0)
        basis = list(range(n, n + m))

        status = self._simplex(T, basis, n + m)
        if status != "optimal":
            logger.warning("Phase I stopped with status %s", status)
            return LPResult(status)
        if -T[-1, -1] > self.feasibility_tol * max(1.0, b.sum()):
            return LPResult("infeasible")

        # Drive artificials out of the basis; rows where that is impossible are redundant
        keep = []
        for r in range(m):
            if basis[r] >= n:
                nonzero = np.flatnonzero(np.abs(T[r, :n]) > PIVOT_TOL)
                if nonzero.size == 0:
                    continue
                self._pivot(T, r, int(nonzero[0]))
                basis[r] = int(nonzero[0])
            keep.append(r)

        # Phase II on the original columns
        T2 = np.zeros((len(keep) + 1, n + 1))
        T2[:-1, :n] = T[keep, :n]
        T2[:-1, -1] = T[keep, -1]
        basis2 = [basis[r] for r in keep]
        T2[-1, :n] = c
        for r, j in enumerate(basis2):
            if c[j] != 0.0:
                T2[-1, :] -= c[j] * T2[r, :]

        status = self._simplex(T2, basis2, n)
        if status != "optimal":
            logger.warning("Phase II stopped with status %s", status)
            return LPResult(status)

        x = np.zeros(n)
        for r, j in enumerate(basis2):
            x[j] = T2[r, -1]
        x = np.where(x < 0.0, 0.0, x)
        return LPResult("optimal", x, float(c @ x))


def solve_lp(c, A_eq, b_eq, max_iter=10000) -> LPResult:
    """Minimize c·x subject to A_eq x = b_eq and x >= 0"""
    return TwoPhaseSimplex(max_iter=max_iter).solve(c, A_eq, b_eq)
