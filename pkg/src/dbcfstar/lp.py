"""Revised simplex for small-row, many-column linear programs.

Solves ``min c.x  s.t.  A x = b, x >= 0``. Row counts here never exceed a
few dozen, so the basis is refactored with a dense solve at every pivot.
Pricing is Dantzig's most-negative reduced cost; after a run of degenerate
pivots the solver switches to Bland's rule for the rest of the solve, which
rules out cycling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DbcError, InfeasibleError

RC_TOL = 1e-11
PIVOT_TOL = 1e-11
DEGENERATE_RUN = 50


class UnboundedError(DbcError):
    pass


@dataclass
class LPResult:
    x: np.ndarray
    basis: np.ndarray
    objective: float
    duals: np.ndarray
    iterations: int

    def support(self, tol: float = 0.0) -> np.ndarray:
        return np.flatnonzero(self.x > tol)


def _iterate(c, A, b, basis, tol, max_iter):
    basis = list(basis)
    bland = False
    degenerate = 0
    for it in range(max_iter):
        B = A[:, basis]
        xB = np.linalg.solve(B, b)
        y = np.linalg.solve(B.T, c[basis])
        d = c - y @ A
        d[basis] = 0.0
        if bland:
            neg = np.flatnonzero(d < -tol)
            if neg.size == 0:
                return basis, xB, y, it
            e = int(neg[0])
        else:
            e = int(np.argmin(d))
            if d[e] >= -tol:
                return basis, xB, y, it
        u = np.linalg.solve(B, A[:, e])
        rows = np.flatnonzero(u > PIVOT_TOL)
        if rows.size == 0:
            raise UnboundedError("linear program is unbounded")
        ratios = np.maximum(xB[rows], 0.0) / u[rows]
        theta = ratios.min()
        tied = rows[ratios <= theta * (1 + 1e-12) + 1e-300]
        r = int(min(tied, key=lambda i: basis[i]))
        degenerate = degenerate + 1 if theta <= 1e-14 else 0
        if degenerate > DEGENERATE_RUN:
            bland = True
        basis[r] = e
    raise DbcError(f"simplex did not converge in {max_iter} iterations")


def _finish(c, A, b, basis, y, iterations) -> LPResult:
    basis = np.asarray(basis)
    xB = np.linalg.solve(A[:, basis], b)
    x = np.zeros(A.shape[1])
    x[basis] = np.maximum(xB, 0.0)
    return LPResult(x=x, basis=basis, objective=float(c @ x), duals=y, iterations=iterations)


def phase_one(A, b, *, tol: float = RC_TOL, max_iter: int = 20000):
    """Minimise the L1 infeasibility of ``A x = b, x >= 0``.

    Returns ``(x, infeasibility, basis, A_reduced, b_reduced)``; redundant
    rows are dropped from the reduced system so ``basis`` is square in it.
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    flip = b < 0
    A[flip] *= -1
    b[flip] *= -1
    m, n = A.shape
    Aa = np.hstack([A, np.eye(m)])
    ca = np.concatenate([np.zeros(n), np.ones(m)])
    basis, xB, _, _ = _iterate(ca, Aa, b, list(range(n, n + m)), tol, max_iter)
    x = np.zeros(n + m)
    x[basis] = np.maximum(xB, 0.0)
    infeas = float(x[n:].sum())

    # drive zero-level artificials out; rows where that fails are redundant
    keep_rows = list(range(m))
    basis = list(basis)
    pos = 0
    while pos < len(basis):
        var = basis[pos]
        if var < n:
            pos += 1
            continue
        B = Aa[np.ix_(keep_rows, basis)]
        Binv_row = np.linalg.solve(B.T, np.eye(len(basis))[pos])
        alpha = Binv_row @ A[keep_rows]
        alpha[[v for v in basis if v < n]] = 0.0
        candidates = np.flatnonzero(np.abs(alpha) > 1e-9)
        if candidates.size:
            basis[pos] = int(candidates[0])
            pos += 1
        else:
            row = keep_rows.pop(pos)
            del basis[pos]
            del row
    return x[:n], infeas, np.asarray(basis), A[keep_rows], b[keep_rows]


def solve(c, A, b, basis=None, *, tol: float = RC_TOL, max_iter: int = 20000,
          feas_tol: float = 1e-9) -> LPResult:
    """Solve the standard-form LP, from ``basis`` if it is primal feasible."""
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if basis is None:
        _, infeas, basis, A, b = phase_one(A, b, tol=tol, max_iter=max_iter)
        if infeas > feas_tol:
            raise InfeasibleError(f"linear program infeasible (phase-one residual {infeas:.3e})")
    basis, _, y, it = _iterate(c, A, b, list(basis), tol, max_iter)
    return _finish(c, A, b, basis, y, it)
