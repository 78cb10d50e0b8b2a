"""Dense two-phase simplex for small linear programs.

Solves ::

    minimize    c @ x
    subject to  A_ub @ x <= b_ub
                A_eq @ x == b_eq
                x >= 0

with a full tableau and Bland's anti-cycling rule.  Problem sizes here are
tens of variables, so clarity wins over speed.  The result carries dual
multipliers and the dual objective, which certify optimality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import Infeasible, SolverStalled


@dataclass(frozen=True)
class LPResult:
    x: np.ndarray
    fun: float
    y_ub: np.ndarray      # multipliers of A_ub rows (<= 0)
    y_eq: np.ndarray      # multipliers of A_eq rows (free)
    dual_bound: float     # b_ub @ y_ub + b_eq @ y_eq
    dual_residual: float  # max violation of A^T y <= c and y_ub <= 0
    iterations: int

    @property
    def gap(self) -> float:
        return self.fun - self.dual_bound


def _pivot(t: np.ndarray, r: int, k: int) -> None:
    t[r] /= t[r, k]
    col = t[:, k].copy()
    col[r] = 0.0
    t -= np.outer(col, t[r])


def _iterate(t, basis, cost, allowed, tol, max_iter, it0):
    """Bland-rule simplex iterations on tableau ``t`` (last column = rhs)."""
    it = it0
    while True:
        red = cost - cost[basis] @ t[:, :-1]
        cand = [k for k in np.flatnonzero(red < -tol) if allowed[k]]
        if not cand:
            return it
        k = cand[0]
        colk = t[:, k]
        rows = np.flatnonzero(colk > tol)
        if rows.size == 0:
            raise SolverStalled("objective unbounded below")
        ratios = t[rows, -1] / colk[rows]
        best = ratios.min()
        ties = rows[ratios <= best + tol * max(1.0, abs(best))]
        r = int(min(ties, key=lambda i: basis[i]))
        _pivot(t, r, k)
        basis[r] = k
        it += 1
        if it >= max_iter:
            raise SolverStalled(f"simplex did not finish in {max_iter} pivots")


def simplex(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None,
            tol: float = 1e-10, max_iter: int = 10_000) -> LPResult:
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, float))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, float))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, float).ravel()
    mu, me = A_ub.shape[0], A_eq.shape[0]
    m = mu + me

    # equality form over [x, slacks]; flip rows so every rhs is >= 0
    A = np.zeros((m, n + mu))
    A[:mu, :n] = A_ub
    A[:mu, n:] = np.eye(mu)
    A[mu:, :n] = A_eq
    b = np.concatenate([b_ub, b_eq])
    sign = np.where(b < 0, -1.0, 1.0)
    A *= sign[:, None]
    b = b * sign
    nv = n + mu

    # phase 1 with one artificial per row
    t = np.zeros((m, nv + m + 1))
    t[:, :nv] = A
    t[:, nv:nv + m] = np.eye(m)
    t[:, -1] = b
    basis = list(range(nv, nv + m))
    cost1 = np.concatenate([np.zeros(nv), np.ones(m)])
    allowed = np.ones(nv + m, dtype=bool)
    it = _iterate(t, basis, cost1, allowed, tol, max_iter, 0)
    infeas = float(cost1[basis] @ t[:, -1])
    if infeas > 1e-9 * max(1.0, np.abs(b).max(initial=0.0)):
        raise Infeasible(f"constraints are infeasible (phase-1 residual {infeas:.3g})")

    # drive artificials out of the basis; rows where that fails are redundant
    keep = []
    for r in range(m):
        if basis[r] >= nv:
            nz = np.flatnonzero(np.abs(t[r, :nv]) > 1e-9)
            if nz.size == 0:
                continue
            _pivot(t, r, int(nz[0]))
            basis[r] = int(nz[0])
        keep.append(r)
    t = t[keep]
    basis = [basis[r] for r in keep]
    rows = np.array(keep, dtype=int)

    # phase 2
    cost2 = np.concatenate([c, np.zeros(mu), np.zeros(m)])
    allowed[nv:] = False
    it = _iterate(t, basis, cost2, allowed, tol, max_iter, it)

    xfull = np.zeros(nv + m)
    xfull[basis] = t[:, -1]
    x = np.clip(xfull[:n], 0.0, None)
    fun = float(c @ x)

    # duals from the final basis, then mapped back to the original rows
    B = A[rows][:, basis]
    y_red = np.linalg.solve(B.T, cost2[basis])
    y = np.zeros(m)
    y[rows] = y_red * sign[rows]
    y_ub, y_eq = y[:mu], y[mu:]
    dual = float(b_ub @ y_ub + b_eq @ y_eq)
    resid = max(float(np.max(A_ub.T @ y_ub + A_eq.T @ y_eq - c, initial=0.0)),
                float(np.max(y_ub, initial=0.0)), 0.0)
    return LPResult(x, fun, y_ub, y_eq, dual, resid, it)
