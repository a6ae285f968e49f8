"""Dense two-phase primal simplex with Bland's rule.

Meant for small relaxations and for cross-checking the HiGHS LP engine; the
tableau is dense, so memory grows with rows x columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TOL = 1e-9


@dataclass(frozen=True)
class LPResult:
    status: str  # optimal | infeasible | unbounded
    x: np.ndarray | None
    objective: float
    reduced: np.ndarray | None = None  # reduced costs, when the engine reports them


def _pivot(T: np.ndarray, basis: list[int], r: int, k: int) -> None:
    T[r] /= T[r, k]
    col = T[:, k].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])
    basis[r] = k


def _run(T: np.ndarray, basis: list[int], ncols: int, max_iter: int) -> str:
    """Minimize the objective held in the last tableau row over columns < ncols."""
    m = T.shape[0] - 1
    for _ in range(max_iter):
        red = T[-1, :ncols]
        entering = np.flatnonzero(red < -TOL)
        if entering.size == 0:
            return "optimal"
        k = int(entering[0])  # Bland: lowest index with negative reduced cost
        col = T[:m, k]
        pos = col > TOL
        if not pos.any():
            return "unbounded"
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / col[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + TOL * max(1.0, abs(best)))
        r = int(min(ties, key=lambda t: basis[t]))  # Bland: lowest basic index leaves
        _pivot(T, basis, r, k)
    raise RuntimeError("simplex iteration limit reached")


def solve_standard(c: np.ndarray, A: np.ndarray, b: np.ndarray, max_iter: int = 50_000) -> LPResult:
    """min c.x subject to A x = b, x >= 0."""
    m, n = A.shape
    A = A.astype(float).copy()
    b = b.astype(float).copy()
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1
    # phase 1 tableau: [A | I | b], objective row minimizes the artificial sum
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :n] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = list(range(n, n + m))
    _run(T, basis, n + m, max_iter)
    if -T[-1, -1] > 1e-7 * max(1.0, np.abs(b).max(initial=0.0)):
        return LPResult("infeasible", None, np.inf)
    # drive remaining artificials out of the basis, dropping redundant rows
    keep = []
    for r in range(m):
        if basis[r] >= n:
            cand = np.flatnonzero(np.abs(T[r, :n]) > 1e-9)
            if cand.size:
                _pivot(T, basis, r, int(cand[0]))
                keep.append(r)
        else:
            keep.append(r)
    T = np.vstack([T[keep][:, list(range(n)) + [n + m]], np.zeros((1, n + 1))])
    basis = [basis[r] for r in keep]
    T[-1, :n] = c
    for r, j in enumerate(basis):
        T[-1] -= c[j] * T[r]
    status = _run(T, basis, n, max_iter)
    if status == "unbounded":
        return LPResult("unbounded", None, -np.inf)
    x = np.zeros(n)
    for r, j in enumerate(basis):
        x[j] = T[r, -1]
    return LPResult("optimal", x, float(c @ x))


def solve_bounded(c, A, row_lo, row_hi, lb, ub, max_iter: int = 50_000) -> LPResult:
    """min c.x subject to row_lo <= A x <= row_hi and lb <= x <= ub (dense inputs)."""
    c = np.asarray(c, float)
    A = np.asarray(A, float)
    m, n = A.shape
    lb = np.asarray(lb, float)
    ub = np.asarray(ub, float)
    if np.any(lb > ub + TOL):
        return LPResult("infeasible", None, np.inf)
    # x = shift + M z with z >= 0; free variables split into two columns
    cols, shift = [], np.zeros(n)
    for j in range(n):
        if np.isfinite(lb[j]):
            shift[j] = lb[j]
            cols.append((j, 1.0))
        elif np.isfinite(ub[j]):
            shift[j] = ub[j]
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    M = np.zeros((n, len(cols)))
    for k, (j, s) in enumerate(cols):
        M[j, k] = s
    Az = A @ M
    base = A @ shift
    rows, rhs, slack_sign = [], [], []
    for r in range(m):
        lo, hi = row_lo[r], row_hi[r]
        if np.isfinite(lo) and np.isfinite(hi) and abs(hi - lo) <= TOL:
            rows.append(Az[r]); rhs.append(hi - base[r]); slack_sign.append(0.0)
            continue
        if np.isfinite(hi):
            rows.append(Az[r]); rhs.append(hi - base[r]); slack_sign.append(1.0)
        if np.isfinite(lo):
            rows.append(Az[r]); rhs.append(lo - base[r]); slack_sign.append(-1.0)
    # finite two-sided variable bounds become z_k <= ub - lb rows
    for k, (j, s) in enumerate(cols):
        if np.isfinite(lb[j]) and np.isfinite(ub[j]) and s > 0:
            e = np.zeros(len(cols)); e[k] = 1.0
            rows.append(e); rhs.append(ub[j] - lb[j]); slack_sign.append(1.0)
    nz = len(cols)
    ns = sum(1 for s in slack_sign if s != 0.0)
    S = np.zeros((len(rows), nz + ns))
    k = nz
    for r, (row, s) in enumerate(zip(rows, slack_sign)):
        S[r, :nz] = row
        if s != 0.0:
            S[r, k] = s
            k += 1
    cz = np.concatenate([M.T @ c, np.zeros(ns)])
    res = solve_standard(cz, S, np.asarray(rhs, float), max_iter)
    if res.status != "optimal":
        return res
    x = shift + M @ res.x[:nz]
    return LPResult("optimal", x, float(c @ x))
