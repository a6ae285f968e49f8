"""LP relaxation engines used for branch-and-bound bounding."""

from __future__ import annotations

import highspy
import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from ..milp.system import Compiled
from .simplex import LPResult, solve_bounded


class HighsLP:
    """Relaxation solved by HiGHS dual simplex, warm-started across nodes.

    The model is passed once; each node only changes column bounds, so the
    previous optimal basis stays dual feasible and re-solves are short.
    """

    name = "highs"

    def __init__(self, comp: Compiled):
        self.comp = comp
        n = comp.c.size
        A = comp.A.tocsc()
        lp = highspy.HighsLp()
        lp.num_col_ = n
        lp.num_row_ = A.shape[0]
        lp.col_cost_ = comp.c.astype(float)
        lp.col_lower_ = comp.lb.astype(float)
        lp.col_upper_ = comp.ub.astype(float)
        lp.row_lower_ = comp.row_lo.astype(float)
        lp.row_upper_ = comp.row_hi.astype(float)
        lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
        lp.a_matrix_.start_ = A.indptr.astype(np.int32)
        lp.a_matrix_.index_ = A.indices.astype(np.int32)
        lp.a_matrix_.value_ = A.data.astype(float)
        self.h = highspy.Highs()
        self.h.setOptionValue("output_flag", False)
        self.h.setOptionValue("solver", "simplex")
        self.h.setOptionValue("presolve", "off")
        self.h.passModel(lp)
        self.cols = np.arange(n, dtype=np.int32)

    def solve(self, lb: np.ndarray, ub: np.ndarray) -> LPResult:
        h = self.h
        h.changeColsBounds(self.cols.size, self.cols, lb.astype(float), ub.astype(float))
        h.run()
        st = h.getModelStatus()
        if st == highspy.HighsModelStatus.kOptimal:
            sol = h.getSolution()
            x = np.asarray(sol.col_value)
            red = np.asarray(sol.col_dual)
            return LPResult("optimal", x, float(self.comp.c @ x), red)
        if st == highspy.HighsModelStatus.kInfeasible:
            return LPResult("infeasible", None, np.inf)
        if st in (highspy.HighsModelStatus.kUnbounded,
                  highspy.HighsModelStatus.kUnboundedOrInfeasible):
            # disambiguate with a cold solve
            res = linprog(self.comp.c, A_ub=None, b_ub=None, A_eq=None, b_eq=None,
                          bounds=np.column_stack([lb, ub]), method="highs") \
                if self.comp.A.shape[0] == 0 else None
            if res is not None and res.status == 2:
                return LPResult("infeasible", None, np.inf)
            h.clearSolver()
            h.run()
            if h.getModelStatus() == highspy.HighsModelStatus.kInfeasible:
                return LPResult("infeasible", None, np.inf)
            return LPResult("unbounded", None, -np.inf)
        raise RuntimeError(f"LP engine failed with status {h.modelStatusToString(st)}")


class LinprogLP:
    """Cold-started HiGHS through :func:`scipy.optimize.linprog`; slower, kept as a cross-check."""

    name = "linprog"

    def __init__(self, comp: Compiled):
        self.comp = comp
        A = comp.A.tocsr()
        eq = np.isfinite(comp.row_lo) & np.isfinite(comp.row_hi) & (comp.row_lo == comp.row_hi)
        up = np.isfinite(comp.row_hi) & ~eq
        lo = np.isfinite(comp.row_lo) & ~eq
        self.A_eq = A[eq] if eq.any() else None
        self.b_eq = comp.row_hi[eq] if eq.any() else None
        parts, rhs = [], []
        if up.any():
            parts.append(A[up]); rhs.append(comp.row_hi[up])
        if lo.any():
            parts.append(-A[lo]); rhs.append(-comp.row_lo[lo])
        self.A_ub = sparse.vstack(parts).tocsr() if parts else None
        self.b_ub = np.concatenate(rhs) if rhs else None

    def solve(self, lb: np.ndarray, ub: np.ndarray) -> LPResult:
        res = linprog(self.comp.c, A_ub=self.A_ub, b_ub=self.b_ub, A_eq=self.A_eq,
                      b_eq=self.b_eq, bounds=np.column_stack([lb, ub]), method="highs-ds")
        if res.status == 0:
            red = np.asarray(res.lower.marginals) + np.asarray(res.upper.marginals)
            return LPResult("optimal", res.x, float(res.fun), red)
        if res.status == 2:
            return LPResult("infeasible", None, np.inf)
        if res.status == 3:
            return LPResult("unbounded", None, -np.inf)
        raise RuntimeError(f"LP engine failed: {res.message}")


class SimplexLP:
    """Relaxation solved by the internal dense Bland-rule simplex."""

    name = "simplex"

    def __init__(self, comp: Compiled):
        self.comp = comp
        self.A = comp.A.toarray()

    def solve(self, lb: np.ndarray, ub: np.ndarray) -> LPResult:
        return solve_bounded(self.comp.c, self.A, self.comp.row_lo, self.comp.row_hi, lb, ub)


ENGINES = {"highs": HighsLP, "linprog": LinprogLP, "simplex": SimplexLP}
