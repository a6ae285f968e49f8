"""In-process HiGHS branch and cut via :func:`scipy.optimize.milp`."""

from __future__ import annotations

import math
import time

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from ..milp.system import ConstraintSystem
from .bnb import Solution, _finish
from .check import IntegrityError
from .bnb import SolveLimits


def solve_milp(system: ConstraintSystem, limits: SolveLimits = SolveLimits()) -> Solution:
    t0 = time.perf_counter()
    comp = system.compile()
    if system.num_vars == 0:
        from .bnb import solve
        return solve(system, limits)
    options = {"disp": False, "mip_rel_gap": limits.gap_target}
    if math.isfinite(limits.time_limit):
        options["time_limit"] = float(limits.time_limit)
    if limits.node_limit < 10**9:
        options["node_limit"] = int(limits.node_limit)
    cons = [LinearConstraint(comp.A, comp.row_lo, comp.row_hi)] if comp.A.shape[0] else []
    res = milp(comp.c, constraints=cons, integrality=comp.integral.astype(int),
               bounds=Bounds(comp.lb, comp.ub), options=options)
    bound = getattr(res, "mip_dual_bound", None)
    bound = -math.inf if bound is None or not np.isfinite(bound) else float(bound) + comp.constant
    nodes = int(getattr(res, "mip_node_count", 0) or 0)
    if res.status == 2:
        return _finish(system, "infeasible", None, math.inf, math.inf, nodes, t0, "milp")
    if res.status == 3:
        raise RuntimeError("MILP engine reports an unbounded system")
    if res.x is None:
        return _finish(system, "limit", None, math.inf, bound, nodes, t0, "milp")
    x = np.asarray(res.x, float).copy()
    x[comp.integral] = np.round(x[comp.integral])
    x = np.clip(x, comp.lb, comp.ub)
    if system.infeasibilities(x, 1e-6):
        raise IntegrityError("MILP engine returned an assignment that fails re-validation")
    status = "optimal" if res.status == 0 else "feasible"
    obj = system.evaluate(x)
    if status == "optimal" and limits.gap_target == 0:
        bound = max(bound, obj - 1e-9 * max(1.0, abs(obj)))
    return _finish(system, status, x, obj, bound, nodes, t0, "milp")
