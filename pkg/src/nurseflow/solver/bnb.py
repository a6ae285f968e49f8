"""Best-first branch and bound for :class:`ConstraintSystem` models."""

from __future__ import annotations

import heapq
import math
import time
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..milp.system import ConstraintSystem
from .check import IntegrityError, verify
from .lp import ENGINES
from .propagate import INT_TOL, Propagator


class UnboundedError(RuntimeError):
    """The relaxation is unbounded; cannot happen for nonnegative-cost roster models."""


@dataclass(frozen=True)
class SolveLimits:
    time_limit: float = math.inf  # seconds
    node_limit: int = 10**9
    gap_target: float = 0.0  # relative, same normalization as Solution.gap
    seed: int = 0

    def __post_init__(self):
        if min(self.time_limit, self.node_limit, self.gap_target, self.seed) < 0:
            raise ValueError("solve limits must be nonnegative")


@dataclass(frozen=True, eq=False)
class Solution:
    status: str  # optimal | feasible | infeasible | limit
    values: Optional[np.ndarray]
    objective: float
    best_bound: float
    names: tuple[str, ...] = field(repr=False, default=())
    nodes: int = 0
    seconds: float = 0.0
    backend: str = "bnb"

    @property
    def gap(self) -> float:
        if self.values is None:
            return math.inf
        return (self.objective - self.best_bound) / max(1.0, abs(self.objective))

    @property
    def has_solution(self) -> bool:
        return self.values is not None

    @property
    def assignment(self) -> dict[str, float]:
        if self.values is None:
            return {}
        return dict(zip(self.names, map(float, self.values)))


def relative_gap(obj: float, bound: float) -> float:
    return (obj - bound) / max(1.0, abs(obj))


def _finish(system, status, x, obj, bound, nodes, t0, backend) -> Solution:
    names = tuple(v.name for v in system.variables)
    if x is not None:
        verify(system, x)
        obj = system.evaluate(x)
        bound = min(bound, obj)
    return Solution(status, x, obj, bound, names, nodes, time.perf_counter() - t0, backend)


def _quick_feasible(comp, x, tol: float = 1e-7) -> bool:
    if np.any(x < comp.lb - tol) or np.any(x > comp.ub + tol):
        return False
    act = comp.A @ x
    return bool(np.all(act >= comp.row_lo - tol) and np.all(act <= comp.row_hi + tol))


def objective_step(comp) -> float:
    """Granularity g of attainable objective values (0 when none can be proven).

    When every costed variable is integral and the costs are rationals with a
    common step, every feasible objective lies on constant + g*Z.
    """
    costed = np.flatnonzero(comp.c)
    if costed.size == 0 or not comp.integral[costed].all():
        return 0.0
    num, den = 0, 1
    for v in comp.c[costed]:
        f = Fraction(float(v)).limit_denominator(10**6)
        if abs(float(f) - v) > 1e-12 * max(1.0, abs(v)):
            return 0.0
        # gcd of fractions: gcd of numerators over lcm of denominators
        lcm = den * f.denominator // math.gcd(den, f.denominator)
        num = math.gcd(num * (lcm // den), abs(f.numerator) * (lcm // f.denominator))
        den = lcm
    return num / den


def solve(system: ConstraintSystem, limits: SolveLimits = SolveLimits(),
          lp_engine: str = "highs", backend: Optional[str] = None,
          dive_every: int = 50, priority: Optional[dict] = None) -> Solution:
    """Solve a minimization system to proven optimality unless a limit stops it first.

    Best-first search over LP bounds with bound propagation, reduced-cost
    fixing, a rounding heuristic and periodic LP dives for incumbents.
    Branching takes the most fractional integral variable, ties by registry
    order; among equal objectives the first incumbent found is kept.
    ``priority`` (default ``system.meta["branch_priority"]``) maps variable
    kinds to tiers: the most fractional choice is made within the highest
    tier that has a fractional variable.
    ``backend="milp"`` hands the system to HiGHS branch and cut instead;
    ``backend="external"`` runs the configured external engine.
    """
    if backend == "milp":
        from .highs import solve_milp
        return solve_milp(system, limits)
    if backend == "external":
        from .external import solve_external
        return solve_external(system, limits)
    if backend not in (None, "bnb"):
        raise ValueError(f"unknown backend {backend!r}")
    t0 = time.perf_counter()
    comp = system.compile()
    n = system.num_vars
    if n == 0:
        ok = bool(np.all(comp.row_lo <= 1e-9) and np.all(comp.row_hi >= -1e-9))
        if not ok:
            return _finish(system, "infeasible", None, math.inf, math.inf, 0, t0, "bnb")
        return _finish(system, "optimal", np.zeros(0), comp.constant, comp.constant, 0, t0, "bnb")

    lp = ENGINES[lp_engine](comp)
    prop = Propagator(comp)
    integral = comp.integral
    c0 = comp.constant
    step = objective_step(comp)
    tiers = priority if priority is not None else system.meta.get("branch_priority")
    tier = None
    if tiers:
        tier = np.array([tiers.get(v.kind, 0) for v in system.variables], dtype=np.int64)

    inc = {"x": None, "obj": math.inf}

    def target() -> float:
        """Objective a node must beat to matter (strict improvement only)."""
        v = inc["obj"]
        if not math.isfinite(v):
            return math.inf
        return v - (step if step > 0 else 0.0) + 1e-9 * max(1.0, abs(v))

    def dominated(b: float) -> bool:
        if inc["x"] is None:
            return False
        if step > 0:
            b = c0 + math.ceil((b - c0) / step - 1e-6) * step
            return b >= inc["obj"] - 1e-9 * max(1.0, abs(inc["obj"]))
        return b >= inc["obj"] - 1e-9 * max(1.0, abs(inc["obj"]))

    def try_incumbent(x) -> None:
        x = x.copy()
        x[integral] = np.round(x[integral])
        if not _quick_feasible(comp, x):
            return
        obj = float(comp.c @ x) + c0
        if obj < inc["obj"] - 1e-9 * max(1.0, abs(obj)):
            inc["x"], inc["obj"] = x, obj

    def relax(lb, ub):
        """Propagate and solve the LP; returns (lb, ub, obj, x, reduced) or None."""
        lb, ub, ok = prop.run(lb, ub)
        if not ok:
            return None
        res = lp.solve(lb, ub)
        if res.status == "infeasible":
            return None
        if res.status == "unbounded":
            raise UnboundedError("linear relaxation is unbounded")
        return lb, ub, res.objective + c0, np.clip(res.x, lb, ub), res.reduced

    def fractional(x):
        f = np.minimum(x - np.floor(x), np.ceil(x) - x)
        f[~integral] = 0.0
        f[f <= INT_TOL] = 0.0
        return f

    def dive(lb, ub, x) -> None:
        """Fix the least fractional variable to its nearest integer until integral."""
        for _ in range(int(integral.sum()) + 1):
            f = fractional(x)
            cand = np.flatnonzero(f > 0)
            if cand.size == 0:
                try_incumbent(x)
                return
            k = int(cand[np.argmin(f[cand])])
            lb, ub = lb.copy(), ub.copy()
            lb[k] = ub[k] = float(np.round(x[k]))
            out = relax(lb, ub)
            if out is None:
                return
            lb, ub, obj, x, _ = out
            if dominated(obj):
                return
            try_incumbent(x)

    def fix_by_reduced_cost(lb, ub, obj, red):
        if red is None or not math.isfinite(target()):
            return lb, ub
        room = target() - obj
        if room < 0:
            return lb, ub
        lb, ub = lb.copy(), ub.copy()
        free = integral & (ub > lb)
        with np.errstate(divide="ignore", invalid="ignore"):
            span = np.floor(room / np.abs(red) + 1e-9)
        up = free & (red > 1e-9) & np.isfinite(span)
        ub[up] = np.minimum(ub[up], lb[up] + span[up])
        down = free & (red < -1e-9) & np.isfinite(span)
        lb[down] = np.maximum(lb[down], ub[down] - span[down])
        return lb, ub

    heap: list = [(-math.inf, 0, comp.lb.copy(), comp.ub.copy())]
    seq = 1
    nodes = 0
    hit_limit = False
    while heap:
        if inc["x"] is not None and limits.gap_target > 0 and \
                relative_gap(inc["obj"], heap[0][0]) <= limits.gap_target:
            hit_limit = True
            break
        if nodes >= limits.node_limit or time.perf_counter() - t0 > limits.time_limit:
            hit_limit = True
            break
        bound, _, lb, ub = heapq.heappop(heap)
        if dominated(bound):
            continue
        nodes += 1
        out = relax(lb, ub)
        if out is None:
            continue
        lb, ub, obj, x, red = out
        if dominated(obj):
            continue
        f = fractional(x)
        try_incumbent(x)  # exact when integral, a rounding heuristic otherwise
        if f.max(initial=0.0) == 0.0:
            continue
        if nodes == 1 or (dive_every and nodes % dive_every == 0):
            dive(lb, ub, x)
            if dominated(obj):
                continue
        lb, ub = fix_by_reduced_cost(lb, ub, obj, red)
        if tier is not None:
            top = tier[f > 0].max()
            f = np.where(tier == top, f, 0.0)
        k = int(np.argmax(f))  # most fractional, lowest index on ties
        if x[k] < lb[k] or x[k] > ub[k]:
            # reduced-cost fixing moved the bound past x_k: re-queue the node
            heapq.heappush(heap, (obj, seq, lb, ub)); seq += 1
            continue
        down_ub = ub.copy(); down_ub[k] = math.floor(x[k])
        up_lb = lb.copy(); up_lb[k] = math.ceil(x[k])
        heapq.heappush(heap, (obj, seq, lb, down_ub)); seq += 1
        heapq.heappush(heap, (obj, seq, up_lb, ub)); seq += 1

    inc_x, inc_obj = inc["x"], inc["obj"]
    if hit_limit:
        open_bound = min((h[0] for h in heap), default=math.inf)
        bound = min(open_bound, inc_obj)
        status = "feasible" if inc_x is not None else "limit"
        if inc_x is not None and relative_gap(inc_obj, bound) <= 1e-12:
            status = "optimal"
        return _finish(system, status, inc_x, inc_obj, bound, nodes, t0, "bnb")
    if inc_x is None:
        return _finish(system, "infeasible", None, math.inf, math.inf, nodes, t0, "bnb")
    return _finish(system, "optimal", inc_x, inc_obj, inc_obj, nodes, t0, "bnb")


__all__ = ["SolveLimits", "Solution", "solve", "UnboundedError", "IntegrityError", "relative_gap"]
