"""Cost of fixed rosters under realized demand, with no optimization involved.

The stage-0 roster pays staffing, coverage against the planning demand,
ungranted requests and soft violations. Each stage node on a path pays
under/over-staffing of the aggregate head count, coverage against the
realized stage demand, adjustments against the stage-0 roster and the
stage's own soft violations. Averaging path costs with leaf probabilities
reproduces the extensive-form objective.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Mapping, Optional, Sequence

import numpy as np

from ..domain.rules import (
    ViolationCapError,
    block_hard_violations,
    block_soft_counts,
    validate_roster,
)
from ..domain.types import Instance, ModelError, Roster, horizon_limits, stage_limits, supply_matrix
from ..scenario import Node, ScenarioTree, node_demand


class InfeasibleRosterError(ModelError):
    """The roster breaks a hard rule, so it has no cost in the model."""

    def __init__(self, message: str, violations=()):
        super().__init__(message)
        self.violations = list(violations)


@dataclass(frozen=True)
class CostBreakdown:
    staffing: float = 0.0
    coverage: float = 0.0
    requests: float = 0.0
    violations: float = 0.0
    understaffing: float = 0.0
    overstaffing: float = 0.0
    adjustments: float = 0.0

    @property
    def total(self) -> float:
        return (self.staffing + self.coverage + self.requests + self.violations
                + self.understaffing + self.overstaffing + self.adjustments)

    def __add__(self, other: "CostBreakdown") -> "CostBreakdown":
        return CostBreakdown(*(getattr(self, f.name) + getattr(other, f.name) for f in fields(self)))

    def scaled(self, w: float) -> "CostBreakdown":
        return CostBreakdown(*(w * getattr(self, f.name) for f in fields(self)))

    def as_dict(self) -> dict:
        return {**asdict(self), "total": self.total}


def coverage_gap(assign: np.ndarray, demand: np.ndarray, slot_of) -> np.ndarray:
    """Signed (3, D) supply minus demand."""
    return supply_matrix(assign, slot_of) - np.asarray(demand, dtype=np.int64)


def _violation_cost(instance: Instance, counts: int, cap: int, i: int, where: str) -> float:
    if counts > cap:
        raise ViolationCapError(f"nurse {i} has {counts} soft violations in {where}, cap is {cap}")
    return instance.costs.violation_cost(counts)


def initial_cost(instance: Instance, roster: Roster) -> CostBreakdown:
    """Stage-0 cost of a horizon roster against the planning demand."""
    bad = validate_roster(Roster.from_assign(roster.assign, instance.demand, instance.catalog.slot_of,
                                             roster.scheduled), instance)
    if bad:
        raise InfeasibleRosterError(f"initial roster breaks {len(bad)} hard rules", bad)
    c = instance.costs
    days = list(instance.horizon.days)
    gap = coverage_gap(roster.assign, instance.demand, instance.catalog.slot_of)
    req = instance.request_mask()
    beta = roster.scheduled.astype(bool)
    ungranted = int((req & (roster.assign == 0) & beta[:, None, None]).sum())
    viol = 0.0
    for i, nurse in enumerate(instance.nurses):
        n = block_soft_counts(int(beta[i]), roster.assign[i], days, horizon_limits(nurse), instance).total
        viol += _violation_cost(instance, n, nurse.max_violations, i, "the initial roster")
    return CostBreakdown(staffing=c.staffing * int(beta.sum()),
                         coverage=c.coverage * float(np.abs(gap).sum()),
                         requests=c.request * ungranted, violations=viol)


def _stage_roster(instance: Instance, h: int, source: Roster) -> Roster:
    """Cut the stage-h days out of a horizon roster; nurses with no shift there are unscheduled."""
    days = instance.horizon.stages[h - 1]
    x = source.assign[:, days.start:days.stop]
    beta = source.scheduled.astype(bool) & x.reshape(x.shape[0], -1).any(axis=1)
    zeros = np.zeros((3, len(days)), np.int64)
    return Roster(beta, x, zeros, zeros)


def stage_cost(instance: Instance, h: int, initial: Roster, roster: Roster, demand: np.ndarray,
               nbar: int, ntil: int) -> CostBreakdown:
    """Cost of the stage-h detailed roster (stage days only) at one tree node."""
    days = list(instance.horizon.stages[h - 1])
    if roster.shape != (instance.num_nurses, len(days), instance.num_shifts):
        raise ModelError(f"stage {h} roster has shape {roster.shape}")
    pref = instance.preference_mask()
    bad = []
    for i, nurse in enumerate(instance.nurses):
        x = roster.assign[i]
        if x[:, ~pref[i]].any():
            bad.append(f"nurse {i} works a non-preferred shift in stage {h}")
        lim = stage_limits(nurse, instance.horizon, h - 1)
        bad.extend(block_hard_violations(i, int(roster.scheduled[i]), x, days, lim, instance))
    if bad:
        raise InfeasibleRosterError(f"stage {h} roster breaks {len(bad)} hard rules", bad)
    c = instance.costs
    gap = coverage_gap(roster.assign, demand, instance.catalog.slot_of)
    moved = int(np.abs(initial.assign[:, days[0]:days[-1] + 1].astype(int)
                       - roster.assign.astype(int)).sum())
    viol = 0.0
    for i, nurse in enumerate(instance.nurses):
        lim = stage_limits(nurse, instance.horizon, h - 1)
        n = block_soft_counts(int(roster.scheduled[i]), roster.assign[i], days, lim, instance).total
        viol += _violation_cost(instance, n, lim.max_violations, i, f"stage {h}")
    return CostBreakdown(coverage=c.coverage * float(np.abs(gap).sum()), violations=viol,
                         understaffing=c.understaffing * nbar, overstaffing=c.overstaffing * ntil,
                         adjustments=c.adjustment * moved)


def greedy_aggregates(initial_count: int, stage_counts: Sequence[int]) -> list[tuple[int, int, int]]:
    """Cheapest (n, nbar, ntil) per stage covering the scheduled counts.

    Never transferring and adding only the shortfall is optimal for
    nonnegative prices: any transfer would have to be undone at a later stage
    by an addition, which costs at least as much as keeping the nurse.
    """
    out, prev = [], initial_count
    for b in stage_counts:
        nbar = max(0, int(b) - prev)
        prev = prev + nbar
        out.append((prev, nbar, 0))
    return out


def _check_aggregates(initial_count, stage_counts, aggregates):
    prev = initial_count
    for h, ((n, nbar, ntil), b) in enumerate(zip(aggregates, stage_counts), start=1):
        if min(n, nbar, ntil) < 0 or n != prev + nbar - ntil or ntil > prev or b > n:
            raise InfeasibleRosterError(f"aggregate triple {(n, nbar, ntil)} at stage {h} is inconsistent")
        prev = n


def _check_policy(instance: Instance, rosters: Sequence[Roster]) -> None:
    slot_of = instance.catalog.slot_of
    used = np.zeros((instance.num_nurses, 3), dtype=bool)
    for r in rosters:
        used |= r.slot_used(slot_of).astype(bool)
    for i, nurse in enumerate(instance.nurses):
        if used[i].sum() > nurse.policy.slot_budget:
            raise InfeasibleRosterError(f"nurse {i} exceeds the work-policy slot budget across stages")


def _path_demands(instance: Instance, path, tree: Optional[ScenarioTree]) -> list[np.ndarray]:
    if isinstance(path, np.integer):
        path = int(path)
    if isinstance(path, (Node, int)):
        tree = tree if tree is not None else instance.tree
        if tree is None:
            raise ModelError("a node path needs a scenario tree")
        return [node_demand(tree, n) for n in tree.path_to(path)]
    return [np.asarray(q, dtype=np.int64) for q in path]


def resolve_recourse(instance: Instance, initial: Roster, recourse) -> dict[int, Roster]:
    """Stage rosters from a per-stage mapping, a horizon roster, or None (replay the initial roster)."""
    H = instance.horizon.num_stages
    if recourse is None:
        recourse = initial
    if isinstance(recourse, Roster):
        return {h: _stage_roster(instance, h, recourse) for h in range(1, H + 1)}
    return {h: recourse[h] for h in range(1, H + 1)}


def evaluate_under_path(instance: Instance, initial: Roster, path, recourse=None,
                        tree: Optional[ScenarioTree] = None,
                        aggregates: Optional[Sequence[tuple[int, int, int]]] = None) -> CostBreakdown:
    """Total cost of fixed rosters along one realized demand path.

    ``path`` is a leaf of the tree (node or id) or a list of stage demand
    matrices. ``recourse`` maps stage h to its roster over the stage days, or
    is a horizon roster to cut, or None to replay the initial roster without
    adjustments. Aggregates default to the cheapest consistent triples.
    """
    demands = _path_demands(instance, path, tree)
    H = instance.horizon.num_stages
    if len(demands) != H:
        raise ModelError(f"path has {len(demands)} stages, horizon has {H}")
    total = initial_cost(instance, initial)
    stages = resolve_recourse(instance, initial, recourse)
    _check_policy(instance, [initial, *stages.values()])
    n0 = int(initial.scheduled.sum())
    counts = [int(stages[h].scheduled.sum()) for h in range(1, H + 1)]
    if aggregates is None:
        aggregates = greedy_aggregates(n0, counts)
    else:
        _check_aggregates(n0, counts, aggregates)
    for h in range(1, H + 1):
        _, nbar, ntil = aggregates[h - 1]
        total = total + stage_cost(instance, h, initial, stages[h], demands[h - 1], nbar, ntil)
    return total


def evaluate_tree(instance: Instance, initial: Roster, recourse: Mapping[int, Roster],
                  tree: Optional[ScenarioTree] = None,
                  aggregates: Optional[Mapping[int, tuple[int, int, int]]] = None) -> CostBreakdown:
    """Expected cost over all leaves with one detailed roster per stage node.

    Equals the extensive-form objective at the same assignment.
    """
    tree = tree if tree is not None else instance.tree
    _check_policy(instance, [initial, *recourse.values()])
    out = CostBreakdown()
    for leaf in tree.leaves:
        nodes = tree.path_to(leaf)
        agg = None if aggregates is None else [aggregates[n.id] for n in nodes]
        cost = evaluate_under_path(instance, initial, leaf, {n.stage: recourse[n.id] for n in nodes},
                                   tree, agg)
        out = out + cost.scaled(leaf.probability)
    return out
