"""Exhaustive-enumeration oracles for tiny instances.

These work from the roster semantics in :mod:`nurseflow.domain.rules`, never
from the constraint systems, so they give an independent reference value for
the builders and the solver.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..domain.rules import block_hard_violations, block_soft_counts
from ..domain.types import (
    Instance,
    ModelError,
    Roster,
    StageLimits,
    horizon_limits,
    stage_limits,
    supply_matrix,
)
from ..scenario import ScenarioTree, node_demand

MAX_ENUMERATION = 400_000


class OracleScaleError(ModelError):
    """The instance is too large for exhaustive enumeration."""


@dataclass(frozen=True)
class BlockOption:
    beta: int
    x: np.ndarray  # (days, shifts)
    soft_total: int
    slots: frozenset[int]


def enumerate_block(inst: Instance, i: int, days: Sequence[int], limits: StageLimits) -> list[BlockOption]:
    """All rule-abiding (β, x) choices of nurse i over ``days``, ignoring the slot budget."""
    pref = np.flatnonzero(inst.preference_mask()[i])
    slot_of = inst.catalog.slot_of
    S, D = inst.num_shifts, len(days)
    out = [BlockOption(0, np.zeros((D, S), np.int8), 0, frozenset())]
    for choice in itertools.product([-1, *pref.tolist()], repeat=D):
        x = np.zeros((D, S), np.int8)
        for k, s in enumerate(choice):
            if s >= 0:
                x[k, s] = 1
        if block_hard_violations(i, 1, x, days, limits, inst):
            continue
        total = block_soft_counts(1, x, days, limits, inst).total
        if total > limits.max_violations:
            continue
        slots = frozenset(int(slot_of[s]) for s in choice if s >= 0)
        out.append(BlockOption(1, x, total, slots))
    return out


def _guard_size(inst: Instance, days: int) -> None:
    pref = inst.preference_mask()
    size = 1
    for i in range(inst.num_nurses):
        size *= 1 + (int(pref[i].sum()) + 1) ** days
    if size > MAX_ENUMERATION:
        raise OracleScaleError(f"enumeration would visit {size} rosters (limit {MAX_ENUMERATION})")


def _viol_cost(inst: Instance, total: int) -> float:
    return inst.costs.violation_cost(total)


def brute_force_deterministic(inst: Instance) -> tuple[float, Roster]:
    """Minimum deterministic roster cost by enumerating every feasible roster."""
    _guard_size(inst, inst.num_days)
    days = list(inst.horizon.days)
    c = inst.costs
    req = inst.request_mask()
    slot_of = inst.catalog.slot_of
    per_nurse = []
    for i, nurse in enumerate(inst.nurses):
        opts = [o for o in enumerate_block(inst, i, days, horizon_limits(nurse))
                if len(o.slots) <= nurse.policy.slot_budget]
        scored = []
        for o in opts:
            unmet = int((req[i] & (o.x == 0)).sum()) * o.beta
            scored.append((c.staffing * o.beta + c.request * unmet + _viol_cost(inst, o.soft_total), o))
        per_nurse.append(scored)
    best, best_roster = np.inf, None
    for combo in itertools.product(*per_nurse):
        betas = [o.beta for _, o in combo]
        if sum(betas) > inst.total_nurses:
            continue
        assign = np.stack([o.x for _, o in combo])
        gap = supply_matrix(assign, slot_of) - inst.demand
        cost = sum(s for s, _ in combo) + c.coverage * float(np.abs(gap).sum())
        if cost < best - 1e-12:
            best = cost
            best_roster = Roster.from_assign(assign, inst.demand, slot_of, betas)
    return float(best), best_roster


def _maximal_slot_sets(used: frozenset[int], budget: int) -> list[frozenset[int]]:
    """Slot-usage sets y ⊇ used of size ≤ budget that no other such set strictly contains.

    Enlarging y only relaxes the later stages and carries no cost, so the
    maximal sets dominate every other choice.
    """
    if len(used) > budget:
        return []
    free = [j for j in range(3) if j not in used]
    k = min(budget, 3) - len(used)
    return [used | frozenset(extra) for extra in itertools.combinations(free, k)]


class _NodeTable:
    """Detailed-stage options at one tree node for a fixed pair of slot-usage sets."""

    def __init__(self, inst: Instance, stage_opts, ys, demand, days):
        c = inst.costs
        slot_of = inst.catalog.slot_of
        allowed = [[o for o in stage_opts[i] if o.slots <= ys[i]] for i in range(inst.num_nurses)]
        combos = list(itertools.product(*allowed))
        self.beta_sum = np.array([sum(o.beta for o in cb) for cb in combos])
        X = np.stack([np.stack([o.x for o in cb]) for cb in combos])  # (K, I, D, S)
        self.X = X.reshape(len(combos), -1).astype(np.int16)
        base = []
        for cb, x in zip(combos, X):
            gap = supply_matrix(x, slot_of) - demand
            base.append(c.coverage * float(np.abs(gap).sum())
                        + sum(_viol_cost(inst, o.soft_total) for o in cb))
        self.base = np.array(base)
        self.adjust = c.adjustment

    def cost(self, patterns: np.ndarray, n: int) -> np.ndarray:
        """Best detailed cost per stage-0 pattern row when at most n nurses work."""
        ok = self.beta_sum <= n
        if not ok.any():
            return np.full(len(patterns), np.inf)
        adj = np.abs(patterns[:, None, :] - self.X[None, ok, :]).sum(axis=2)
        return (self.base[ok][None, :] + self.adjust * adj).min(axis=1)


def nested_multistage_oracle(inst: Instance, tree: Optional[ScenarioTree] = None) -> float:
    """Optimal expected cost of the nested multi-stage model by exhaustive enumeration.

    Stage-0 rosters (β, x, y) are enumerated outright; every later stage is solved
    by the backward recursion over tree nodes, minimizing the aggregate moves
    (n̄, ñ) and the detailed roster given the parent's staffing level.
    """
    tree = tree if tree is not None else inst.tree
    if tree is None:
        raise ModelError("stochastic oracle needs a scenario tree")
    if inst.num_nurses > 2 or tree.num_stages > 2 or any(len(r) > 2 for r in tree.stages):
        raise OracleScaleError("oracle limited to 2 nurses, 2 stages and 2 realizations per stage")
    _guard_size(inst, inst.num_days)
    hz = inst.horizon
    c = inst.costs
    I = inst.num_nurses
    slot_of = inst.catalog.slot_of
    req = inst.request_mask()
    days = list(hz.days)
    stages = hz.stages

    stage0 = []
    for i, nurse in enumerate(inst.nurses):
        opts = []
        for o in enumerate_block(inst, i, days, horizon_limits(nurse)):
            unmet = int((req[i] & (o.x == 0)).sum()) * o.beta
            cost = c.staffing * o.beta + c.request * unmet + _viol_cost(inst, o.soft_total)
            for y in _maximal_slot_sets(o.slots, nurse.policy.slot_budget):
                opts.append((cost, o, y))
        stage0.append(opts)
    stage_opts = {h: [enumerate_block(inst, i, list(stages[h - 1]),
                                      stage_limits(n, hz, h - 1)) for i, n in enumerate(inst.nurses)]
                  for h in range(1, tree.num_stages + 1)}

    # group stage-0 rosters by their slot-usage sets
    groups: dict[tuple, list] = {}
    for combo in itertools.product(*stage0):
        if sum(o.beta for _, o, _ in combo) > inst.total_nurses:
            continue
        groups.setdefault(tuple(y for _, _, y in combo), []).append(combo)

    best = np.inf
    for ys, combos in groups.items():
        assign = np.stack([np.stack([o.x for _, o, _ in cb]) for cb in combos])  # (C, I, D, S)
        u2 = np.array([sum(s for s, _, _ in cb) for cb in combos])
        u2 = u2 + c.coverage * np.abs(
            np.stack([supply_matrix(a, slot_of) for a in assign]) - inst.demand).sum(axis=(1, 2))
        n0 = np.array([sum(o.beta for _, o, _ in cb) for cb in combos])
        # stage-0 assignment restricted to each stage, as unique pattern ids
        pats, pat_ids = {}, {}
        for h in range(1, tree.num_stages + 1):
            sl = assign[:, :, stages[h - 1].start:stages[h - 1].stop, :].reshape(len(combos), -1)
            uniq, inv = np.unique(sl, axis=0, return_inverse=True)
            pats[h], pat_ids[h] = uniq.astype(np.int16), inv.reshape(-1)
        tables = {nd.id: _NodeTable(inst, stage_opts[nd.stage], ys, node_demand(tree, nd),
                                    list(stages[nd.stage - 1])) for nd in tree.stage_nodes}
        memo: dict = {}

        def value(node_id: int, n_prev: int) -> np.ndarray:
            """Expected cost-to-go from a stage node, per stage-0 roster in the group."""
            key = (node_id, n_prev)
            if key in memo:
                return memo[key]
            nd = tree.nodes[node_id]
            h = nd.stage
            out = np.full(len(combos), np.inf)
            for nbar in range(0, I + 1):
                for ntil in range(0, n_prev + 1):
                    n = n_prev + nbar - ntil
                    v = c.understaffing * nbar + c.overstaffing * ntil
                    v = v + tables[node_id].cost(pats[h], n)[pat_ids[h]]
                    for ch in nd.children:
                        w = tree.nodes[ch].probability / nd.probability
                        v = v + w * value(ch, n)
                    out = np.minimum(out, v)
            memo[key] = out
            return out

        total = u2.astype(float)
        rec = np.zeros(len(combos))
        for n in np.unique(n0):
            sel = n0 == n
            acc = np.zeros(len(combos))
            for nd in tree.nodes_at(1):
                acc = acc + nd.probability * value(nd.id, int(n))
            rec[sel] = acc[sel]
        best = min(best, float((total + rec).min()))
    return best
