"""Builders for the deterministic roster model and the two-stage extensive form.

Every rule family is emitted by :func:`_schedule_block`, which writes one
nurse-day-shift block over a contiguous run of days. The deterministic model
is a single block over the horizon; the extensive form adds one detailed
block per scenario node (or per leaf and stage for the two-stage variant)
tied to the stage-0 block through shared slot-usage variables ``y`` and the
adjustment variables ``U``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from ..domain.types import (
    Instance,
    ModelError,
    Roster,
    SLOTS,
    Slot,
    StageLimits,
    horizon_limits,
    stage_limits,
)
from ..scenario import ScenarioTree, node_demand
from .system import ConstraintSystem, Domain, Sense

# kind -> (symbol, meaning); every variable a builder emits has one of these kinds
VARIABLE_KINDS: dict[str, tuple[str, str]] = {
    "beta": ("β_i", "nurse i is scheduled in the initial roster"),
    "x": ("x_i^{d,s}", "initial roster assigns nurse i to shift s on day d"),
    "y": ("y_i^j", "nurse i works slot j somewhere in the horizon"),
    "qbar": ("q̄_j^d", "understaffed nurses in slot j on day d, initial roster"),
    "qtil": ("q̃_j^d", "overstaffed nurses in slot j on day d, initial roster"),
    "p1": ("p_{1,i}", "weekend work beyond the weekend cap"),
    "p2": ("p_{2,i}^d", "rest day d followed by an AM shift"),
    "p3": ("p_{3,i}^d", "night shifts on both weekend days starting Saturday d"),
    "p4": ("p_{4,i}^d", "isolated working day d+1 between rest days"),
    "v": ("v_i^m", "nurse i incurs exactly m soft violations"),
    "Y": ("Y_i^{d,s}", "requested cell (d, s) is not granted to a scheduled nurse i"),
    "n": ("n_h(ω_h)", "nurses available at stage h"),
    "nbar": ("n̄_h(ω_h)", "nurses added at stage h (understaffing)"),
    "ntil": ("ñ_h(ω_h)", "nurses transferred away at stage h (overstaffing)"),
    "beta_h": ("β_{i,h}(ω_h)", "nurse i is scheduled in stage h"),
    "x_h": ("x_{i,h}^{d,s}(ω_h)", "stage-h roster assigns nurse i to shift s on day d"),
    "qbar_h": ("q̄_{j,h}^d(ω_h)", "stage-h understaffing"),
    "qtil_h": ("q̃_{j,h}^d(ω_h)", "stage-h overstaffing"),
    "p1_h": ("p_{1,i}^h(ω_h)", "stage-h weekend excess"),
    "p2_h": ("p_{2,i}^{d,h}(ω_h)", "stage-h rest day followed by AM"),
    "p3_h": ("p_{3,i}^{d,h}(ω_h)", "stage-h weekend nights"),
    "p4_h": ("p_{4,i}^{d,h}(ω_h)", "stage-h isolated working day"),
    "v_h": ("v_{i,h}^m(ω_h)", "stage-h violation count indicator"),
    "U": ("U_{i,h}^{d,s}(ω_h)", "|x_i^{d,s} - x_{i,h}^{d,s}(ω_h)|"),
}


@dataclass
class Block:
    """Index maps of one scheduling block inside a system."""

    tag: tuple
    days: list[int]
    weight: float
    node: Optional[int] = None
    stage: int = 0  # 0 for the initial roster, h >= 1 for recourse blocks
    beta: dict[int, int] = field(default_factory=dict)
    x: dict[tuple[int, int, int], int] = field(default_factory=dict)
    qbar: dict[tuple[int, int], int] = field(default_factory=dict)
    qtil: dict[tuple[int, int], int] = field(default_factory=dict)
    soft: dict[int, list[int]] = field(default_factory=dict)
    v: dict[tuple[int, int], int] = field(default_factory=dict)
    U: dict[tuple[int, int, int], int] = field(default_factory=dict)


# branching tiers: initial-roster decisions first, then recourse rosters
BRANCH_PRIORITY = {"beta": 3, "x": 2, "beta_h": 1, "x_h": 1}


def _kind(base: str, recourse: bool) -> str:
    return base + "_h" if recourse else base


def _schedule_block(sys: ConstraintSystem, inst: Instance, block: Block,
                    limits: Sequence[StageLimits], demand: np.ndarray,
                    y: Mapping[tuple[int, int], int], recourse: bool) -> Block:
    """Emit variables and every per-block rule family; returns the filled block."""
    cat = inst.catalog
    slot_of = cat.slot_of
    pref = inst.preference_mask()
    hours = cat.hours
    hz = inst.horizon
    tag = block.tag
    days = block.days
    pos = {d: k for k, d in enumerate(days)}
    K = lambda base: _kind(base, recourse)  # noqa: E731
    sid = cat.ids

    for i in range(inst.num_nurses):
        block.beta[i] = sys.add_var(K("beta"), (*tag, i), Domain.BINARY)
        for d in days:
            for s in np.flatnonzero(pref[i]):
                block.x[i, d, int(s)] = sys.add_var(K("x"), (*tag, i, d, sid[s]), Domain.BINARY)

    def work(i, d, slots=SLOTS):
        return [(block.x[i, d, int(s)], 1.0) for s in np.flatnonzero(pref[i])
                if slot_of[s] in slots]

    for i, lim in enumerate(limits):
        b = block.beta[i]
        nm = lambda fam, d=None: f"{fam}[{','.join(map(str, tag))}|i{i}" + (f"d{d}]" if d is not None else "]")  # noqa: E731
        for d in days:
            w = work(i, d)
            sys.add_constraint(w + [(b, -1.0)], Sense.LE, 0, nm("single", d))
            # slot usage is shared with the horizon-level y variables
            for j in SLOTS:
                for t, _ in work(i, d, (j,)):
                    sys.add_constraint([(y[i, int(j)], 1.0), (t, -1.0)], Sense.GE, 0,
                                       nm(f"policy_link{j.name}", d))
        load = [(block.x[i, d, int(s)], hours[s]) for d in days for s in np.flatnonzero(pref[i])]
        sys.add_constraint(load + [(b, -lim.max_hours)], Sense.LE, 0, nm("hours_max"))
        sys.add_constraint(load + [(b, -lim.min_hours)], Sense.GE, 0, nm("hours_min"))
        n = len(days)
        for k in range(n - 2):
            d = days[k]
            terms = ([(t, -1.0) for t, _ in work(i, d, (Slot.N,))] + work(i, days[k + 1])
                     + [(t, -1.0) for t, _ in work(i, days[k + 2], (Slot.AM,))] + [(b, -1.0)])
            sys.add_constraint(terms, Sense.GE, -2, nm("ban_N_NW_AM", d))
        for k in range(n - 1):
            d = days[k]
            terms = work(i, d, (Slot.N,)) + work(i, days[k + 1], (Slot.AM, Slot.PM)) + [(b, -1.0)]
            sys.add_constraint(terms, Sense.LE, 0, nm("ban_N_day", d))
        for week in hz.weeks:
            wd = [d for d in week if d in pos]
            if wd:
                terms = [t for d in wd for t in work(i, d)] + [(b, lim.min_rest_days_per_week)]
                sys.add_constraint(terms, Sense.LE, 7, nm("weekly_rest", week.start))
        f = lim.max_consecutive_work
        for k in range(n - f):
            terms = [t for d in days[k:k + f + 1] for t in work(i, d)] + [(b, -float(f))]
            sys.add_constraint(terms, Sense.LE, 0, nm("consecutive", days[k]))

        # soft patterns
        soft = []
        p1 = sys.add_var(K("p1"), (*tag, i), Domain.INTEGER)
        soft.append(p1)
        wk = [t for d in days if hz.weekday(d) >= 5 for t in work(i, d)]
        sys.add_constraint(wk + [(p1, -1.0), (b, -float(lim.max_weekend_work))], Sense.LE, 0,
                           nm("weekend"))
        for k in range(n - 1):
            d = days[k]
            p2 = sys.add_var(K("p2"), (*tag, i, d), Domain.BINARY)
            soft.append(p2)
            terms = (work(i, d) + [(t, -1.0) for t, _ in work(i, days[k + 1], (Slot.AM,))]
                     + [(p2, 1.0), (b, -1.0)])
            sys.add_constraint(terms, Sense.GE, -1, nm("nw_am", d))
        for k in range(n - 1):
            d = days[k]
            if hz.weekday(d) != 5:
                continue
            p3 = sys.add_var(K("p3"), (*tag, i, d), Domain.BINARY)
            soft.append(p3)
            terms = ([(t, -1.0) for t, _ in work(i, d, (Slot.N,))]
                     + [(t, -1.0) for t, _ in work(i, days[k + 1], (Slot.N,))]
                     + [(p3, 1.0), (b, -1.0)])
            sys.add_constraint(terms, Sense.GE, -2, nm("weekend_nights", d))
        for k in range(n - 2):
            d = days[k]
            p4 = sys.add_var(K("p4"), (*tag, i, d), Domain.BINARY)
            soft.append(p4)
            terms = (work(i, d) + [(t, -1.0) for t, _ in work(i, days[k + 1])]
                     + work(i, days[k + 2]) + [(p4, 1.0), (b, -1.0)])
            sys.add_constraint(terms, Sense.GE, -1, nm("isolated", d))
        block.soft[i] = soft
        vs = []
        for m in range(1, lim.max_violations + 1):
            block.v[i, m] = sys.add_var(K("v"), (*tag, i, m), Domain.BINARY)
            vs.append((block.v[i, m], float(m)))
        sys.add_constraint(vs + [(p, -1.0) for p in soft], Sense.EQ, 0, nm("violations"))
        if vs:
            sys.add_constraint([(j, 1.0) for j, _ in vs], Sense.LE, 1, nm("violation_level"))

    # coverage balance per slot and day
    for k, d in enumerate(days):
        for j in SLOTS:
            qb = sys.add_var(K("qbar"), (*tag, j.name, d), Domain.INTEGER)
            qt = sys.add_var(K("qtil"), (*tag, j.name, d), Domain.INTEGER)
            block.qbar[int(j), d] = qb
            block.qtil[int(j), d] = qt
            terms = [t for i in range(inst.num_nurses) for t in work(i, d, (j,))]
            sys.add_constraint(terms + [(qb, 1.0), (qt, -1.0)], Sense.EQ, int(demand[j, k]),
                               f"coverage[{','.join(map(str, tag))}|{j.name}d{d}]")
    return block


def _block_objective(sys: ConstraintSystem, inst: Instance, block: Block, staffing: bool) -> None:
    c = inst.costs
    w = block.weight
    terms = [(q, w * c.coverage) for q in (*block.qbar.values(), *block.qtil.values())]
    terms += [(j, w * c.violation_cost(m)) for (i, m), j in block.v.items()]
    if staffing:
        terms += [(b, w * c.staffing) for b in block.beta.values()]
    sys.add_objective(terms)


def _horizon_y(sys: ConstraintSystem, inst: Instance) -> dict[tuple[int, int], int]:
    y = {}
    for i, nurse in enumerate(inst.nurses):
        for j in SLOTS:
            y[i, int(j)] = sys.add_var("y", (i, j.name), Domain.BINARY)
        sys.add_constraint([(y[i, int(j)], 1.0) for j in SLOTS], Sense.LE,
                           nurse.policy.slot_budget, f"policy[i{i}]")
    return y


def _requests(sys: ConstraintSystem, inst: Instance, block: Block) -> None:
    c = inst.costs.request
    req = inst.request_mask()
    sid = inst.catalog.ids
    for i, d, s in zip(*np.nonzero(req)):
        i, d, s = int(i), int(d), int(s)
        Y = sys.add_var("Y", (i, d, sid[s]), Domain.BINARY)
        x = block.x[i, d, s]
        b = block.beta[i]
        nm = f"request[i{i}d{d}{sid[s]}]"
        sys.add_constraint([(Y, 1.0), (x, 1.0)], Sense.LE, 1, nm + "a")
        sys.add_constraint([(Y, 1.0), (b, -1.0)], Sense.LE, 0, nm + "b")
        sys.add_constraint([(Y, 1.0), (b, -1.0), (x, 1.0)], Sense.GE, 0, nm + "c")
        sys.add_objective([(Y, c)])


def _initial_block(sys: ConstraintSystem, inst: Instance) -> tuple[Block, dict]:
    y = _horizon_y(sys, inst)
    block = Block(tag=(), days=list(inst.horizon.days), weight=1.0)
    _schedule_block(sys, inst, block, [horizon_limits(n) for n in inst.nurses], inst.demand, y,
                    recourse=False)
    sys.add_constraint([(b, 1.0) for b in block.beta.values()], Sense.LE, inst.total_nurses,
                       "capacity")
    _requests(sys, inst, block)
    _block_objective(sys, inst, block, staffing=True)
    return block, y


def build_deterministic(instance: Instance) -> ConstraintSystem:
    """Linearized deterministic roster model over the whole horizon."""
    sys = ConstraintSystem(f"deterministic:{instance.name}")
    sys.meta["branch_priority"] = BRANCH_PRIORITY
    block, y = _initial_block(sys, instance)
    sys.meta.update(model="deterministic", instance=instance, blocks=[block], y=y)
    return sys


def _recourse_block(sys, inst, x0: Block, y, tag, days, stage, weight, node, demand) -> Block:
    limits = [stage_limits(n, inst.horizon, stage - 1) for n in inst.nurses]
    blk = Block(tag=tag, days=list(days), weight=weight, node=node, stage=stage)
    _schedule_block(sys, inst, blk, limits, demand, y, recourse=True)
    c = inst.costs
    for (i, d, s), xh in blk.x.items():
        u = sys.add_var("U", (*tag, i, d, inst.catalog.ids[s]), Domain.INTEGER)
        blk.U[i, d, s] = u
        x = x0.x[i, d, s]
        nm = f"adjust[{','.join(map(str, tag))}|i{i}d{d}{inst.catalog.ids[s]}]"
        sys.add_constraint([(x, 1.0), (xh, -1.0), (u, -1.0)], Sense.LE, 0, nm + "+")
        sys.add_constraint([(xh, 1.0), (x, -1.0), (u, -1.0)], Sense.LE, 0, nm + "-")
        sys.add_objective([(u, weight * c.adjustment)])
    _block_objective(sys, inst, blk, staffing=False)
    return blk


def _aggregate(sys: ConstraintSystem, inst: Instance, index: tuple, prev_terms, weight: float):
    """n = prev + nbar - ntil, ntil <= prev; returns the three variable indices."""
    n = sys.add_var("n", index, Domain.INTEGER)
    nb = sys.add_var("nbar", index, Domain.INTEGER)
    nt = sys.add_var("ntil", index, Domain.INTEGER)
    tagname = ",".join(map(str, index))
    sys.add_constraint([(n, 1.0), (nb, -1.0), (nt, 1.0)] + [(j, -c) for j, c in prev_terms],
                       Sense.EQ, 0, f"conservation[{tagname}]")
    sys.add_constraint([(nt, 1.0)] + [(j, -c) for j, c in prev_terms], Sense.LE, 0,
                       f"transfer[{tagname}]")
    c = inst.costs
    sys.add_objective([(nb, weight * c.understaffing), (nt, weight * c.overstaffing)])
    return n, nb, nt


def _check_tree(instance: Instance, tree: ScenarioTree) -> None:
    hz = instance.horizon
    if tree.num_stages != hz.num_stages:
        raise ModelError(f"tree has {tree.num_stages} stages, horizon has {hz.num_stages}")
    for h, rs in enumerate(tree.stages, start=1):
        for r in rs:
            if r.demand.shape[1] != hz.stage_lengths[h - 1]:
                raise ModelError(f"stage {h} realization {r.label} covers "
                                 f"{r.demand.shape[1]} days, stage has {hz.stage_lengths[h - 1]}")


def build_two_stage_extensive(instance: Instance, tree: Optional[ScenarioTree] = None,
                              initial: Optional[Roster] = None) -> ConstraintSystem:
    """Extensive form: initial roster plus aggregate and detailed recourse at each tree node.

    Aggregates and the detailed block of node ω_h are indexed by ω_h alone, so
    the system is nonanticipative by construction. The stage-1 conservation
    row anchors on the number of scheduled nurses in the initial roster.
    ``initial`` fixes the stage-0 main variables (β, x).
    """
    tree = tree if tree is not None else instance.tree
    if tree is None:
        raise ModelError("stochastic model needs a scenario tree")
    _check_tree(instance, tree)
    sys = ConstraintSystem(f"extensive:{instance.name}")
    sys.meta["branch_priority"] = BRANCH_PRIORITY
    x0, y = _initial_block(sys, instance)
    stages = instance.horizon.stages
    anchor = [(b, 1.0) for b in x0.beta.values()]
    agg: dict[int, tuple[int, int, int]] = {}
    blocks = [x0]
    for node in tree.stage_nodes:
        prev = anchor if node.stage == 1 else [(agg[node.parent][0], 1.0)]
        agg[node.id] = _aggregate(sys, instance, (node.id,), prev, node.probability)
        blk = _recourse_block(sys, instance, x0, y, (node.id,), stages[node.stage - 1],
                              node.stage, node.probability, node.id, node_demand(tree, node))
        sys.add_constraint([(b, 1.0) for b in blk.beta.values()] + [(agg[node.id][0], -1.0)],
                           Sense.LE, 0, f"capacity[{node.id}]")
        blocks.append(blk)
    sys.meta.update(model="extensive", instance=instance, tree=tree, blocks=blocks, y=y,
                    aggregates=agg)
    if initial is not None:
        return fix_roster(sys, x0, initial)
    return sys


def build_two_stage_tp(instance: Instance, tree: Optional[ScenarioTree] = None) -> ConstraintSystem:
    """Variant with aggregate decisions fixed per stage before any demand is seen.

    One aggregate copy per stage is shared by all scenarios; each leaf carries a
    detailed block for every stage, weighted by the leaf probability.
    """
    tree = tree if tree is not None else instance.tree
    if tree is None:
        raise ModelError("stochastic model needs a scenario tree")
    _check_tree(instance, tree)
    sys = ConstraintSystem(f"tp:{instance.name}")
    sys.meta["branch_priority"] = BRANCH_PRIORITY
    x0, y = _initial_block(sys, instance)
    stages = instance.horizon.stages
    prev = [(b, 1.0) for b in x0.beta.values()]
    agg = {}
    for h in range(1, tree.num_stages + 1):
        agg[h] = _aggregate(sys, instance, (f"h{h}",), prev, 1.0)
        prev = [(agg[h][0], 1.0)]
    blocks = [x0]
    for leaf in tree.leaves:
        for node in tree.path_to(leaf):
            h = node.stage
            blk = _recourse_block(sys, instance, x0, y, (f"L{leaf.id}", f"h{h}"), stages[h - 1], h,
                                  leaf.probability, node.id, node_demand(tree, node))
            sys.add_constraint([(b, 1.0) for b in blk.beta.values()] + [(agg[h][0], -1.0)],
                               Sense.LE, 0, f"capacity[L{leaf.id},h{h}]")
            blocks.append(blk)
    sys.meta.update(model="tp", instance=instance, tree=tree, blocks=blocks, y=y, aggregates=agg)
    return sys


# -- fixing and decoding -----------------------------------------------------

def fix_roster(sys: ConstraintSystem, block: Block, roster: Roster,
               day_offset: int = 0) -> ConstraintSystem:
    """Fix a block's β and x to a roster; the roster's day axis starts at ``day_offset``."""
    fixes = {}
    for i, b in block.beta.items():
        fixes[b] = float(roster.scheduled[i])
    for (i, d, s), j in block.x.items():
        fixes[j] = float(roster.assign[i, d - day_offset, s])
    extra = roster.assign.copy()
    for (i, d, s) in block.x:
        extra[i, d - day_offset, s] = 0
    if extra.any():
        raise ModelError("roster assigns shifts outside the nurse's preferred set")
    return sys.fixed(fixes)


def fix_blocks(sys: ConstraintSystem, rosters: Mapping[tuple, Roster]) -> ConstraintSystem:
    """Fix several blocks at once; ``rosters`` maps block tags to rosters over the block's days."""
    out = sys
    for blk in sys.meta["blocks"]:
        if blk.tag in rosters:
            out = fix_roster(out, blk, rosters[blk.tag], day_offset=blk.days[0])
    return out


def fix_aggregates(sys: ConstraintSystem, values: Mapping) -> ConstraintSystem:
    """Fix (n, nbar, ntil) triples keyed like ``sys.meta['aggregates']``."""
    fixes = {}
    for key, triple in values.items():
        for j, v in zip(sys.meta["aggregates"][key], triple):
            fixes[j] = float(v)
    return sys.fixed(fixes)


def decode_block(sys: ConstraintSystem, block: Block, values: Sequence[float]) -> Roster:
    inst: Instance = sys.meta["instance"]
    I, S = inst.num_nurses, inst.num_shifts
    D = len(block.days)
    d0 = block.days[0]
    beta = np.zeros(I, np.int8)
    x = np.zeros((I, D, S), np.int8)
    for i, j in block.beta.items():
        beta[i] = round(values[j])
    for (i, d, s), j in block.x.items():
        x[i, d - d0, s] = round(values[j])
    under = np.zeros((3, D), np.int64)
    over = np.zeros((3, D), np.int64)
    for (jslot, d), j in block.qbar.items():
        under[jslot, d - d0] = round(values[j])
    for (jslot, d), j in block.qtil.items():
        over[jslot, d - d0] = round(values[j])
    return Roster(beta, x, under, over)


def decode(sys: ConstraintSystem, values: Sequence[float]) -> dict:
    """Rosters per block tag plus aggregate triples."""
    out = {"rosters": {b.tag: decode_block(sys, b, values) for b in sys.meta["blocks"]}}
    if "aggregates" in sys.meta:
        out["aggregates"] = {k: tuple(int(round(values[j])) for j in t)
                             for k, t in sys.meta["aggregates"].items()}
    return out


def initial_block(sys: ConstraintSystem) -> Block:
    return sys.meta["blocks"][0]


def node_blocks(sys: ConstraintSystem) -> dict[int, Block]:
    """Detailed blocks of an extensive-form system keyed by tree node id."""
    return {b.node: b for b in sys.meta["blocks"][1:]}
