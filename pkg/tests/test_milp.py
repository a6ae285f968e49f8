import math
from dataclasses import replace

import numpy as np
import pytest

from nurseflow.domain import Horizon, Instance, ModelError, Roster, validate_roster
from nurseflow.milp import (
    VARIABLE_KINDS,
    build_deterministic,
    build_two_stage_extensive,
    build_two_stage_tp,
    decode,
    fix_roster,
    initial_block,
    node_blocks,
)
from nurseflow.instance_gen import CaseSpec, generate_case
from nurseflow.milp.oracle import brute_force_deterministic, nested_multistage_oracle
from nurseflow.scenario import single_path_tree
from nurseflow.solver import solve

from toys import deterministic_toys, tree_toys


def one_nurse_one_day():
    base = deterministic_toys(1)[0]
    nurse = replace(base.nurses[0], requests=frozenset())
    return Instance(Horizon(1, (1,)), (nurse,), base.catalog, base.costs, 1,
                    np.zeros((3, 1), int))


def test_one_nurse_one_day_without_demand_costs_nothing():
    sol = solve(build_deterministic(one_nurse_one_day()))
    assert sol.status == "optimal"
    assert sol.objective == 0.0


def test_deterministic_optimum_matches_enumeration():
    for inst in deterministic_toys(6, seed=21):
        sol = solve(build_deterministic(inst))
        obj, _ = brute_force_deterministic(inst)
        assert math.isclose(sol.objective, obj, abs_tol=1e-6)
        roster = decode(sol_sys := build_deterministic(inst), sol.values)["rosters"][()]
        assert validate_roster(roster, inst) == []
        assert sol_sys.num_vars == len(sol.values)


def test_every_emitted_variable_has_a_registered_kind():
    # 3-day stages from a Saturday leave room for every soft pattern inside a stage
    inst = generate_case(CaseSpec(3, 1.0, 2, days_per_stage=3, start_weekday=5, catalog="toy"))
    emitted = set()
    for sys in (build_deterministic(inst), build_two_stage_extensive(inst), build_two_stage_tp(inst)):
        assert sys.kinds <= set(VARIABLE_KINDS)
        assert sys.unreferenced() == []
        emitted |= sys.kinds
    assert emitted == set(VARIABLE_KINDS)


def test_extensive_form_has_one_block_and_aggregate_per_node():
    inst = tree_toys(1)[0]
    sys = build_two_stage_extensive(inst)
    blocks = node_blocks(sys)
    assert sorted(blocks) == [n.id for n in inst.tree.stage_nodes]
    assert sorted(sys.meta["aggregates"]) == sorted(blocks)
    # siblings share the parent's stage-1 decisions: only one copy of stage-1 variables per node
    stage1_days = set(inst.horizon.stages[0])
    for leaf in inst.tree.leaves:
        first = inst.tree.path_to(leaf)[0]
        assert set(blocks[first.id].days) == stage1_days
    for blk in blocks.values():
        assert set(blk.days) == set(inst.horizon.stages[blk.stage - 1])


def test_recourse_costs_are_weighted_by_node_probability():
    inst = tree_toys(1)[0]
    sys = build_two_stage_extensive(inst)
    for node_id, blk in node_blocks(sys).items():
        p = inst.tree.nodes[node_id].probability
        for u in blk.U.values():
            assert math.isclose(sys.objective[u], p * inst.costs.adjustment)
    stage1 = {n.id: n.probability for n in inst.tree.nodes_at(1)}
    assert sorted(round(p, 9) for p in stage1.values()) == [0.4, 0.6]


def test_tp_shares_one_aggregate_triple_per_stage():
    inst = tree_toys(1)[0]
    sys = build_two_stage_tp(inst)
    assert sorted(sys.meta["aggregates"]) == [1, 2]
    assert len(sys.meta["blocks"]) == 1 + 2 * len(inst.tree.leaves)


def test_extensive_optimum_matches_nested_enumeration_on_single_path():
    for inst in tree_toys(3, seed=8):
        tree = single_path_tree([inst.tree.stages[h][0].demand for h in range(2)])
        sol = solve(build_two_stage_extensive(inst, tree))
        assert math.isclose(sol.objective, nested_multistage_oracle(inst, tree), abs_tol=1e-6)


def test_zero_demand_everywhere_costs_nothing():
    inst = tree_toys(1)[0]
    tree = single_path_tree([np.zeros((3, 2), int), np.zeros((3, 2), int)])
    inst = replace(inst, demand=np.zeros((3, 4), int), tree=tree)
    assert nested_multistage_oracle(inst) == 0.0
    assert solve(build_two_stage_extensive(inst)).objective == 0.0


def test_fixing_the_initial_roster_pins_beta_and_x():
    inst = tree_toys(1)[0]
    sys = build_two_stage_extensive(inst, initial=Roster.empty(inst))
    sol = solve(sys)
    roster = decode(sys, sol.values)["rosters"][()]
    assert not roster.scheduled.any() and not roster.assign.any()


def test_fixing_a_nonpreferred_cell_is_rejected():
    inst = one_nurse_one_day()
    nurse = replace(inst.nurses[0], preferred_shifts=frozenset({"AM"}), requests=frozenset())
    inst = inst.with_nurses([nurse])
    sys = build_deterministic(inst)
    x = np.zeros((1, 1, 3), np.int8)
    x[0, 0, 2] = 1
    bad = Roster.from_assign(x, inst.demand, inst.catalog.slot_of)
    with pytest.raises(ModelError):
        fix_roster(sys, initial_block(sys), bad)


def test_trees_with_wrong_stage_count_are_rejected():
    inst = tree_toys(1)[0]
    with pytest.raises(ModelError):
        build_two_stage_extensive(inst, single_path_tree([np.zeros((3, 4), int)]))
    with pytest.raises(ModelError):
        build_two_stage_extensive(replace(inst, tree=None))
