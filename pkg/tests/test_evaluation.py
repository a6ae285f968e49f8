import math
from dataclasses import replace

import numpy as np
import pytest

from nurseflow.domain import Roster
from nurseflow.evaluation import (
    InfeasibleRosterError,
    compute_EEV,
    compute_VSS,
    evaluate_tree,
    evaluate_under_path,
    greedy_aggregates,
    initial_cost,
)
from nurseflow.milp import build_two_stage_extensive, decode
from nurseflow.scenario import single_path_tree
from nurseflow.solver import solve

from toys import tree_toys


def one_cell(inst, i, d, sid):
    x = np.zeros((inst.num_nurses, inst.num_days, inst.num_shifts), np.int8)
    if sid is not None:
        x[i, d, inst.catalog.index(sid)] = 1
    return Roster.from_assign(x, inst.demand, inst.catalog.slot_of, [0, 1])


@pytest.fixture
def toy():
    return tree_toys(1)[0]


def test_replaying_the_initial_roster_adjusts_nothing(toy):
    r = one_cell(toy, 1, 0, "PM")
    for leaf in toy.tree.leaves:
        assert evaluate_under_path(toy, r, leaf).adjustments == 0.0
        assert evaluate_under_path(toy, r, leaf, recourse=r).adjustments == 0.0


def test_moving_a_cell_costs_two_adjustments_and_dropping_one(toy):
    initial = one_cell(toy, 1, 0, "PM")
    leaf = toy.tree.leaves[0]
    ca = toy.costs.adjustment
    moved = evaluate_under_path(toy, initial, leaf, recourse=one_cell(toy, 1, 0, "AM"))
    dropped = evaluate_under_path(toy, initial, leaf, recourse=one_cell(toy, 1, 0, None))
    assert moved.adjustments == 2 * ca
    assert dropped.adjustments == ca


def test_greedy_aggregates_only_add_the_shortfall():
    assert greedy_aggregates(2, [1, 3, 2]) == [(2, 0, 0), (3, 1, 0), (3, 0, 0)]
    assert greedy_aggregates(0, [0, 0]) == [(0, 0, 0), (0, 0, 0)]


def test_tree_evaluation_equals_solver_objective():
    for inst in tree_toys(4, seed=13):
        sys = build_two_stage_extensive(inst)
        sol = solve(sys)
        dec = decode(sys, sol.values)
        rosters = dec["rosters"]
        recourse = {tag[0]: r for tag, r in rosters.items() if tag}
        cost = evaluate_tree(inst, rosters[()], recourse, aggregates=dec["aggregates"])
        assert math.isclose(cost.total, sol.objective, abs_tol=1e-6)


def test_empty_roster_cost_is_coverage_only(toy):
    cost = initial_cost(toy, Roster.empty(toy))
    assert cost.total == toy.costs.coverage * toy.demand.sum()


def test_hard_rule_breach_has_no_cost(toy):
    x = np.zeros((2, 4, 3), np.int8)
    x[1, 0, 2] = 1  # night
    x[1, 1, 0] = 1  # then morning
    bad = Roster.from_assign(x, toy.demand, toy.catalog.slot_of)
    with pytest.raises(InfeasibleRosterError):
        initial_cost(toy, bad)


def test_single_scenario_tree_has_zero_value_of_the_stochastic_solution(toy):
    tree = single_path_tree([toy.tree.stages[0][0].demand, toy.tree.stages[1][1].demand])
    report = compute_VSS(replace(toy, tree=tree))
    assert math.isclose(report.VSS_eev, 0.0, abs_tol=1e-6)
    assert math.isclose(report.VSS_tp, 0.0, abs_tol=1e-6)
    eev, ev = compute_EEV(replace(toy, tree=tree))
    assert math.isclose(eev.objective, ev.objective, abs_tol=1e-6)


def test_stochastic_benchmarks_are_ordered():
    for inst in tree_toys(3, seed=17):
        report = compute_VSS(inst)
        assert report.VSS_eev >= -1e-6
        assert report.VSS_tp >= -1e-6
        assert not report.non_proven
