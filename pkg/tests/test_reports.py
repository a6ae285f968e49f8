import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nurseflow.domain import Roster
from nurseflow.evaluation import (
    FlexibilityPoint,
    coverage_gap_report,
    flexibility_from_csv,
    flexibility_level,
    flexibility_to_csv,
    mean_flexibility_by_level,
    reward_distribution,
    roster_from_csv,
    roster_to_csv,
    share_above,
)
from nurseflow.evaluation.reports import RewardDistribution, CoverageGapReport
from nurseflow.milp import build_deterministic, decode
from nurseflow.solver import solve

from toys import deterministic_toys, tree_toys


def test_crf_hand_example():
    dist = reward_distribution([1.0, 2.0, 2.0, 3.0])
    assert dist.thresholds.tolist() == [1.0, 2.0, 3.0]
    assert dist.crf.tolist() == [1.0, 0.75, 0.25]
    assert dist.at(2.5) == 0.25 and dist.at(0.0) == 1.0 and dist.at(9.0) == 0.0
    assert share_above([1.0, 2.0, 2.0, 3.0], 2.0) == 0.25


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50))
def test_crf_is_nonincreasing_from_one(samples):
    dist = reward_distribution(samples)
    assert dist.crf[0] == 1.0
    assert np.all(np.diff(dist.crf) < 0)
    back = RewardDistribution.from_csv(dist.to_csv())
    assert np.array_equal(back.thresholds, dist.thresholds) and np.array_equal(back.crf, dist.crf)


def test_crf_rejects_empty_and_nonfinite():
    with pytest.raises(ValueError):
        reward_distribution([])
    with pytest.raises(ValueError):
        reward_distribution([1.0, float("nan")])


def test_coverage_gap_round_trip():
    inst = deterministic_toys(1)[0]
    sol = solve(build_deterministic(inst))
    roster = decode(build_deterministic(inst), sol.values)["rosters"][()]
    report = coverage_gap_report(roster, inst.demand, inst)
    assert np.array_equal(report.gap, -roster.under + roster.over)
    back = CoverageGapReport.from_csv(report.to_csv())
    assert np.array_equal(back.gap, report.gap)
    assert report.summary()["mismatches"] == int(np.count_nonzero(report.gap))


def test_flexibility_round_trip_and_means():
    points = [FlexibilityPoint("a", 0.0, 0.5, 1, 2, False), FlexibilityPoint("b", 0.0, 1.0, 2, 2, False),
              FlexibilityPoint("c", 0.5, 0.25, 1, 4, False)]
    assert flexibility_from_csv(flexibility_to_csv(points)) == points
    assert mean_flexibility_by_level(points) == {0.0: 0.75, 0.5: 0.25}


def test_flexibility_of_the_empty_roster():
    inst = tree_toys(1)[0]
    flex, granted, total, flagged = flexibility_level(Roster.empty(inst), inst)
    assert (flex, granted, flagged) == (0.0, 0, False) and total == 2
    no_requests = inst.with_nurses([n.__class__(**{**n.__dict__, "requests": frozenset()})
                                    for n in inst.nurses])
    assert flexibility_level(Roster.empty(no_requests), no_requests) == (1.0, 0, 0, True)


def test_roster_csv_round_trip():
    for inst in deterministic_toys(5, seed=9):
        sol = solve(build_deterministic(inst))
        roster = decode(build_deterministic(inst), sol.values)["rosters"][()]
        text = roster_to_csv(roster, inst)
        back = roster_from_csv(text, inst)
        assert np.array_equal(back.assign, roster.assign)
        assert np.array_equal(back.scheduled, roster.assign.reshape(2, -1).any(axis=1))
        assert roster_to_csv(back, inst) == text


def test_roster_csv_with_day_offset_uses_the_matching_demand():
    inst = tree_toys(1)[0]
    x = np.zeros((2, 2, 3), np.int8)
    x[1, 0, 1] = 1
    stage = Roster.from_assign(x, inst.demand[:, 2:4], inst.catalog.slot_of)
    text = roster_to_csv(stage, inst, first_day=2)
    assert text.splitlines()[0] == "nurse,d2,d3"
    back = roster_from_csv(text, inst)
    assert np.array_equal(back.under, stage.under) and np.array_equal(back.over, stage.over)


def test_roster_csv_rejects_unknown_shift_and_wrong_nurse():
    inst = tree_toys(1)[0]
    good = roster_to_csv(Roster.empty(inst), inst)
    with pytest.raises(ValueError):
        roster_from_csv(good.replace("NW", "XX", 1), inst)
    with pytest.raises(ValueError):
        roster_from_csv(good.replace("n0", "zz", 1), inst)
