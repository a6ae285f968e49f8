import itertools
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nurseflow.domain import (
    CostParams,
    Horizon,
    Instance,
    ModelError,
    NurseProfile,
    Roster,
    Slot,
    ViolationCapError,
    WorkPolicy,
    count_soft_violations,
    default_catalog,
    toy_catalog,
    validate_roster,
)
from nurseflow.instance_gen import DEFAULT_COSTS

from toys import deterministic_toys


def nurse(i=0, **kw):
    base = dict(id=f"n{i}", policy=WorkPolicy.p3, min_hours=0.0, max_hours=40.0,
                min_rest_days_per_week=1, max_consecutive_work=5, max_weekend_work=2,
                max_violations=4, preferred_shifts=frozenset({"AM", "PM", "N"}))
    base.update(kw)
    return NurseProfile(**base)


def instance(days=7, nurses=None, start_weekday=0, demand=None):
    nurses = nurses or [nurse()]
    demand = np.zeros((3, days), int) if demand is None else demand
    return Instance(Horizon(days, (days,), start_weekday), tuple(nurses), toy_catalog(),
                    DEFAULT_COSTS, len(nurses), demand)


def roster_of(inst, cells, scheduled=None):
    """cells: {(i, d): shift id}"""
    x = np.zeros((inst.num_nurses, inst.num_days, inst.num_shifts), np.int8)
    for (i, d), sid in cells.items():
        x[i, d, inst.catalog.index(sid)] = 1
    return Roster.from_assign(x, inst.demand, inst.catalog.slot_of, scheduled)


# -- types -------------------------------------------------------------------------

def test_default_catalog_has_five_six_one_split_and_six_to_twelve_hours():
    cat = default_catalog()
    counts = [len(cat.in_slot(s)) for s in (Slot.AM, Slot.PM, Slot.N)]
    assert counts == [5, 6, 1]
    assert len(cat) == 12
    assert all(6 <= s.effective_hours <= 12 for s in cat)


def test_every_shift_maps_to_one_of_three_slots():
    assert len(Slot) == 3
    assert set(default_catalog().slot_of) <= {0, 1, 2}


def test_policy_slot_budgets():
    assert [p.slot_budget for p in (WorkPolicy.p1, WorkPolicy.p2, WorkPolicy.p3)] == [1, 2, 3]


@pytest.mark.parametrize("bad", [
    dict(min_hours=10.0, max_hours=5.0),
    dict(min_rest_days_per_week=8),
    dict(max_consecutive_work=0),
    dict(preferred_shifts=frozenset()),
    dict(preferred_shifts=frozenset({"AM"}), requests=frozenset({(0, "N")})),
])
def test_nurse_profile_rejects_invalid_fields(bad):
    with pytest.raises(ModelError):
        nurse(**bad)


def test_violation_costs_must_be_nondecreasing():
    with pytest.raises(ModelError):
        CostParams(1, 1, 1, (4.0, 2.0))
    with pytest.raises(ModelError):
        CostParams(-1, 1, 1, (1.0,))


def test_demand_must_be_nonnegative_and_match_horizon():
    with pytest.raises(ModelError):
        instance(days=2, demand=np.array([[0, -1], [0, 0], [0, 0]]))
    with pytest.raises(ModelError):
        instance(days=2, demand=np.zeros((3, 3), int))


def test_horizon_weekend_and_stages():
    h = Horizon(10, (3, 7), start_weekday=5)
    assert h.saturdays == (0, 7) and h.sundays == (1, 8)
    assert [list(r) for r in h.stages] == [[0, 1, 2], list(range(3, 10))]
    with pytest.raises(ModelError):
        Horizon(5, (2, 2))


def test_roster_coverage_identity_from_assign():
    inst = instance(days=2, nurses=[nurse(0), nurse(1)], demand=np.array([[2, 0], [0, 1], [0, 0]]))
    r = roster_of(inst, {(0, 0): "AM", (1, 1): "N"})
    supply = np.array([[1, 0], [0, 0], [0, 1]])
    assert np.array_equal(supply + r.under - r.over, inst.demand)


# -- validate_roster ----------------------------------------------------------------

def test_all_zero_roster_is_feasible():
    inst = instance(days=4, demand=np.ones((3, 4), int))
    assert validate_roster(Roster.empty(inst), inst) == []


def test_night_then_morning_breaks_post_night_ban():
    inst = instance(days=3)
    bad = validate_roster(roster_of(inst, {(0, 0): "N", (0, 1): "AM"}), inst)
    assert [(v.rule, v.constraint, v.day) for v in bad] == [("H5", "ban-N-then-day", 0)]


def test_night_rest_morning_pattern_is_banned():
    inst = instance(days=3)
    bad = validate_roster(roster_of(inst, {(0, 0): "N", (0, 2): "AM"}), inst)
    assert [v.constraint for v in bad] == ["ban-N-NW-AM"]


def test_dimension_mismatch_is_a_structural_error():
    inst = instance(days=3)
    with pytest.raises(ModelError):
        validate_roster(Roster.empty(instance(days=4)), inst)


def brute_force_feasible(roster: Roster, inst: Instance) -> bool:
    """Independent hard-rule check written from the rule list."""
    x = roster.assign.astype(int)
    beta = roster.scheduled.astype(int)
    slot = inst.catalog.slot_of
    hours = inst.catalog.hours
    ids = inst.catalog.ids
    if beta.sum() > inst.total_nurses:
        return False
    supply = np.zeros((3, inst.num_days), int)
    for i, n in enumerate(inst.nurses):
        worked = x[i].sum(axis=1)
        night = x[i][:, slot == 2].sum(axis=1)
        am = x[i][:, slot == 0].sum(axis=1)
        day = x[i][:, slot != 2].sum(axis=1)
        for d in range(inst.num_days):
            for s in range(inst.num_shifts):
                if x[i, d, s]:
                    supply[slot[s], d] += 1
                    if ids[s] not in n.preferred_shifts:
                        return False
            if worked[d] > beta[i]:
                return False
        h = float((x[i] * hours).sum())
        if not n.min_hours * beta[i] <= h <= n.max_hours * beta[i]:
            return False
        if len({slot[s] for d, s in zip(*np.nonzero(x[i]))}) > n.policy.slot_budget:
            return False
        if beta[i]:
            for d in range(inst.num_days - 1):
                if night[d] and day[d + 1]:
                    return False
            for d in range(inst.num_days - 2):
                if night[d] and not worked[d + 1] and am[d + 2]:
                    return False
            for w in inst.horizon.weeks:
                if 7 - worked[list(w)].sum() < n.min_rest_days_per_week:
                    return False
            F = n.max_consecutive_work
            for d in range(inst.num_days - F):
                if worked[d:d + F + 1].all():
                    return False
    return bool(np.array_equal(supply + roster.under - roster.over, inst.demand))


def test_validator_agrees_with_brute_force_on_random_toy_rosters():
    rng = np.random.default_rng(3)
    agree, feasible = 0, 0
    for inst in deterministic_toys(10, seed=11):
        for _ in range(60):
            x = np.zeros((2, 3, 3), np.int8)
            for i, d in itertools.product(range(2), range(3)):
                s = rng.integers(-2, 3)
                if s >= 0:
                    x[i, d, s] = 1
            if rng.random() < 0.1:
                x[0, 0, :2] = 1  # two shifts on one day
            r = Roster.from_assign(x, inst.demand, inst.catalog.slot_of)
            verdict = validate_roster(r, inst) == []
            assert verdict == brute_force_feasible(r, inst)
            agree += 1
            feasible += verdict
    assert agree == 600 and 0 < feasible < 600


# -- soft violations --------------------------------------------------------------

def test_empty_roster_has_no_soft_violations():
    inst = instance(days=7)
    assert all(c.total == 0 for c in count_soft_violations(Roster.empty(inst), inst))


def test_rest_then_morning_counts_one_nw_am():
    inst = instance(days=3)
    (c,) = count_soft_violations(roster_of(inst, {(0, 0): "PM", (0, 2): "AM"}, [1]), inst)
    assert c.nw_am == (1,)


def test_weekend_nights_and_weekend_excess():
    # Saturday start: days 0, 1 and 7 are weekend days; three are worked against a cap of 2
    inst = instance(days=8, start_weekday=5, nurses=[nurse(max_weekend_work=2)])
    cells = {(0, 0): "N", (0, 1): "N", (0, 7): "PM"}
    (c,) = count_soft_violations(roster_of(inst, cells), inst)
    assert c.weekend_nights == (0,)
    assert c.weekend_excess == 1


def test_soft_cap_breach_raises():
    inst = instance(days=7, nurses=[nurse(max_violations=1)])
    cells = {(0, 1): "AM", (0, 3): "AM", (0, 5): "AM"}  # isolated work days and NW-AM
    with pytest.raises(ViolationCapError):
        count_soft_violations(roster_of(inst, cells), inst)
    assert count_soft_violations(roster_of(inst, cells), inst, strict=False)[0].total > 1


def scan_patterns(x: np.ndarray, inst: Instance, i: int) -> tuple[int, int, int, int]:
    """Sliding-window scanner over one nurse's row of (day -> shift or None)."""
    slot = inst.catalog.slot_of
    row = [None if not x[d].any() else int(slot[int(np.argmax(x[d]))]) for d in range(x.shape[0])]
    h = inst.horizon
    wk = sum(1 for d in h.weekend if row[d] is not None)
    p1 = max(0, wk - inst.nurses[i].max_weekend_work)
    p2 = sum(1 for a, b in zip(row, row[1:]) if a is None and b == 0)
    p3 = sum(1 for d in h.saturdays if d + 1 < len(row) and row[d] == 2 and row[d + 1] == 2)
    p4 = sum(1 for a, b, c in zip(row, row[1:], row[2:]) if a is None and b is not None and c is None)
    return p1, p2, p3, p4


@settings(max_examples=150, deadline=None)
@given(days=st.integers(1, 7), weekday=st.integers(0, 6), nn=st.integers(1, 2),
       cells=st.lists(st.integers(-1, 2), min_size=14, max_size=14))
def test_soft_counts_agree_with_window_scanner(days, weekday, nn, cells):
    inst = instance(days=days, start_weekday=weekday, nurses=[nurse(k) for k in range(nn)])
    x = np.zeros((nn, days, 3), np.int8)
    for k, s in enumerate(cells[:nn * days]):
        if s >= 0:
            x[k // days, k % days, s] = 1
    r = Roster.from_assign(x, inst.demand, inst.catalog.slot_of, np.ones(nn, np.int8))
    counts = count_soft_violations(r, inst, strict=False)
    for i, c in enumerate(counts):
        got = (c.weekend_excess, len(c.nw_am), len(c.weekend_nights), len(c.isolated_work))
        assert got == scan_patterns(x[i], inst, i)


@settings(max_examples=50, deadline=None)
@given(days=st.integers(1, 7), weekday=st.integers(0, 6))
def test_unscheduled_rosters_are_feasible_and_violation_free(days, weekday):
    rng = np.random.default_rng(days * 7 + weekday)
    inst = instance(days=days, start_weekday=weekday, nurses=[nurse(0), nurse(1)],
                    demand=rng.integers(0, 4, (3, days)))
    r = Roster.empty(inst)
    assert validate_roster(r, inst) == []
    assert validate_roster(r, inst) == validate_roster(r, inst)
    assert all(c.total == 0 for c in count_soft_violations(r, inst))


def test_validation_is_pure():
    inst = deterministic_toys(1)[0]
    r = roster_of(inst, {(0, 0): "N", (0, 1): "AM", (1, 2): "PM"})
    before = r.assign.copy()
    assert validate_roster(r, inst) == validate_roster(r, inst)
    assert np.array_equal(before, r.assign)
    with pytest.raises(ValueError):
        r.assign[0, 0, 0] = 1  # immutable


def test_request_outside_preferences_rejected_when_nurse_is_changed():
    with pytest.raises(ModelError):
        replace(nurse(preferred_shifts=frozenset({"AM"})), requests=frozenset({(0, "PM")}))
