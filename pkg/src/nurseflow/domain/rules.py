"""Hard-rule validation and soft-violation counting for rosters.

Rules are evaluated over a contiguous block of days: the whole horizon for the
deterministic roster, or a single stage for the stochastic recourse rosters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .types import (
    Instance,
    ModelError,
    Roster,
    Slot,
    StageLimits,
    horizon_limits,
    supply_matrix,
)


class ViolationCapError(ModelError):
    """A nurse accumulates more soft violations than the cap V_i allows."""


@dataclass(frozen=True)
class Violation:
    rule: str  # H1..H6, CAP (nurse capacity), COV (coverage identity)
    constraint: str
    nurse: Optional[int] = None
    day: Optional[int] = None


@dataclass(frozen=True)
class SoftCounts:
    weekend_excess: int  # p1
    nw_am: tuple[int, ...]  # p2, days d with NW on d and AM on d+1
    weekend_nights: tuple[int, ...]  # p3, Saturdays opening an N-N weekend
    isolated_work: tuple[int, ...]  # p4, days d opening NW-W-NW

    @property
    def total(self) -> int:
        return (self.weekend_excess + len(self.nw_am) + len(self.weekend_nights)
                + len(self.isolated_work))


class _Block:
    """Slot-indicator views of one nurse's assignments over consecutive days."""

    def __init__(self, x: np.ndarray, days: Sequence[int], slot_of: np.ndarray, hours: np.ndarray):
        self.days = list(days)
        self.x = x
        self.work = x.sum(axis=1)
        self.am = x[:, slot_of == Slot.AM].sum(axis=1)
        self.pm = x[:, slot_of == Slot.PM].sum(axis=1)
        self.night = x[:, slot_of == Slot.N].sum(axis=1)
        self.hours = float((x * hours).sum())


def block_hard_violations(i: int, beta: int, x: np.ndarray, days: Sequence[int],
                          limits: StageLimits, instance: Instance) -> list[Violation]:
    """Hard constraints of one nurse restricted to ``days`` (excluding policy and preference)."""
    h = instance.horizon
    b = _Block(x, days, instance.catalog.slot_of, instance.catalog.hours)
    out: list[Violation] = []
    n = len(b.days)
    for k, d in enumerate(b.days):
        if b.work[k] > beta:
            out.append(Violation("H3", "single-assignment", i, d))
    if not (limits.min_hours * beta - 1e-9 <= b.hours <= limits.max_hours * beta + 1e-9):
        out.append(Violation("H2", "work-hours", i))
    for k in range(n - 2):
        if (1 - b.night[k]) + b.work[k + 1] + (1 - b.am[k + 2]) < beta:
            out.append(Violation("H5", "ban-N-NW-AM", i, b.days[k]))
    for k in range(n - 1):
        if b.night[k] + b.am[k + 1] + b.pm[k + 1] > beta:
            out.append(Violation("H5", "ban-N-then-day", i, b.days[k]))
    for week in h.weeks:
        ks = [k for k, d in enumerate(b.days) if d in week]
        if ks and 7 - int(b.work[ks].sum()) < limits.min_rest_days_per_week * beta:
            out.append(Violation("H6", "weekly-rest", i, week.start))
    f = limits.max_consecutive_work
    for k in range(n - f):
        if int(b.work[k:k + f + 1].sum()) > f * beta:
            out.append(Violation("H2", "consecutive-work", i, b.days[k]))
    return out


def block_soft_counts(beta: int, x: np.ndarray, days: Sequence[int], limits: StageLimits,
                      instance: Instance) -> SoftCounts:
    """Minimal values of the soft-pattern counters for one nurse over ``days``."""
    if not beta:
        return SoftCounts(0, (), (), ())
    h = instance.horizon
    b = _Block(x, days, instance.catalog.slot_of, instance.catalog.hours)
    n = len(b.days)
    weekend = set(h.weekend)
    saturdays = set(h.saturdays)
    worked_weekend = int(sum(b.work[k] for k, d in enumerate(b.days) if d in weekend))
    p1 = max(0, worked_weekend - limits.max_weekend_work)
    p2 = tuple(b.days[k] for k in range(n - 1) if b.work[k] == 0 and b.am[k + 1] > 0)
    p3 = tuple(b.days[k] for k in range(n - 1)
               if b.days[k] in saturdays and b.night[k] > 0 and b.night[k + 1] > 0)
    p4 = tuple(b.days[k] for k in range(n - 2)
               if b.work[k] == 0 and b.work[k + 1] > 0 and b.work[k + 2] == 0)
    return SoftCounts(p1, p2, p3, p4)


def _check_shape(roster: Roster, instance: Instance) -> None:
    expected = (instance.num_nurses, instance.num_days, instance.num_shifts)
    if roster.shape != expected:
        raise ModelError(f"roster shape {roster.shape} does not match instance {expected}")


def policy_violations(i: int, slots_used: np.ndarray, instance: Instance) -> list[Violation]:
    budget = instance.nurses[i].policy.slot_budget
    if int(np.count_nonzero(slots_used)) > budget:
        return [Violation("H4", "work-policy", i)]
    return []


def validate_roster(roster: Roster, instance: Instance) -> list[Violation]:
    """All violated hard constraints of the deterministic model; empty means feasible."""
    _check_shape(roster, instance)
    out: list[Violation] = []
    pref = instance.preference_mask()
    slot_of = instance.catalog.slot_of
    beta = roster.scheduled
    if int(beta.sum()) > instance.total_nurses:
        out.append(Violation("CAP", "capacity"))
    days = list(instance.horizon.days)
    used = roster.slot_used(slot_of)
    for i, nurse in enumerate(instance.nurses):
        x = roster.assign[i]
        outside = np.argwhere(x[:, ~pref[i]] > 0)
        for d, _ in outside:
            out.append(Violation("H1", "preferred-shifts", i, int(d)))
        out.extend(block_hard_violations(i, int(beta[i]), x * pref[i], days,
                                         horizon_limits(nurse), instance))
        out.extend(policy_violations(i, used[i], instance))
    supply = supply_matrix(roster.assign, slot_of)
    if not np.array_equal(supply + roster.under - roster.over, instance.demand):
        out.append(Violation("COV", "coverage-balance"))
    return out


def count_soft_violations(roster: Roster, instance: Instance, strict: bool = True) -> list[SoftCounts]:
    """Per-nurse soft-pattern counters over the horizon.

    With ``strict`` a nurse whose total exceeds ``max_violations`` raises
    :class:`ViolationCapError`, since no violation cost bucket exists for it.
    """
    _check_shape(roster, instance)
    days = list(instance.horizon.days)
    out = []
    for i, nurse in enumerate(instance.nurses):
        c = block_soft_counts(int(roster.scheduled[i]), roster.assign[i], days,
                              horizon_limits(nurse), instance)
        if strict and c.total > nurse.max_violations:
            raise ViolationCapError(
                f"nurse {i} has {c.total} violations, cap is {nurse.max_violations}"
            )
        out.append(c)
    return out
