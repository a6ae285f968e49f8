"""Core ward data types: slots, shifts, nurse profiles, horizon, costs, rosters."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class ModelError(ValueError):
    """Raised when an instance or roster is structurally invalid."""


class Slot(enum.IntEnum):
    AM = 0
    PM = 1
    N = 2


SLOTS = (Slot.AM, Slot.PM, Slot.N)


class WorkPolicy(enum.Enum):
    """Contract policy: how many distinct slots a nurse may touch over the horizon."""

    p1 = 1
    p2 = 2
    p3 = 3

    @property
    def slot_budget(self) -> int:
        return self.value


@dataclass(frozen=True)
class Shift:
    id: str
    slot: Slot
    start: int  # minutes from midnight
    end: int  # may be <= start when the shift wraps past midnight
    effective_hours: float

    def __post_init__(self):
        if self.effective_hours <= 0:
            raise ModelError(f"shift {self.id}: effective_hours must be positive")

    @property
    def duration_hours(self) -> float:
        minutes = (self.end - self.start) % (24 * 60)
        return (minutes or 24 * 60) / 60.0


@dataclass(frozen=True)
class ShiftCatalog:
    shifts: tuple[Shift, ...]

    def __post_init__(self):
        ids = [s.id for s in self.shifts]
        if len(set(ids)) != len(ids):
            raise ModelError("duplicate shift ids in catalog")
        if not self.shifts:
            raise ModelError("empty shift catalog")

    def __len__(self):
        return len(self.shifts)

    def __iter__(self):
        return iter(self.shifts)

    def index(self, shift_id: str) -> int:
        for k, s in enumerate(self.shifts):
            if s.id == shift_id:
                return k
        raise KeyError(shift_id)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.shifts)

    def in_slot(self, slot: Slot) -> tuple[int, ...]:
        return tuple(k for k, s in enumerate(self.shifts) if s.slot == slot)

    @property
    def slot_of(self) -> np.ndarray:
        return np.array([int(s.slot) for s in self.shifts], dtype=np.int64)

    @property
    def hours(self) -> np.ndarray:
        return np.array([s.effective_hours for s in self.shifts], dtype=float)


@dataclass(frozen=True)
class NurseProfile:
    id: str
    policy: WorkPolicy
    min_hours: float
    max_hours: float
    min_rest_days_per_week: int
    max_consecutive_work: int
    max_weekend_work: int
    max_violations: int
    preferred_shifts: frozenset[str]
    requests: frozenset[tuple[int, str]] = frozenset()

    def __post_init__(self):
        if not 0 <= self.min_hours <= self.max_hours:
            raise ModelError(f"nurse {self.id}: need 0 <= min_hours <= max_hours")
        if not 0 <= self.min_rest_days_per_week <= 7:
            raise ModelError(f"nurse {self.id}: min_rest_days_per_week outside [0, 7]")
        if self.max_consecutive_work < 1:
            raise ModelError(f"nurse {self.id}: max_consecutive_work must be >= 1")
        if self.max_weekend_work < 0 or self.max_violations < 0:
            raise ModelError(f"nurse {self.id}: negative weekend or violation limit")
        if not self.preferred_shifts:
            raise ModelError(f"nurse {self.id}: preferred_shifts is empty")
        for day, sid in self.requests:
            if sid not in self.preferred_shifts:
                raise ModelError(
                    f"nurse {self.id}: request ({day}, {sid}) outside preferred shifts"
                )


@dataclass(frozen=True)
class CostParams:
    staffing: float
    coverage: float
    request: float
    violation: tuple[float, ...]  # C_m for m = 1..len
    understaffing: float = 0.0
    overstaffing: float = 0.0
    adjustment: float = 0.0

    def __post_init__(self):
        values = (self.staffing, self.coverage, self.request, self.understaffing,
                  self.overstaffing, self.adjustment, *self.violation)
        if any(v < 0 for v in values):
            raise ModelError("cost parameters must be nonnegative")
        if any(b < a for a, b in zip(self.violation, self.violation[1:])):
            raise ModelError("violation cost schedule must be nondecreasing in m")

    def violation_cost(self, m: int) -> float:
        if m <= 0:
            return 0.0
        if m > len(self.violation):
            raise ModelError(f"no violation cost defined for m={m}")
        return self.violation[m - 1]


@dataclass(frozen=True)
class Horizon:
    """Days 0..num_days-1, split into 7-day weeks from day 0 and into contiguous stages.

    ``start_weekday`` is the weekday of day 0 (0 = Monday).
    """

    num_days: int
    stage_lengths: tuple[int, ...] = ()
    start_weekday: int = 0

    def __post_init__(self):
        if self.num_days < 1:
            raise ModelError("horizon needs at least one day")
        if not 0 <= self.start_weekday <= 6:
            raise ModelError("start_weekday must be in 0..6")
        if not self.stage_lengths:
            object.__setattr__(self, "stage_lengths", (self.num_days,))
        if any(n < 1 for n in self.stage_lengths) or sum(self.stage_lengths) != self.num_days:
            raise ModelError("stage lengths must be positive and cover the horizon")

    @property
    def days(self) -> range:
        return range(self.num_days)

    @property
    def weeks(self) -> list[range]:
        return [range(k, min(k + 7, self.num_days)) for k in range(0, self.num_days, 7)]

    @property
    def num_weeks(self) -> int:
        return len(self.weeks)

    @property
    def num_stages(self) -> int:
        return len(self.stage_lengths)

    @property
    def stages(self) -> list[range]:
        out, start = [], 0
        for n in self.stage_lengths:
            out.append(range(start, start + n))
            start += n
        return out

    def weekday(self, d: int) -> int:
        return (self.start_weekday + d) % 7

    @property
    def saturdays(self) -> tuple[int, ...]:
        return tuple(d for d in self.days if self.weekday(d) == 5)

    @property
    def sundays(self) -> tuple[int, ...]:
        return tuple(d for d in self.days if self.weekday(d) == 6)

    @property
    def weekend(self) -> tuple[int, ...]:
        return tuple(d for d in self.days if self.weekday(d) >= 5)


def as_demand(values, num_days: Optional[int] = None) -> np.ndarray:
    """Coerce to a read-only (3, days) int array of nonnegative demand."""
    q = np.asarray(values, dtype=np.int64)
    if q.ndim != 2 or q.shape[0] != 3:
        raise ModelError(f"demand must have shape (3, days), got {q.shape}")
    if num_days is not None and q.shape[1] != num_days:
        raise ModelError(f"demand covers {q.shape[1]} days, horizon has {num_days}")
    if (q < 0).any():
        raise ModelError("demand entries must be nonnegative")
    q = q.copy()
    q.setflags(write=False)
    return q


@dataclass(frozen=True)
class Instance:
    horizon: Horizon
    nurses: tuple[NurseProfile, ...]
    catalog: ShiftCatalog
    costs: CostParams
    total_nurses: int
    demand: np.ndarray  # (3, num_days) planning demand used at stage 0
    tree: Optional["ScenarioTree"] = field(default=None, compare=False)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "nurses", tuple(self.nurses))
        object.__setattr__(self, "demand", as_demand(self.demand, self.horizon.num_days))
        if self.total_nurses < 1:
            raise ModelError("total_nurses must be >= 1")
        if not self.nurses:
            raise ModelError("instance has no nurses")
        ids = self.catalog.ids
        for n in self.nurses:
            unknown = set(n.preferred_shifts) - set(ids)
            if unknown:
                raise ModelError(f"nurse {n.id}: unknown shifts {sorted(unknown)}")
            for day, _ in n.requests:
                if not 0 <= day < self.horizon.num_days:
                    raise ModelError(f"nurse {n.id}: request day {day} outside horizon")
            if n.max_violations > len(self.costs.violation):
                raise ModelError(
                    f"nurse {n.id}: max_violations exceeds the violation cost schedule"
                )
        if self.tree is not None and self.tree.num_stages != self.horizon.num_stages:
            raise ModelError("scenario tree stage count differs from horizon stages")

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.horizon == other.horizon
            and self.nurses == other.nurses
            and self.catalog == other.catalog
            and self.costs == other.costs
            and self.total_nurses == other.total_nurses
            and np.array_equal(self.demand, other.demand)
            and self.name == other.name
            and self.tree == other.tree
        )

    __hash__ = None

    @property
    def num_nurses(self) -> int:
        return len(self.nurses)

    @property
    def num_days(self) -> int:
        return self.horizon.num_days

    @property
    def num_shifts(self) -> int:
        return len(self.catalog)

    def preference_mask(self) -> np.ndarray:
        """Boolean (nurses, shifts) matrix of S_i membership."""
        ids = self.catalog.ids
        return np.array(
            [[sid in n.preferred_shifts for sid in ids] for n in self.nurses], dtype=bool
        )

    def request_mask(self) -> np.ndarray:
        """Boolean (nurses, days, shifts) matrix of R_i^{d,s}."""
        r = np.zeros((self.num_nurses, self.num_days, self.num_shifts), dtype=bool)
        for i, n in enumerate(self.nurses):
            for day, sid in n.requests:
                r[i, day, self.catalog.index(sid)] = True
        return r

    def with_demand(self, demand) -> "Instance":
        return Instance(self.horizon, self.nurses, self.catalog, self.costs,
                        self.total_nurses, demand, self.tree, self.name)

    def with_tree(self, tree) -> "Instance":
        return Instance(self.horizon, self.nurses, self.catalog, self.costs,
                        self.total_nurses, self.demand, tree, self.name)

    def with_nurses(self, nurses: Sequence[NurseProfile]) -> "Instance":
        return Instance(self.horizon, tuple(nurses), self.catalog, self.costs,
                        self.total_nurses, self.demand, self.tree, self.name)


@dataclass(frozen=True)
class StageLimits:
    """Per-nurse workload limits applying within one stage of the stochastic model."""

    min_hours: float
    max_hours: float
    min_rest_days_per_week: int
    max_consecutive_work: int
    max_weekend_work: int
    max_violations: int


def stage_limits(nurse: NurseProfile, horizon: Horizon, stage: int) -> StageLimits:
    """Split horizon-level limits proportionally to the stage's share of days.

    Hours and the weekend cap scale with the day fraction (weekend cap floored);
    rest days, the consecutive-work cap and the violation cap carry over unchanged.
    """
    frac = horizon.stage_lengths[stage] / horizon.num_days
    return StageLimits(
        min_hours=nurse.min_hours * frac,
        max_hours=nurse.max_hours * frac,
        min_rest_days_per_week=nurse.min_rest_days_per_week,
        max_consecutive_work=nurse.max_consecutive_work,
        max_weekend_work=int(np.floor(nurse.max_weekend_work * frac + 1e-9)),
        max_violations=nurse.max_violations,
    )


def horizon_limits(nurse: NurseProfile) -> StageLimits:
    return StageLimits(nurse.min_hours, nurse.max_hours, nurse.min_rest_days_per_week,
                       nurse.max_consecutive_work, nurse.max_weekend_work,
                       nurse.max_violations)


def _frozen(a, dtype) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Roster:
    """Staffing flags, the nurse x day x shift assignment tensor and coverage slacks."""

    scheduled: np.ndarray  # (I,) 0/1
    assign: np.ndarray  # (I, D, S) 0/1
    under: np.ndarray  # (3, D)
    over: np.ndarray  # (3, D)

    def __post_init__(self):
        object.__setattr__(self, "scheduled", _frozen(self.scheduled, np.int8))
        object.__setattr__(self, "assign", _frozen(self.assign, np.int8))
        object.__setattr__(self, "under", _frozen(self.under, np.int64))
        object.__setattr__(self, "over", _frozen(self.over, np.int64))
        if self.assign.ndim != 3 or self.assign.shape[0] != self.scheduled.shape[0]:
            raise ModelError("assign must be (nurses, days, shifts) matching scheduled")
        if self.under.shape != (3, self.assign.shape[1]) or self.over.shape != self.under.shape:
            raise ModelError("coverage slacks must be (3, days)")

    @classmethod
    def from_assign(cls, assign, demand, slot_of, scheduled=None) -> "Roster":
        """Build a roster whose slacks close the coverage identity minimally."""
        assign = np.asarray(assign, dtype=np.int8)
        if scheduled is None:
            scheduled = assign.reshape(assign.shape[0], -1).any(axis=1)
        supply = supply_matrix(assign, slot_of)
        demand = np.asarray(demand, dtype=np.int64)
        return cls(scheduled, assign, np.maximum(demand - supply, 0),
                   np.maximum(supply - demand, 0))

    @classmethod
    def empty(cls, instance: Instance) -> "Roster":
        shape = (instance.num_nurses, instance.num_days, instance.num_shifts)
        return cls.from_assign(np.zeros(shape, np.int8), instance.demand,
                               instance.catalog.slot_of, np.zeros(shape[0], np.int8))

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.assign.shape

    def slot_used(self, slot_of) -> np.ndarray:
        """(I, 3) indicator of slots touched anywhere in the horizon."""
        per_slot = np.zeros((self.shape[0], 3), dtype=np.int8)
        worked = self.assign.any(axis=1)
        for s, j in enumerate(slot_of):
            per_slot[:, j] |= worked[:, s]
        return per_slot

    def key(self) -> bytes:
        return self.scheduled.tobytes() + self.assign.tobytes()

    def __eq__(self, other):
        if not isinstance(other, Roster):
            return NotImplemented
        return (np.array_equal(self.scheduled, other.scheduled)
                and np.array_equal(self.assign, other.assign)
                and np.array_equal(self.under, other.under)
                and np.array_equal(self.over, other.over))

    __hash__ = None


def supply_matrix(assign: np.ndarray, slot_of) -> np.ndarray:
    """(3, D) number of assigned nurses per slot and day."""
    assign = np.asarray(assign)
    per_shift = assign.sum(axis=0)  # (D, S)
    out = np.zeros((3, assign.shape[1]), dtype=np.int64)
    for s, j in enumerate(slot_of):
        out[j] += per_shift[:, s]
    return out
