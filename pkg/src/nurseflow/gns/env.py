"""Sequential roster construction environments.

A state is a set of placed actions plus a step counter. Every trajectory has
exactly ``T`` steps; the last action index is a skip that only advances the
counter, so states with fewer placeable assignments still reach step ``T``.

Backward moves undo one action: any placed assignment, or a skip when the
counter exceeds the number of placed assignments. The hard rules masked
here only cap resources or forbid completed patterns, so removing an
assignment from a valid set leaves a valid set and every such undo is a true
parent in the forward graph. The one rule that looks at a free day,
night-rest-morning, is safe too: a night followed by any work and then a
morning is already banned, so undoing the middle day cannot complete it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..domain.types import Instance, ModelError, Roster, Slot, stage_limits
from ..evaluation.costs import evaluate_under_path, initial_cost

EPSILON_REWARD = 1e-6
HOUR_TOL = 1e-9


class RewardConfigError(ModelError):
    """The offset M is too small: some terminal state gets a nonpositive reward."""


class Env:
    """Interface shared by the toy graph and the scheduling environment."""

    num_actions: int  # including the skip action, which is the last index
    T: int
    input_size: int

    @property
    def skip(self) -> int:
        return self.num_actions - 1

    def initial(self):
        raise NotImplementedError

    def forward_mask(self, state) -> np.ndarray:
        raise NotImplementedError

    def backward_mask(self, state) -> np.ndarray:
        raise NotImplementedError

    def step(self, state, action: int):
        raise NotImplementedError

    def encode(self, state) -> np.ndarray:
        raise NotImplementedError

    def reward(self, state) -> float:
        raise NotImplementedError

    def key(self, state) -> bytes:
        """Identity of the terminal object, ignoring the step counter."""
        raise NotImplementedError

    def is_terminal(self, state) -> bool:
        return state.t >= self.T


# -- toy subset graph ---------------------------------------------------------

@dataclass(frozen=True)
class SubsetState:
    items: frozenset
    t: int


class SubsetEnv(Env):
    """Pick a subset of ``n_items`` items in ``T`` steps (skips pad the rest).

    Fully enumerable for small sizes; ``rewards`` maps a sorted item tuple to
    its reward.
    """

    def __init__(self, n_items: int, T: int, rewards: Callable[[tuple], float] | dict):
        self.n_items = n_items
        self.T = T
        self.num_actions = n_items + 1
        self.input_size = n_items + 1
        self._rewards = rewards

    def initial(self) -> SubsetState:
        return SubsetState(frozenset(), 0)

    def forward_mask(self, state):
        m = np.ones(self.num_actions, dtype=bool)
        for i in state.items:
            m[i] = False
        return m

    def backward_mask(self, state):
        m = np.zeros(self.num_actions, dtype=bool)
        for i in state.items:
            m[i] = True
        m[self.skip] = state.t > len(state.items)
        return m

    def step(self, state, action):
        if action == self.skip:
            return SubsetState(state.items, state.t + 1)
        return SubsetState(state.items | {action}, state.t + 1)

    def encode(self, state):
        v = np.zeros(self.input_size)
        for i in state.items:
            v[i] = 1.0
        v[-1] = state.t / self.T
        return v

    def reward(self, state):
        key = tuple(sorted(state.items))
        r = self._rewards[key] if isinstance(self._rewards, dict) else self._rewards(key)
        return float(r)

    def key(self, state):
        return bytes(sorted(state.items))

    def terminals(self) -> list[tuple]:
        """All reachable terminal item sets (subsets of size <= T)."""
        import itertools
        out = []
        for k in range(min(self.n_items, self.T) + 1):
            out.extend(itertools.combinations(range(self.n_items), k))
        return out


# -- scheduling environment ---------------------------------------------------

@dataclass(frozen=True, eq=False)
class SchedState:
    shift: np.ndarray  # (I, D) shift index, -1 when free
    t: int
    hours: np.ndarray  # (I,)
    stage_hours: np.ndarray  # (I, H)
    slots: np.ndarray  # (I, 3) slots touched, including the initial roster's
    count: int = field(default=0)  # placed assignments

    @property
    def free(self) -> np.ndarray:
        return self.shift < 0

    def assign_tensor(self, num_shifts: int) -> np.ndarray:
        I, D = self.shift.shape
        x = np.zeros((I, D, num_shifts), np.int8)
        ii, dd = np.nonzero(self.shift >= 0)
        x[ii, dd, self.shift[ii, dd]] = 1
        return x


def cost_upper_bound(instance: Instance, initial: Roster, demands: Sequence[np.ndarray]) -> float:
    """Cost no terminal roster can exceed under these stage demands.

    Per stage: every slot-day gap is at most max(q, I - q) (or q when
    q > I), adjustments at most the initial assignments plus one per
    nurse-day, understaffing at most one per nurse, and each nurse pays at
    most the violation price at its cap. Overstaffing is zero because the
    evaluator takes the cheapest aggregates.
    """
    c = instance.costs
    I = instance.num_nurses
    total = initial_cost(instance, initial).total
    for h, days in enumerate(instance.horizon.stages):
        q = np.asarray(demands[h], dtype=float)
        gap = np.where(q > I, q, np.maximum(q, I - q)).sum()
        moved = int(initial.assign[:, days.start:days.stop].sum()) + I * len(days)
        viol = sum(c.violation_cost(n.max_violations) for n in instance.nurses)
        total += c.coverage * gap + c.adjustment * moved + c.understaffing * I + viol
    return float(total)


@dataclass
class RewardContext:
    """Fixed inputs of the reward: initial roster, stage demands, temperature and offset.

    With ``offset="empty"`` the offset is twice the empty roster's scaled
    cost plus one. ``offset="bound"`` uses ``cost_upper_bound`` instead,
    which is never below any achievable cost and usually much tighter, so
    rewards spread further apart. An explicit ``M`` overrides both.
    """

    instance: Instance
    initial: Roster
    demands: list[np.ndarray]  # expected demand per stage
    rho: float = 50.0
    M: Optional[float] = None
    offset: str = "empty"

    def cost(self, roster: Roster) -> float:
        return evaluate_under_path(self.instance, self.initial, self.demands, recourse=roster).total

    def __post_init__(self):
        if self.rho <= 0:
            raise ModelError("temperature rho must be positive")
        if self.M is None:
            if self.offset == "empty":
                self.M = 2.0 * self.cost(Roster.empty(self.instance)) / self.rho + 1.0
            elif self.offset == "bound":
                self.M = cost_upper_bound(self.instance, self.initial, self.demands) / self.rho + 1.0
            else:
                raise ModelError(f"unknown reward offset rule {self.offset!r}")

    def reward_of_cost(self, cost: float) -> float:
        r = self.M - cost / self.rho
        if r <= 0:
            raise RewardConfigError(f"reward {r} <= 0 for cost {cost}; offset M={self.M} too small")
        return r


def expected_path(instance: Instance) -> list[np.ndarray]:
    """Expected stage demands (rounded up) of the instance's tree."""
    tree = instance.tree
    if tree is None:
        hz = instance.horizon
        return [instance.demand[:, r.start:r.stop] for r in hz.stages]
    return [tree.expected_stage_demand(h) for h in range(1, tree.num_stages + 1)]


class SchedEnv(Env):
    """Place (nurse, day, shift) assignments one at a time under the hard rules.

    Masked out: a second shift on the same day, non-preferred shifts, slots
    beyond the work-policy budget (counting slots the initial roster already
    uses), horizon and stage hour caps, a day or night shift right after a
    night, a night-rest-morning pattern, runs longer than the consecutive cap,
    weekly work beyond 7 minus the rest requirement, and a new nurse once the
    capacity is reached. Terminal states that still fail the evaluation
    (soft-violation caps, minimum hours) get reward ``EPSILON_REWARD``.
    """

    def __init__(self, context: RewardContext, T: Optional[int] = None):
        inst = context.instance
        self.context = context
        self.instance = inst
        self.I, self.D, self.S = inst.num_nurses, inst.num_days, inst.num_shifts
        self.num_actions = self.I * self.D * self.S + 1
        self.input_size = self.I * self.D * self.S + 1
        cat = inst.catalog
        self.slot_of = np.asarray(cat.slot_of)
        self.shift_hours = np.asarray(cat.hours, float)
        self.pref = inst.preference_mask()
        hz = inst.horizon
        self.H = hz.num_stages
        self.stage_of = np.zeros(self.D, np.int64)
        for h, r in enumerate(hz.stages):
            self.stage_of[r.start:r.stop] = h
        self.week_of = np.zeros(self.D, np.int64)
        for w, r in enumerate(hz.weeks):
            self.week_of[r.start:r.stop] = w
        self.budget = np.array([n.policy.slot_budget for n in inst.nurses])
        self.max_hours = np.array([n.max_hours for n in inst.nurses], float)
        self.stage_max = np.array([[stage_limits(n, hz, h).max_hours for h in range(self.H)]
                                   for n in inst.nurses], float)
        self.max_run = np.array([n.max_consecutive_work for n in inst.nurses])
        self.week_cap = np.array([7 - n.min_rest_days_per_week for n in inst.nurses])
        self.is_am = self.slot_of == int(Slot.AM)
        self.is_pm = self.slot_of == int(Slot.PM)
        self.is_n = self.slot_of == int(Slot.N)
        self.T = T if T is not None else self.default_T()
        self._initial_slots = context.initial.slot_used(self.slot_of).astype(bool)

    def default_T(self) -> int:
        """Most days each nurse could work under the weekly-rest rule."""
        hz = self.instance.horizon
        total = 0
        for n in self.instance.nurses:
            total += sum(min(len(w), 7 - n.min_rest_days_per_week) for w in hz.weeks)
        return int(total)

    def initial(self) -> SchedState:
        return SchedState(np.full((self.I, self.D), -1, np.int64), 0, np.zeros(self.I),
                          np.zeros((self.I, self.H)), self._initial_slots.copy(), 0)

    # action index helpers
    def action(self, i: int, d: int, s: int) -> int:
        return (i * self.D + d) * self.S + s

    def decode_action(self, a: int) -> tuple[int, int, int]:
        i, rest = divmod(a, self.D * self.S)
        d, s = divmod(rest, self.S)
        return i, d, s

    def _cell_mask(self, st: SchedState) -> np.ndarray:
        I, D, S = self.I, self.D, self.S
        free = st.free
        worked = ~free
        sh = np.where(worked, st.shift, 0)
        slot = np.where(worked, self.slot_of[sh], -1)
        night = slot == int(Slot.N)
        day_work = (slot == int(Slot.AM)) | (slot == int(Slot.PM))
        am = slot == int(Slot.AM)

        m = np.broadcast_to(free[:, :, None], (I, D, S)).copy()
        m &= self.pref[:, None, :]
        # work-policy budget: a new slot needs spare budget
        room = st.slots.sum(axis=1) < self.budget
        slot_ok = st.slots[:, self.slot_of] | room[:, None]  # (I, S)
        m &= slot_ok[:, None, :]
        # hour caps
        m &= (st.hours[:, None] + self.shift_hours[None, :] <= self.max_hours[:, None] + HOUR_TOL)[:, None, :]
        stage_room = self.stage_max - st.stage_hours  # (I, H)
        m &= (self.shift_hours[None, None, :] <= stage_room[:, self.stage_of][:, :, None] + HOUR_TOL)
        # no day shift right after a night, no night right before a day shift
        prev_night = np.zeros((I, D), bool)
        prev_night[:, 1:] = night[:, :-1]
        m &= ~(prev_night[:, :, None] & (self.is_am | self.is_pm)[None, None, :])
        next_day = np.zeros((I, D), bool)
        next_day[:, :-1] = day_work[:, 1:]
        m &= ~(next_day[:, :, None] & self.is_n[None, None, :])
        # night, rest day, morning
        n2 = np.zeros((I, D), bool)
        n2[:, 2:] = night[:, :-2] & free[:, 1:-1]
        m &= ~(n2[:, :, None] & self.is_am[None, None, :])
        a2 = np.zeros((I, D), bool)
        a2[:, :-2] = am[:, 2:] & free[:, 1:-1]
        m &= ~(a2[:, :, None] & self.is_n[None, None, :])
        # consecutive working days: run through d after placing it
        left = np.zeros((I, D), np.int64)
        right = np.zeros((I, D), np.int64)
        for d in range(1, D):
            left[:, d] = np.where(worked[:, d - 1], left[:, d - 1] + 1, 0)
        for d in range(D - 2, -1, -1):
            right[:, d] = np.where(worked[:, d + 1], right[:, d + 1] + 1, 0)
        m &= (left + right + 1 <= self.max_run[:, None])[:, :, None]
        # weekly rest
        nweeks = int(self.week_of.max()) + 1
        per_week = np.zeros((I, nweeks), np.int64)
        for w in range(nweeks):
            per_week[:, w] = worked[:, self.week_of == w].sum(axis=1)
        m &= (per_week[:, self.week_of] + 1 <= self.week_cap[:, None])[:, :, None]
        # capacity on the number of working nurses
        active = worked.any(axis=1)
        if active.sum() >= self.instance.total_nurses:
            m &= active[:, None, None]
        return m

    def forward_mask(self, st: SchedState) -> np.ndarray:
        out = np.empty(self.num_actions, dtype=bool)
        out[:-1] = self._cell_mask(st).reshape(-1)
        out[-1] = True
        return out

    def backward_mask(self, st: SchedState) -> np.ndarray:
        out = np.zeros(self.num_actions, dtype=bool)
        ii, dd = np.nonzero(st.shift >= 0)
        out[(ii * self.D + dd) * self.S + st.shift[ii, dd]] = True
        out[-1] = st.t > st.count
        return out

    def step(self, st: SchedState, a: int) -> SchedState:
        if a == self.skip:
            return SchedState(st.shift, st.t + 1, st.hours, st.stage_hours, st.slots, st.count)
        i, d, s = self.decode_action(a)
        shift = st.shift.copy()
        shift[i, d] = s
        hours = st.hours.copy()
        hours[i] += self.shift_hours[s]
        stage_hours = st.stage_hours.copy()
        stage_hours[i, self.stage_of[d]] += self.shift_hours[s]
        slots = st.slots.copy()
        slots[i, self.slot_of[s]] = True
        return SchedState(shift, st.t + 1, hours, stage_hours, slots, st.count + 1)

    def encode(self, st: SchedState) -> np.ndarray:
        v = np.zeros(self.input_size)
        v[:-1] = st.assign_tensor(self.S).reshape(-1)
        v[-1] = st.t / self.T
        return v

    def roster(self, st: SchedState) -> Roster:
        x = st.assign_tensor(self.S)
        inst = self.instance
        return Roster.from_assign(x, inst.demand, inst.catalog.slot_of)

    def cost(self, st: SchedState) -> float:
        return self.context.cost(self.roster(st))

    def reward(self, st: SchedState) -> float:
        try:
            cost = self.cost(st)
        except ModelError as exc:
            if isinstance(exc, RewardConfigError):
                raise
            return EPSILON_REWARD
        return self.context.reward_of_cost(cost)

    def key(self, st: SchedState) -> bytes:
        return st.shift.astype(np.int16).tobytes()
