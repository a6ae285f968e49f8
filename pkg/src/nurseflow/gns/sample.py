"""Candidate rosters from a trained sampler and their post-realization selection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..domain.types import Instance, ModelError, Roster
from ..evaluation.costs import CostBreakdown, evaluate_under_path
from ..scenario import ScenarioTree
from .env import EPSILON_REWARD, Env
from .policy import PolicyParams
from .train import rollout


@dataclass(frozen=True, eq=False)
class Candidate:
    rank: int
    reward: float
    key: bytes
    state: object
    roster: Optional[Roster] = None


@dataclass
class CandidateSet:
    candidates: list[Candidate]
    requested: int
    drawn: int
    distinct: int
    warning: bool = False  # fewer than ``requested`` distinct feasible terminals were found
    messages: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.candidates)

    def __iter__(self):
        return iter(self.candidates)

    @property
    def rosters(self) -> list[Roster]:
        return [c.roster for c in self.candidates]


def sample_candidates(env: Env, params: PolicyParams, k: int, n_samples: int, seed: int = 0,
                      greedy: bool = False) -> CandidateSet:
    """Top-``k`` distinct terminal states by reward out of ``n_samples`` draws.

    Ties in reward are broken by the byte encoding of the terminal. States
    that only earned the fallback reward failed the evaluation and are not
    candidates. ``greedy`` follows the most probable action at every step,
    so all draws coincide.
    """
    if k < 1 or n_samples < 1:
        raise ValueError("k and n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    found: dict[bytes, tuple[float, object]] = {}
    for _ in range(n_samples):
        tr = rollout(env, params, rng, greedy=greedy)
        key = env.key(tr.terminal)
        if key not in found:
            found[key] = (tr.reward, tr.terminal)
        if greedy:
            break
    feasible = [(r, key, st) for key, (r, st) in found.items() if r > EPSILON_REWARD]
    feasible.sort(key=lambda t: (-t[0], t[1]))
    to_roster = getattr(env, "roster", None)
    top = [Candidate(j, r, key, st, to_roster(st) if to_roster else None)
           for j, (r, key, st) in enumerate(feasible[:k])]
    out = CandidateSet(top, k, n_samples, len(found))
    if len(top) < k:
        out.warning = True
        out.messages.append(f"only {len(top)} distinct feasible terminals found, {k} requested")
    return out


@dataclass(frozen=True)
class Selection:
    index: int  # position in the candidate list
    roster: Roster
    cost: CostBreakdown
    costs: tuple[float, ...]  # realized total per candidate, inf when it failed to evaluate


def select_best(instance: Instance, initial: Roster, candidates: Sequence[Roster], path,
                tree: Optional[ScenarioTree] = None) -> Selection:
    """Candidate with the lowest realized cost along ``path``, ties to the earlier one.

    Each candidate is the horizon recourse roster against ``initial``; its
    cost is computed directly with no optimization.
    """
    if not candidates:
        raise ValueError("select_best needs at least one candidate")
    costs, breakdowns = [], []
    for roster in candidates:
        try:
            b = evaluate_under_path(instance, initial, path, recourse=roster, tree=tree)
        except ModelError:
            b = None
        breakdowns.append(b)
        costs.append(b.total if b is not None else math.inf)
    j = int(np.argmin(costs))
    if not math.isfinite(costs[j]):
        raise ModelError("no candidate can be evaluated under the realized path")
    return Selection(j, candidates[j], breakdowns[j], tuple(costs))


def expected_realized_cost(instance: Instance, initial: Roster, candidates: Sequence[Roster],
                           tree: Optional[ScenarioTree] = None) -> float:
    """Probability-weighted cost when the best candidate is picked after each leaf path."""
    tree = tree if tree is not None else instance.tree
    if tree is None:
        raise ModelError("expected realized cost needs a scenario tree")
    return float(sum(leaf.probability * select_best(instance, initial, candidates, leaf, tree).cost.total
                     for leaf in tree.leaves))
