"""Scenario trees over stage-wise independent discrete demand realizations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .domain.types import ModelError, as_demand

PROB_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Realization:
    label: str
    probability: float
    demand: np.ndarray  # (3, days in the stage)

    def __post_init__(self):
        object.__setattr__(self, "demand", as_demand(self.demand))
        if not self.probability > 0:
            raise ModelError(f"realization {self.label}: probability must be positive")

    def __eq__(self, other):
        if not isinstance(other, Realization):
            return NotImplemented
        return (self.label == other.label and self.probability == other.probability
                and np.array_equal(self.demand, other.demand))

    __hash__ = None


@dataclass(frozen=True)
class Node:
    id: int
    stage: int  # 0 for the dummy root
    path: tuple[int, ...]  # realization index chosen at stages 1..stage
    parent: Optional[int]
    children: tuple[int, ...]
    probability: float

    @property
    def is_root(self) -> bool:
        return self.stage == 0


@dataclass(frozen=True, eq=False)
class ScenarioTree:
    stages: tuple[tuple[Realization, ...], ...]
    nodes: tuple[Node, ...] = field(repr=False)

    @property
    def num_stages(self) -> int:
        return len(self.stages)

    @property
    def root(self) -> Node:
        return self.nodes[0]

    def __eq__(self, other):
        if not isinstance(other, ScenarioTree):
            return NotImplemented
        return self.stages == other.stages

    __hash__ = None

    def nodes_at(self, stage: int) -> list[Node]:
        return [n for n in self.nodes if n.stage == stage]

    @property
    def leaves(self) -> list[Node]:
        return self.nodes_at(self.num_stages)

    @property
    def stage_nodes(self) -> list[Node]:
        """All non-root nodes in breadth-first order."""
        return [n for n in self.nodes if n.stage > 0]

    def path_to(self, node: Node | int) -> list[Node]:
        """Non-root nodes from stage 1 down to ``node``."""
        node = self.nodes[node] if isinstance(node, int) else node
        out = []
        while node.parent is not None:
            out.append(node)
            node = self.nodes[node.parent]
        return out[::-1]

    def realization(self, node: Node | int) -> Realization:
        node = self.nodes[node] if isinstance(node, int) else node
        if node.is_root:
            raise ModelError("the stage-0 root carries no realization")
        return self.stages[node.stage - 1][node.path[-1]]

    def leaf_of(self, path: Sequence[int]) -> Node:
        for n in self.leaves:
            if n.path == tuple(path):
                return n
        raise KeyError(tuple(path))

    def expected_stage_demand(self, stage: int) -> np.ndarray:
        """Probability-weighted stage demand (stage >= 1), rounded up to integers."""
        mean = sum(r.probability * r.demand.astype(float) for r in self.stages[stage - 1])
        return as_demand(np.ceil(np.asarray(mean) - 1e-9).astype(np.int64))


def build_tree(stage_realizations: Sequence[Sequence[Realization]]) -> ScenarioTree:
    """Full product tree; stage h has prod_{h' <= h} |realizations_{h'}| nodes."""
    stages = tuple(tuple(rs) for rs in stage_realizations)
    if not stages:
        raise ModelError("a scenario tree needs at least one stage")
    for h, rs in enumerate(stages, start=1):
        if not rs:
            raise ModelError(f"stage {h} has no realizations")
        total = math.fsum(r.probability for r in rs)
        if abs(total - 1.0) > PROB_TOL:
            raise ModelError(f"stage {h} probabilities sum to {total}, expected 1")
        widths = {r.demand.shape[1] for r in rs}
        if len(widths) != 1:
            raise ModelError(f"stage {h} realizations cover different numbers of days")

    # breadth-first construction: ids are assigned stage by stage
    specs = [(0, (), None, 1.0)]
    frontier = [0]
    for h, rs in enumerate(stages, start=1):
        nxt = []
        for pid in frontier:
            _, ppath, _, pprob = specs[pid]
            for k, r in enumerate(rs):
                specs.append((h, ppath + (k,), pid, pprob * r.probability))
                nxt.append(len(specs) - 1)
        frontier = nxt
    children: dict[int, list[int]] = {i: [] for i in range(len(specs))}
    for i, (_, _, parent, _) in enumerate(specs):
        if parent is not None:
            children[parent].append(i)
    nodes = tuple(Node(i, h, path, parent, tuple(children[i]), prob)
                  for i, (h, path, parent, prob) in enumerate(specs))
    return ScenarioTree(stages, nodes)


def node_demand(tree: ScenarioTree, node: Node | int) -> np.ndarray:
    """Realized (3, stage days) demand at a stage node."""
    return tree.realization(node).demand


def single_path_tree(stage_demands: Sequence[np.ndarray]) -> ScenarioTree:
    """Deterministic tree: one realization with probability 1 per stage."""
    return build_tree([[Realization("base", 1.0, q)] for q in stage_demands])


def expected_value_tree(tree: ScenarioTree) -> ScenarioTree:
    return build_tree([[Realization("expected", 1.0, tree.expected_stage_demand(h))]
                       for h in range(1, tree.num_stages + 1)])
