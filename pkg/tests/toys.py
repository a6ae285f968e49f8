"""Seeded toy instances small enough for exhaustive oracles."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from nurseflow.domain import Horizon, Instance, WorkPolicy, toy_catalog
from nurseflow.instance_gen import DEFAULT_COSTS, CaseSpec, default_nurse, generate_case
from nurseflow.scenario import Realization, build_tree


def deterministic_toy(rng: np.random.Generator) -> Instance:
    """2 nurses, 3 days, 3 shifts with random policies, weekday, requests and demand."""
    cat = toy_catalog()
    hz = Horizon(3, (3,), start_weekday=int(rng.integers(7)))
    nurses = []
    for i in range(2):
        base = default_nurse(i, 1, cat)
        nurses.append(replace(
            base, policy=WorkPolicy(int(rng.integers(1, 4))), preferred_shifts=frozenset(cat.ids),
            max_consecutive_work=2, max_hours=16.0, min_rest_days_per_week=5, max_violations=2,
            requests=frozenset({(int(rng.integers(3)), cat.ids[int(rng.integers(3))])})))
    return Instance(hz, tuple(nurses), cat, DEFAULT_COSTS, 2, rng.integers(0, 3, size=(3, 3)),
                    name="toy-det")


def tree_toy(rng: np.random.Generator) -> Instance:
    """2 nurses, two 2-day stages starting on a Saturday, two realizations per stage."""
    cat = toy_catalog()
    hz = Horizon(4, (2, 2), start_weekday=5)
    nurses = []
    for i in range(2):
        base = default_nurse(i, 1, cat)
        nurses.append(replace(
            base, policy=WorkPolicy([1, 3][i]), preferred_shifts=frozenset(cat.ids),
            max_consecutive_work=3, max_hours=24.0, min_rest_days_per_week=3, max_weekend_work=1,
            max_violations=2, requests=frozenset({(int(rng.integers(4)), cat.ids[int(rng.integers(3))])})))
    stages = [[Realization("high", 0.6, rng.integers(0, 3, (3, 2))),
               Realization("low", 0.4, rng.integers(0, 2, (3, 2)))] for _ in range(2)]
    return Instance(hz, tuple(nurses), cat, DEFAULT_COSTS, 2, rng.integers(0, 2, (3, 4)),
                    build_tree(stages), name="toy-tree")


def deterministic_toys(n: int = 20, seed: int = 1) -> list[Instance]:
    rng = np.random.default_rng(seed)
    return [deterministic_toy(rng) for _ in range(n)]


def tree_toys(n: int = 5, seed: int = 5) -> list[Instance]:
    rng = np.random.default_rng(seed)
    return [tree_toy(rng) for _ in range(n)]


def small_case(eta: float = 1.0, seed: int = 0) -> Instance:
    """Generated 2-nurse case: toy catalog, two 2-day stages from a Saturday."""
    return generate_case(CaseSpec(2, eta, 2, seed, days_per_stage=2, start_weekday=5,
                                  requests_per_nurse=1, catalog="toy"))


def week_case(seed: int = 0) -> Instance:
    """Generated 2-nurse case with the default catalog and two 7-day stages."""
    return generate_case(CaseSpec(2, 1.0, 2, seed, days_per_stage=7))
