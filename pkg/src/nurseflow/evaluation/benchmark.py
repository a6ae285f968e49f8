"""Value-of-stochastic-solution benchmark: PP, EEV, TP and DP objectives."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

from ..domain.types import Instance, ModelError
from ..milp import (
    build_deterministic,
    build_two_stage_extensive,
    build_two_stage_tp,
    decode,
    fix_aggregates,
    fix_roster,
    initial_block,
)
from ..scenario import ScenarioTree, expected_value_tree
from ..solver import Solution, SolveLimits, solve


@dataclass(frozen=True)
class RunResult:
    objective: float
    best_bound: float
    status: str

    @property
    def gap(self) -> float:
        if not math.isfinite(self.objective):
            return math.inf
        return (self.objective - self.best_bound) / max(1.0, abs(self.objective))

    @property
    def proven(self) -> bool:
        return self.status == "optimal"

    @classmethod
    def of(cls, sol: Solution) -> "RunResult":
        return cls(sol.objective, sol.best_bound, sol.status)


def _run(system, limits: SolveLimits, backend: Optional[str]) -> tuple[RunResult, Solution]:
    sol = solve(system, limits, backend=backend)
    if not sol.has_solution:
        if sol.status == "infeasible":
            raise ModelError(f"{system.name} is infeasible")
        return RunResult(math.inf, sol.best_bound, sol.status), sol
    return RunResult.of(sol), sol


def compute_EEV(instance: Instance, tree: Optional[ScenarioTree] = None,
                limits: SolveLimits = SolveLimits(), backend: Optional[str] = None) -> tuple[RunResult, RunResult]:
    """Expected cost of the expected-value solution over the true tree.

    Solves the extensive form on the expected-value tree, then fixes the
    initial roster (β, x) and every stage's aggregate triple at all nodes of
    the true tree and optimizes only the detailed recourse. Returns
    (EEV, EV) run results.
    """
    tree = tree if tree is not None else instance.tree
    if tree is None:
        raise ModelError("EEV needs a scenario tree")
    ev_tree = expected_value_tree(tree)
    ev_sys = build_two_stage_extensive(instance, ev_tree)
    ev, ev_sol = _run(ev_sys, limits, backend)
    if not ev_sol.has_solution:
        return RunResult(math.inf, -math.inf, ev.status), ev
    dec = decode(ev_sys, ev_sol.values)
    by_stage = {n.stage: dec["aggregates"][n.id] for n in ev_tree.stage_nodes}
    sys = build_two_stage_extensive(instance, tree)
    sys = fix_roster(sys, initial_block(sys), dec["rosters"][()])
    sys = fix_aggregates(sys, {n.id: by_stage[n.stage] for n in tree.stage_nodes})
    eev, _ = _run(sys, limits, backend)
    if eev.status == "infeasible":
        raise ModelError("expected-value decisions admit no recourse")
    return eev, ev


@dataclass
class BenchmarkReport:
    instance: str
    PP: RunResult
    EEV: RunResult
    TP: RunResult
    DP: RunResult
    GNS: Optional[float] = None
    notes: list[str] = field(default_factory=list)

    @property
    def VSS_eev(self) -> float:
        return self.EEV.objective - self.PP.objective

    @property
    def VSS_tp(self) -> float:
        return self.TP.objective - self.PP.objective

    @property
    def gaps(self) -> dict[str, float]:
        out = {k: getattr(self, k).gap for k in ("PP", "EEV", "TP", "DP")}
        if self.GNS is not None:
            # signed relative difference to the stochastic optimum, never clamped
            out["GNS"] = (self.GNS - self.PP.objective) / max(1.0, abs(self.PP.objective))
        return out

    @property
    def non_proven(self) -> list[str]:
        return [k for k in ("PP", "EEV", "TP", "DP") if not getattr(self, k).proven]

    def as_dict(self) -> dict:
        return {
            "instance": self.instance,
            "runs": {k: asdict(getattr(self, k)) for k in ("PP", "EEV", "TP", "DP")},
            "GNS": self.GNS,
            "VSS_eev": self.VSS_eev,
            "VSS_tp": self.VSS_tp,
            "gaps": self.gaps,
            "non_proven": self.non_proven,
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True, allow_nan=True) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "BenchmarkReport":
        runs = {k: RunResult(**v) for k, v in doc["runs"].items()}
        return cls(doc["instance"], runs["PP"], runs["EEV"], runs["TP"], runs["DP"],
                   doc.get("GNS"), list(doc.get("notes", [])))


def compute_VSS(instance: Instance, tree: Optional[ScenarioTree] = None,
                limits: SolveLimits = SolveLimits(), backend: Optional[str] = None,
                gns: Optional[float] = None) -> BenchmarkReport:
    """Solve PP (extensive form), EEV, TP (stage-shared aggregates) and DP."""
    tree = tree if tree is not None else instance.tree
    pp, _ = _run(build_two_stage_extensive(instance, tree), limits, backend)
    eev, _ = compute_EEV(instance, tree, limits, backend)
    tp, _ = _run(build_two_stage_tp(instance, tree), limits, backend)
    dp, _ = _run(build_deterministic(instance), limits, backend)
    report = BenchmarkReport(instance.name, pp, eev, tp, dp, gns)
    if report.non_proven:
        report.notes.append("not proven optimal: " + ", ".join(report.non_proven))
    return report
