"""Costs of fixed rosters, the stochastic-solution benchmark and CSV reports."""

from .benchmark import BenchmarkReport, RunResult, compute_EEV, compute_VSS
from .costs import (
    CostBreakdown,
    InfeasibleRosterError,
    coverage_gap,
    evaluate_tree,
    evaluate_under_path,
    greedy_aggregates,
    initial_cost,
    resolve_recourse,
    stage_cost,
)
from .reports import (
    CoverageGapReport,
    FlexibilityPoint,
    RewardDistribution,
    coverage_gap_report,
    flexibility_from_csv,
    flexibility_level,
    flexibility_regularity,
    flexibility_to_csv,
    mean_flexibility_by_level,
    regularity_level,
    reward_distribution,
    roster_from_csv,
    roster_to_csv,
    share_above,
)

__all__ = [
    "BenchmarkReport", "RunResult", "compute_EEV", "compute_VSS", "CostBreakdown",
    "InfeasibleRosterError", "coverage_gap", "evaluate_tree", "evaluate_under_path",
    "greedy_aggregates", "initial_cost", "resolve_recourse", "stage_cost", "CoverageGapReport",
    "FlexibilityPoint", "RewardDistribution", "coverage_gap_report", "flexibility_from_csv",
    "flexibility_level", "flexibility_regularity", "flexibility_to_csv",
    "mean_flexibility_by_level", "regularity_level", "reward_distribution", "roster_from_csv", "roster_to_csv",
    "share_above",
]
