"""Generative roster sampler trained with trajectory balance."""

from .env import (
    EPSILON_REWARD,
    Env,
    RewardConfigError,
    RewardContext,
    SchedEnv,
    SchedState,
    SubsetEnv,
    SubsetState,
    cost_upper_bound,
    expected_path,
)
from .policy import PolicyParams, masked_log_softmax
from .sample import Candidate, CandidateSet, Selection, expected_realized_cost, sample_candidates, select_best
from .train import (
    TrainConfig,
    TrainingDivergedError,
    TrainLog,
    Trajectory,
    init_params,
    logz_loss,
    rollout,
    scores,
    tb_loss,
    train,
    variance_of_scores,
)

__all__ = [
    "EPSILON_REWARD", "Env", "RewardConfigError", "RewardContext", "SchedEnv", "SchedState",
    "SubsetEnv", "SubsetState", "cost_upper_bound", "expected_path", "PolicyParams",
    "masked_log_softmax", "Candidate", "CandidateSet", "Selection", "expected_realized_cost",
    "sample_candidates", "select_best", "TrainConfig", "TrainingDivergedError", "TrainLog",
    "Trajectory", "init_params", "logz_loss", "rollout", "scores", "tb_loss", "train",
    "variance_of_scores",
]
