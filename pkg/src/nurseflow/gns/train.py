"""Trajectory-balance training of the roster sampler.

The per-trajectory score is ``L = log R + sum log P_B - sum log P_F`` and the
training objective is its population variance over a batch, which cancels
the partition function. The log Z head is fitted separately by regressing it
toward the batch-mean score; that term touches the log Z head only.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .env import Env
from .policy import PolicyParams, masked_log_softmax


class TrainingDivergedError(RuntimeError):
    """A loss or parameter became non-finite during training."""


@dataclass
class Trajectory:
    actions: list[int]
    log_pf: np.ndarray  # (T,)
    log_pb: np.ndarray  # (T,)
    reward: float
    terminal: object
    # inputs for recomputing the scores under other parameters
    X: np.ndarray = field(repr=False)  # (T+1, input) encodings of s_0..s_T
    fmask: np.ndarray = field(repr=False)  # (T, A) masks at s_0..s_{T-1}
    bmask: np.ndarray = field(repr=False)  # (T, A) masks at s_1..s_T

    @property
    def score(self) -> float:
        return float(math.log(self.reward) + self.log_pb.sum() - self.log_pf.sum())

    def __len__(self) -> int:
        return len(self.actions)


def rollout(env: Env, params: PolicyParams, rng: np.random.Generator, greedy: bool = False) -> Trajectory:
    """Sample one complete trajectory of ``env.T`` steps under the forward policy."""
    T, A = env.T, env.num_actions
    state = env.initial()
    X = np.empty((T + 1, env.input_size))
    fmask = np.empty((T, A), dtype=bool)
    bmask = np.empty((T, A), dtype=bool)
    actions = []
    X[0] = env.encode(state)
    for t in range(T):
        fmask[t] = env.forward_mask(state)
        _, F, _, _ = params.forward(X[t][None, :])
        logp = masked_log_softmax(F[0], fmask[t])
        if greedy:
            a = int(np.argmax(logp))
        else:
            p = np.exp(logp)
            a = int(rng.choice(A, p=p / p.sum()))
        actions.append(a)
        state = env.step(state, a)
        X[t + 1] = env.encode(state)
        bmask[t] = env.backward_mask(state)
    reward = env.reward(state)
    traj = Trajectory(actions, np.zeros(T), np.zeros(T), reward, state, X, fmask, bmask)
    traj.log_pf, traj.log_pb = _log_probs(params, traj)
    return traj


def _log_probs(params: PolicyParams, traj: Trajectory):
    _, F, B, _ = params.forward(traj.X)
    idx = np.arange(len(traj.actions))
    acts = np.asarray(traj.actions)
    lpf = masked_log_softmax(F[:-1], traj.fmask)[idx, acts]
    lpb = masked_log_softmax(B[1:], traj.bmask)[idx, acts]
    return lpf, lpb


def scores(params: PolicyParams, batch: Sequence[Trajectory]) -> np.ndarray:
    out = []
    for tr in batch:
        lpf, lpb = _log_probs(params, tr)
        out.append(math.log(tr.reward) + lpb.sum() - lpf.sum())
    return np.asarray(out)


def variance_of_scores(values: Sequence[float]) -> float:
    v = np.asarray(values, dtype=float)
    return float(np.mean((v - v.mean()) ** 2))


def tb_loss(params: PolicyParams, batch: Sequence[Trajectory]) -> tuple[float, PolicyParams]:
    """Batch variance of the trajectory scores and its exact gradient."""
    if len(batch) < 2:
        raise ValueError("the variance objective needs a batch of at least two trajectories")
    B = len(batch)
    L = scores(params, batch)
    dL = 2.0 * (L - L.mean()) / B
    grad = None
    for tr, w in zip(batch, dL):
        X = tr.X
        H, F, Bl, _ = params.forward(X)
        idx = np.arange(len(tr.actions))
        acts = np.asarray(tr.actions)
        pf = np.exp(masked_log_softmax(F[:-1], tr.fmask))
        pb = np.exp(masked_log_softmax(Bl[1:], tr.bmask))
        gF = np.zeros_like(F)
        gB = np.zeros_like(Bl)
        # d log p[a] / d logits = onehot(a) - p
        onehot = np.zeros_like(pf)
        onehot[idx, acts] = 1.0
        gF[:-1] = -w * (onehot - pf)
        gB[1:] = w * (onehot - pb)
        g = params.backward(X, H, gF, gB, np.zeros(X.shape[0]))
        grad = g if grad is None else _add(grad, g)
    return float(np.mean((L - L.mean()) ** 2)), grad


def logz_loss(params: PolicyParams, batch: Sequence[Trajectory], target: float) -> tuple[float, PolicyParams]:
    """Squared error of log Z at the initial state against a fixed target, with gradient."""
    X = batch[0].X[:1]
    H, F, B, Z = params.forward(X)
    r = float(Z[0] - target)
    g = params.backward(X, H, np.zeros_like(F), np.zeros_like(B), np.array([2.0 * r]))
    return r * r, g


def _add(a: PolicyParams, b: PolicyParams) -> PolicyParams:
    return PolicyParams(*(x + y for x, y in zip(a.arrays(), b.arrays())))


def clip_by_norm(grad: PolicyParams, max_norm: float) -> tuple[PolicyParams, float]:
    norm = float(np.sqrt(sum(float((a * a).sum()) for a in grad.arrays())))
    if norm > max_norm > 0:
        grad = PolicyParams(*(a * (max_norm / norm) for a in grad.arrays()))
    return grad, norm


@dataclass
class TrainConfig:
    episodes: int = 1000
    update_freq: int = 4
    lr: float = 0.01
    batch: Optional[int] = None  # trajectories per update, defaults to update_freq
    T: Optional[int] = None  # fixed by the environment when None
    seed: int = 0
    hidden: int = 32
    clip: float = 10.0

    @property
    def batch_size(self) -> int:
        return self.batch if self.batch is not None else self.update_freq

    def validate(self) -> None:
        if self.episodes < 0:
            raise ValueError("episodes must be >= 0")
        if self.update_freq < 1:
            raise ValueError("update_freq must be >= 1")
        if self.batch_size < 2:
            raise ValueError("each update needs at least two trajectories")
        if not self.lr > 0 or self.hidden < 1:
            raise ValueError("lr must be positive and hidden >= 1")


@dataclass
class TrainLog:
    episode: list[int] = field(default_factory=list)
    reward: list[float] = field(default_factory=list)
    loss: list[float] = field(default_factory=list)  # last update's loss, nan before the first

    def append(self, episode: int, reward: float, loss: float) -> None:
        self.episode.append(episode)
        self.reward.append(reward)
        self.loss.append(loss)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["episode", "reward", "loss"])
        for e, r, l in zip(self.episode, self.reward, self.loss):
            w.writerow([e, repr(float(r)), repr(float(l))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "TrainLog":
        rows = list(csv.reader(io.StringIO(text)))
        if rows[0] != ["episode", "reward", "loss"]:
            raise ValueError(f"unexpected header {rows[0]}")
        log = cls()
        for e, r, l in rows[1:]:
            log.append(int(e), float(r), float(l))
        return log


def _streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    init_seq, roll_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(init_seq), np.random.default_rng(roll_seq)


def init_params(env: Env, config: TrainConfig) -> PolicyParams:
    """The parameters ``train`` starts from for this config."""
    return PolicyParams.init(env.input_size, config.hidden, env.num_actions, _streams(config.seed)[0])


def train(env: Env, config: TrainConfig = TrainConfig(),
          params: Optional[PolicyParams] = None) -> tuple[PolicyParams, TrainLog]:
    """Roll out one trajectory per episode and update every ``update_freq`` episodes.

    Each update takes the most recent ``batch`` trajectories. The parameter
    stream and the sampling stream both derive from ``config.seed``.
    """
    config.validate()
    if config.T is not None:
        env.T = config.T
    init_rng, roll_rng = _streams(config.seed)
    if params is None:
        params = PolicyParams.init(env.input_size, config.hidden, env.num_actions, init_rng)
    params = params.copy()
    log = TrainLog()
    recent: list[Trajectory] = []
    loss = math.nan
    for ep in range(config.episodes):
        tr = rollout(env, params, roll_rng)
        recent.append(tr)
        recent = recent[-config.batch_size:]
        if (ep + 1) % config.update_freq == 0 and len(recent) >= 2:
            loss, g = tb_loss(params, recent)
            target = float(scores(params, recent).mean())
            _, gz = logz_loss(params, recent, target)
            g, _ = clip_by_norm(_add(g, gz), config.clip)
            if not math.isfinite(loss):
                raise TrainingDivergedError(f"non-finite loss at episode {ep}")
            params = PolicyParams(*(p - config.lr * d for p, d in zip(params.arrays(), g.arrays())))
            if not params.is_finite():
                raise TrainingDivergedError(f"non-finite parameters after the update at episode {ep}")
        log.append(ep, tr.reward, loss)
    return params, log
