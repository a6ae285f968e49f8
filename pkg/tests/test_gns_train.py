import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nurseflow.gns import (
    PolicyParams,
    SubsetEnv,
    TrainConfig,
    TrainingDivergedError,
    TrainLog,
    init_params,
    logz_loss,
    masked_log_softmax,
    rollout,
    scores,
    tb_loss,
    train,
    variance_of_scores,
)


def reward(k):
    return 1.0 + len(k) + 0.5 * sum(k)


ENV = SubsetEnv(3, 3, reward)


def params(seed=0, hidden=3):
    return PolicyParams.init(ENV.input_size, hidden, ENV.num_actions, np.random.default_rng(seed))


def batch(p, n=4, seed=1):
    rng = np.random.default_rng(seed)
    return [rollout(ENV, p, rng) for _ in range(n)]


def central_difference(fn, p: PolicyParams, h=1e-5) -> np.ndarray:
    v = p.flat()
    out = np.empty_like(v)
    for j in range(v.size):
        up, down = v.copy(), v.copy()
        up[j] += h
        down[j] -= h
        out[j] = (fn(p.with_flat(up)) - fn(p.with_flat(down))) / (2 * h)
    return out


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-20, 20), min_size=1, max_size=8), st.integers(0, 2**16))
def test_masked_log_softmax_normalizes_over_allowed_actions(logits, bits):
    x = np.array(logits)
    mask = np.array([(bits >> k) & 1 == 1 for k in range(x.size)])
    mask[0] = True
    lp = masked_log_softmax(x, mask)
    assert np.all(np.isneginf(lp[~mask]))
    assert math.isclose(np.exp(lp[mask]).sum(), 1.0, rel_tol=1e-12)


def test_rollout_respects_masks_and_records_log_probs():
    p = params()
    for tr in batch(p, 10):
        assert len(tr) == ENV.T and ENV.is_terminal(tr.terminal)
        assert all(tr.fmask[t, a] for t, a in enumerate(tr.actions))
        assert all(tr.bmask[t, a] for t, a in enumerate(tr.actions))
        assert tr.reward == reward(tuple(sorted(tr.terminal.items)))
        assert math.isclose(scores(p, [tr])[0], tr.score, rel_tol=1e-12)


def test_identical_trajectories_have_zero_loss():
    p = params()
    tr = batch(p, 1)[0]
    loss, grad = tb_loss(p, [tr, tr, tr])
    assert loss < 1e-28  # the batch mean of equal floats can round
    assert np.allclose(grad.flat(), 0.0, atol=1e-12)


def test_two_trajectory_variance_by_hand():
    p = params()
    a, b = batch(p, 2, seed=3)
    loss, _ = tb_loss(p, [a, b])
    assert math.isclose(loss, ((a.score - b.score) / 2) ** 2, rel_tol=1e-10)
    assert variance_of_scores([1.0, 3.0]) == 1.0


def test_single_trajectory_batch_is_rejected():
    p = params()
    with pytest.raises(ValueError):
        tb_loss(p, batch(p, 1))


@pytest.mark.parametrize("seed", range(3))
def test_gradient_matches_central_differences(seed):
    p = params(seed)
    b = batch(p, 4, seed=seed + 10)
    _, grad = tb_loss(p, b)
    fd = central_difference(lambda q: tb_loss(q, b)[0], p)
    err = np.abs(grad.flat() - fd) / np.maximum(1.0, np.abs(fd))
    assert err.max() < 1e-6


def test_log_z_gradient_matches_central_differences():
    p = params(5)
    b = batch(p, 2)
    _, grad = logz_loss(p, b, target=1.7)
    fd = central_difference(lambda q: logz_loss(q, b, 1.7)[0], p)
    assert np.allclose(grad.flat(), fd, atol=1e-7)


def test_zero_episodes_returns_the_initial_parameters():
    cfg = TrainConfig(episodes=0, hidden=4)
    out, log = train(ENV, cfg)
    assert np.array_equal(out.flat(), init_params(ENV, cfg).flat())
    assert log.episode == []


def test_training_is_reproducible():
    cfg = TrainConfig(episodes=40, hidden=4, lr=0.05, seed=7)
    p1, log1 = train(ENV, cfg)
    p2, log2 = train(ENV, cfg)
    assert log1.to_csv() == log2.to_csv()
    assert np.array_equal(p1.flat(), p2.flat())
    assert math.isnan(log1.loss[0]) and not math.isnan(log1.loss[-1])
    _, log3 = train(ENV, TrainConfig(episodes=40, hidden=4, lr=0.05, seed=8))
    assert log3.to_csv() != log1.to_csv()


def test_train_log_round_trip():
    _, log = train(ENV, TrainConfig(episodes=9, hidden=2))
    back = TrainLog.from_csv(log.to_csv())
    assert back.to_csv() == log.to_csv()
    assert back.episode == list(range(9))


def test_policy_text_round_trip_is_exact(tmp_path):
    p = params(2, hidden=5)
    path = tmp_path / "policy.txt"
    p.save(path)
    q = PolicyParams.load(path)
    assert np.array_equal(p.flat(), q.flat()) and q.sizes == p.sizes
    with pytest.raises(ValueError):
        PolicyParams.loads(p.dumps().replace("nurseflow-policy 1", "nurseflow-policy 9", 1))


@pytest.mark.filterwarnings("ignore:overflow")
def test_divergence_is_reported():
    cfg = TrainConfig(episodes=16, hidden=3, lr=1e308, clip=0.0)
    with pytest.raises(TrainingDivergedError):
        train(ENV, cfg)


@pytest.mark.parametrize("bad", [dict(episodes=-1), dict(update_freq=0), dict(update_freq=1),
                                 dict(lr=0.0), dict(hidden=0)])
def test_invalid_configs(bad):
    with pytest.raises(ValueError):
        TrainConfig(**bad).validate()
