import math

import numpy as np
import pytest

from dqcroute.errors import ValidationError
from dqcroute.learn import (
    AgentConfig, Adam, QNetwork, ReplayBuffer, Trainer, epsilon,
    gradient_check, select_action, soft_update, td_target,
)


def vec(x, mask):
    return np.concatenate([np.asarray(x, dtype=float), np.asarray(mask, dtype=float)])


def small_net(n_in=6, hidden=(8, 7), n_out=4, seed=3):
    return QNetwork(n_in, hidden, n_out, seed=seed)


# -- forward ------------------------------------------------------------------

def test_forward_masks_to_zero():
    net = small_net()
    s = vec(np.linspace(-1, 1, 6), [0, 1, 0, 1])
    q = net.forward(s)
    assert q[0] == 0.0 and q[2] == 0.0
    assert (q >= 0.0).all()


def test_forward_zero_weights_all_zero():
    net = QNetwork(5, (4,), 3, init=False)
    q = net.forward(vec(np.ones(5), [1, 1, 1]))
    assert (q == 0.0).all()


def test_forward_nonnegative_everywhere():
    rng = np.random.default_rng(0)
    net = small_net()
    for _ in range(50):
        s = vec(rng.normal(size=6) * 10, rng.integers(0, 2, size=4))
        assert (net.forward(s) >= 0.0).all()


def test_forward_dimension_mismatch():
    net = small_net()
    with pytest.raises(ValueError):
        net.forward(np.ones(9))


def test_positive_scaling_preserves_argmax():
    net = small_net(seed=11)
    s = vec(np.linspace(0.5, 2.0, 6), [1, 1, 1, 1])
    q1 = net.forward(s)
    scaled = net.clone()
    scaled.weights[-1] *= 7.5
    scaled.biases[-1] *= 7.5
    q2 = scaled.forward(s)
    assert set(np.flatnonzero(q1 == q1.max())) == set(np.flatnonzero(q2 == q2.max()))


# -- selection ------------------------------------------------------------------

def test_select_action_exploring_uniform():
    net = small_net()
    s = vec(np.ones(6), [1, 0, 1, 1])
    rng = np.random.default_rng(5)
    counts = {0: 0, 2: 0, 3: 0}
    n = 6000
    for _ in range(n):
        counts[select_action(net, s, 1.0, rng)] += 1
    # chi-square against uniform over the 3 feasible actions, 99% quantile
    expected = n / 3
    chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
    assert chi2 < 9.21
    assert counts.keys() == {0, 2, 3}


def test_select_action_greedy_unique_max():
    net = QNetwork(3, (), 3, init=False)
    net.weights[0] = np.eye(3)
    s = vec([1.0, 5.0, 2.0], [1, 1, 1])
    rng = np.random.default_rng(0)
    assert select_action(net, s, 0.0, rng) == 1
    # feasibility wins over raw value
    s2 = vec([1.0, 5.0, 2.0], [1, 0, 1])
    assert select_action(net, s2, 0.0, rng) == 2


def test_select_action_greedy_tie_uniform():
    net = QNetwork(3, (), 3, init=False)  # all outputs 0 -> full tie
    s = vec([1.0, 1.0, 1.0], [1, 1, 0])
    rng = np.random.default_rng(9)
    seen = {select_action(net, s, 0.0, rng) for _ in range(200)}
    assert seen == {0, 1}


def test_select_action_never_infeasible():
    rng = np.random.default_rng(2)
    net = small_net(seed=8)
    for _ in range(2000):
        mask = rng.integers(0, 2, size=4)
        if mask.sum() == 0:
            mask[0] = 1
        s = vec(rng.normal(size=6), mask)
        a = select_action(net, s, float(rng.random()), rng)
        assert mask[a] == 1


# -- targets --------------------------------------------------------------------

def hand_batch(next_mask, rewards, dones, n_in=2):
    states = np.stack([vec(np.zeros(n_in), next_mask)] * len(rewards))
    return {
        "states": states,
        "actions": np.zeros(len(rewards), dtype=np.int64),
        "rewards": np.asarray(rewards, dtype=float),
        "next_states": states,
        "dones": np.asarray(dones, dtype=bool),
    }


class FixedNet(QNetwork):
    """Q-network stub returning fixed values (still masked)."""

    def __init__(self, values, n_in=2):
        super().__init__(n_in, (), len(values), init=False)
        self._values = np.asarray(values, dtype=float)

    def _forward_cached(self, x, mask):
        batch = x.shape[0] if x.ndim > 1 else 1
        raw = np.tile(self._values, (batch, 1)) if x.ndim > 1 else self._values.copy()
        rect = np.maximum(raw, 0.0)
        return rect * mask, raw, [x]


def test_td_target_terminal():
    target = FixedNet([4.0, 9.0])
    online = FixedNet([0.0, 1.0])
    batch = hand_batch([1, 1], rewards=[-3000.0], dones=[True])
    y = td_target(batch, online, target, 0.99, "dqn")
    assert y.tolist() == [-3000.0]


def test_td_target_dqn_vs_ddqn_hand_case():
    # target Q=(4,9); online argmax picks action 0 => DDQN bootstraps 4
    target = FixedNet([4.0, 9.0])
    online = FixedNet([5.0, 1.0])
    batch = hand_batch([1, 1], rewards=[1.0], dones=[False])
    y_ddqn = td_target(batch, online, target, 0.99, "ddqn")
    y_dqn = td_target(batch, online, target, 0.99, "dqn")
    assert y_ddqn.tolist() == [1.0 + 0.99 * 4.0]
    assert y_dqn.tolist() == [1.0 + 0.99 * 9.0]


def test_td_target_ddqn_coincides_when_argmax_agrees():
    target = FixedNet([4.0, 9.0])
    online = FixedNet([1.0, 5.0])
    batch = hand_batch([1, 1], rewards=[2.0], dones=[False])
    assert td_target(batch, online, target, 0.9, "ddqn").tolist() == \
        td_target(batch, online, target, 0.9, "dqn").tolist()


def test_td_target_respects_next_mask():
    target = FixedNet([4.0, 9.0])
    online = FixedNet([5.0, 9.0])
    batch = hand_batch([1, 0], rewards=[0.0], dones=[False])
    assert td_target(batch, online, target, 1.0, "dqn").tolist() == [4.0]
    assert td_target(batch, online, target, 1.0, "ddqn").tolist() == [4.0]


# -- epsilon schedule -------------------------------------------------------------

def test_epsilon_schedule():
    assert epsilon(0, 50.0) == 1.0
    assert abs(epsilon(10_000_000, 50.0) - 0.05) < 1e-12
    expected = 0.05 + 0.95 * math.exp(-1.0)
    assert abs(epsilon(50, 50.0) - expected) < 1e-12
    assert epsilon(50, 50.0, "hyperbolic") == 0.05 + 0.95 / 2.0
    assert epsilon(25, 50.0, "linear") == 0.5


# -- replay buffer ------------------------------------------------------------------

def test_replay_ring_and_determinism():
    buf1 = ReplayBuffer(8, 3, seed=4)
    buf2 = ReplayBuffer(8, 3, seed=4)
    for b in (buf1, buf2):
        for i in range(12):  # wraps around
            b.push(np.full(3, i), i, float(i), np.full(3, i + 1), i % 3 == 0)
    assert len(buf1) == 8
    s1 = buf1.sample(5)
    s2 = buf2.sample(5)
    for key in s1:
        assert np.array_equal(s1[key], s2[key])
    assert len(set(map(int, s1["actions"]))) == 5  # without replacement


def test_replay_sample_too_large():
    buf = ReplayBuffer(4, 2, seed=0)
    buf.push(np.zeros(2), 0, 0.0, np.zeros(2), False)
    with pytest.raises(ValueError):
        buf.sample(2)


# -- training mechanics ---------------------------------------------------------------

def rollout_batch(net, rng, n):
    dim = net.n_in + net.n_out
    for _ in range(n):
        s = rng.normal(size=dim)
        s[net.n_in:] = rng.integers(0, 2, size=net.n_out)
        s[net.n_in] = 1  # keep one action feasible
        s2 = rng.normal(size=dim)
        s2[net.n_in:] = 1
        yield s, int(rng.integers(net.n_out)), float(rng.normal()), s2, bool(rng.random() < 0.1)


def test_train_step_decreases_loss_on_frozen_batch():
    rng = np.random.default_rng(7)
    net = QNetwork(6, (16, 16), 4, seed=1)
    cfg = AgentConfig(lr=5e-3, batch=32, buffer=64, tau=0.0001, train_iters=1,
                      hidden=(16, 16))
    buf = ReplayBuffer(64, 10, seed=2)
    for s, a, r, s2, d in rollout_batch(net, rng, 32):
        # force feasible taken actions so the masked Q is trainable
        s[6 + a] = 1
        buf.push(s, a, r, s2, d)
    trainer = Trainer(net, buf, cfg)
    first = trainer.train_step()
    for _ in range(60):
        last = trainer.train_step()
    assert last < first


def test_train_step_skips_small_buffer():
    net = QNetwork(4, (4,), 2, seed=0)
    cfg = AgentConfig(batch=16, buffer=32, hidden=(4,))
    trainer = Trainer(net, ReplayBuffer(32, 6, seed=0), cfg)
    assert trainer.train_step() is None


def test_soft_update_tau_one_and_small():
    online = small_net(seed=1)
    target = small_net(seed=2)
    soft_update(target, online, 1.0)
    for tw, ow in zip(target.weights, online.weights):
        assert np.array_equal(tw, ow)
    target2 = small_net(seed=3)
    before = [w.copy() for w in target2.weights]
    soft_update(target2, online, 0.001)
    for tw, bw, ow in zip(target2.weights, before, online.weights):
        assert np.allclose(tw, 0.999 * bw + 0.001 * ow)


def test_target_converges_to_frozen_online():
    online = small_net(seed=4)
    target = small_net(seed=5)
    gap = [np.linalg.norm(tw - ow) for tw, ow in zip(target.weights, online.weights)]
    for _ in range(3):
        soft_update(target, online, 0.25)
        new_gap = [np.linalg.norm(tw - ow) for tw, ow in zip(target.weights, online.weights)]
        for g_new, g_old in zip(new_gap, gap):
            assert g_new == pytest.approx(0.75 * g_old, rel=1e-9)
        gap = new_gap


def test_weight_trajectory_bitwise_deterministic():
    def run():
        rng = np.random.default_rng(3)
        net = QNetwork(6, (12, 12), 4, seed=9)
        cfg = AgentConfig(lr=1e-3, batch=16, buffer=32, hidden=(12, 12))
        buf = ReplayBuffer(32, 10, seed=1)
        for s, a, r, s2, d in rollout_batch(net, rng, 32):
            buf.push(s, a, r, s2, d)
        trainer = Trainer(net, buf, cfg)
        for _ in range(10):
            trainer.train_step()
        return net

    n1, n2 = run(), run()
    for w1, w2 in zip(n1.weights, n2.weights):
        assert np.array_equal(w1, w2)


# -- gradient check --------------------------------------------------------------------

def test_gradient_check_small_net():
    rng = np.random.default_rng(0)
    net = small_net(seed=6)
    s = vec(rng.normal(size=6), [1, 0, 1, 1])
    target = rng.normal(size=4)
    assert gradient_check(net, s, target) < 1e-4


def test_gradient_check_linear_net():
    rng = np.random.default_rng(1)
    net = QNetwork(5, (), 3, seed=2)
    s = vec(rng.normal(size=5), [1, 1, 1])
    target = rng.normal(size=3)
    assert gradient_check(net, s, target) < 1e-7


def test_gradient_zero_on_dead_outputs():
    net = QNetwork(4, (), 2, init=False)
    net.biases[0] = np.array([-1.0, -2.0])  # both outputs dead under relu
    s = vec(np.ones(4), [1, 1])
    q = net.forward(s)
    assert (q == 0.0).all()
    gw, gb = net.backward(s, np.ones(2))
    assert (gw[0] == 0.0).all() and (gb[0] == 0.0).all()


# -- persistence ----------------------------------------------------------------------

def test_model_json_roundtrip(tmp_path):
    net = small_net(seed=12)
    path = tmp_path / "model.json"
    net.save(str(path))
    again = QNetwork.load(str(path))
    assert again.arch == net.arch
    for w1, w2 in zip(net.weights, again.weights):
        assert np.array_equal(w1, w2)
    s = vec(np.linspace(-1, 1, 6), [1, 1, 0, 1])
    assert np.array_equal(net.forward(s), again.forward(s))


def test_model_shape_validation(tmp_path):
    net = small_net()
    data = net.to_dict()
    data["weights"][0] = [[0.0] * 3] * 4
    with pytest.raises(ValidationError):
        QNetwork.from_dict(data)


def test_agent_config_validation():
    with pytest.raises(ValidationError):
        AgentConfig(gamma=0.0).validate()
    with pytest.raises(ValidationError):
        AgentConfig(batch=100, buffer=50).validate()
    with pytest.raises(ValidationError):
        AgentConfig(algo="ppo").validate()
