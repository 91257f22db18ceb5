"""Masked deep-Q machinery: feed-forward net, replay buffer, DQN/DDQN training.

The network takes [S_loc, S_dag] as input; the feasibility mask enters at the
output: Q = relu(raw) * mask (Hadamard product), so infeasible actions are
exactly 0 and feasible ones are non-negative. Everything is plain numpy and
deterministic under seeds: fixed-order reductions, seeded init, seeded replay
sampling.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict

import numpy as np

from .errors import ContractViolation, ValidationError

EPS_MIN = 0.05


@dataclass
class AgentConfig:
    lr: float = 1e-5
    batch: int = 2560
    buffer: int = 100_000
    eps_denominator: float = 50.0
    gamma: float = 0.99          # paper's discount (renamed from lambda)
    tau: float = 0.001
    train_every: int = 5
    train_iters: int = 10
    algo: str = "ddqn"           # "dqn" | "ddqn"
    hidden: tuple[int, int] = (140, 150)
    eps_form: str = "exp"        # "exp" | "hyperbolic" | "linear"

    def validate(self) -> None:
        if not 0.0 < self.gamma <= 1.0:
            raise ValidationError("gamma must lie in (0, 1]")
        if not 0.0 < self.tau <= 1.0:
            raise ValidationError("tau must lie in (0, 1]")
        if self.batch > self.buffer:
            raise ValidationError("batch cannot exceed buffer capacity")
        if self.algo not in ("dqn", "ddqn"):
            raise ValidationError(f"unknown algo {self.algo!r}")
        if self.eps_form not in ("exp", "hyperbolic", "linear"):
            raise ValidationError(f"unknown eps_form {self.eps_form!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "AgentConfig":
        data = dict(data)
        if "hidden" in data:
            data["hidden"] = tuple(data["hidden"])
        cfg = cls(**data)
        cfg.validate()
        return cfg


def epsilon(episode: int, eps_d: float, form: str = "exp") -> float:
    """Exploration rate schedule with floor EPS_MIN."""
    if episode < 0:
        raise ValueError("episode must be >= 0")
    if form == "exp":
        return EPS_MIN + (1.0 - EPS_MIN) * math.exp(-episode / eps_d)
    if form == "hyperbolic":
        return EPS_MIN + (1.0 - EPS_MIN) / (1.0 + episode / eps_d)
    if form == "linear":
        return max(EPS_MIN, 1.0 - episode / eps_d)
    raise ValueError(f"unknown schedule form {form!r}")


class QNetwork:
    """MLP with ReLU hidden layers, ReLU-rectified output, and a Hadamard
    mask layer. Input dimension excludes the mask; callers pass the full
    state vector [S_loc, S_dag, S_msk] and it is split here."""

    def __init__(self, n_in: int, hidden: tuple[int, ...], n_out: int,
                 seed: int = 0, init: bool = True):
        self.n_in = n_in
        self.hidden = tuple(hidden)
        self.n_out = n_out
        self.seed = seed
        sizes = [n_in, *hidden, n_out]
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        rng = np.random.default_rng(seed)
        for fan_in, fan_out in zip(sizes, sizes[1:]):
            if init:
                limit = math.sqrt(6.0 / fan_in)
                w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
            else:
                w = np.zeros((fan_in, fan_out))
            self.weights.append(w)
            self.biases.append(np.zeros(fan_out))

    # -- shape helpers -----------------------------------------------------

    @property
    def arch(self) -> list[int]:
        return [self.n_in, *self.hidden, self.n_out]

    def split(self, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Split a full state vector (or batch) into net input and mask."""
        if s.shape[-1] != self.n_in + self.n_out:
            raise ValueError(
                f"state vector of length {s.shape[-1]} does not match "
                f"input {self.n_in} + mask {self.n_out}")
        return s[..., : self.n_in], s[..., self.n_in:]

    def clone(self) -> "QNetwork":
        dup = QNetwork(self.n_in, self.hidden, self.n_out, seed=self.seed, init=False)
        dup.weights = [w.copy() for w in self.weights]
        dup.biases = [b.copy() for b in self.biases]
        return dup

    # -- forward / backward --------------------------------------------------

    def _forward_cached(self, x: np.ndarray, mask: np.ndarray):
        acts = [x]
        h = x
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.maximum(h @ w + b, 0.0)
            acts.append(h)
        raw = h @ self.weights[-1] + self.biases[-1]
        rect = np.maximum(raw, 0.0)
        return rect * mask, raw, acts

    def forward(self, s: np.ndarray) -> np.ndarray:
        """Masked Q-values for one state vector or a batch of them."""
        x, mask = self.split(np.asarray(s, dtype=float))
        q, _, _ = self._forward_cached(x, mask)
        return q

    def backward(self, s: np.ndarray, d_q: np.ndarray):
        """Gradients of a scalar loss w.r.t. all parameters, given dL/dQ on
        the masked outputs. Returns (grad_weights, grad_biases)."""
        s = np.atleast_2d(np.asarray(s, dtype=float))
        d_q = np.atleast_2d(np.asarray(d_q, dtype=float))
        x, mask = self.split(s)
        _, raw, acts = self._forward_cached(x, mask)
        delta = d_q * mask * (raw > 0.0)
        gw: list[np.ndarray] = [None] * len(self.weights)  # type: ignore[list-item]
        gb: list[np.ndarray] = [None] * len(self.biases)  # type: ignore[list-item]
        for layer in range(len(self.weights) - 1, -1, -1):
            gw[layer] = acts[layer].T @ delta
            gb[layer] = delta.sum(axis=0)
            if layer > 0:
                delta = (delta @ self.weights[layer].T) * (acts[layer] > 0.0)
        return gw, gb

    # -- persistence ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "arch": self.arch,
            "seed": self.seed,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def from_dict(cls, data: dict) -> "QNetwork":
        try:
            arch = [int(x) for x in data["arch"]]
            weights = [np.asarray(w, dtype=float) for w in data["weights"]]
            biases = [np.asarray(b, dtype=float) for b in data["biases"]]
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed model data: {exc}") from exc
        if len(arch) < 2:
            raise ValidationError("model arch needs at least input and output sizes")
        net = cls(arch[0], tuple(arch[1:-1]), arch[-1], seed=int(data.get("seed", 0)), init=False)
        if len(weights) != len(net.weights) or len(biases) != len(net.biases):
            raise ValidationError("model layer count does not match arch")
        for i, (w, b) in enumerate(zip(weights, biases)):
            if w.shape != net.weights[i].shape or b.shape != net.biases[i].shape:
                raise ValidationError(
                    f"layer {i} shape {w.shape}/{b.shape} does not match arch {arch}")
            net.weights[i] = w
            net.biases[i] = b
        return net

    @classmethod
    def load(cls, path: str) -> "QNetwork":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def select_action(net: QNetwork, s: np.ndarray, eps: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy over feasible actions; greedy ties break uniformly at
    random from the given stream."""
    _, mask = net.split(np.asarray(s, dtype=float))
    feasible = np.flatnonzero(mask > 0.0)
    if feasible.size == 0:
        raise ContractViolation("state has an all-zero action mask")
    if eps > 0.0 and rng.random() < eps:
        return int(feasible[rng.integers(feasible.size)])
    q = net.forward(s)
    qf = q[feasible]
    top = np.flatnonzero(qf == qf.max())
    return int(feasible[top[rng.integers(top.size)]])


def td_target(batch: dict, online: QNetwork, target: QNetwork, gamma: float,
              algo: str) -> np.ndarray:
    """Bootstrap targets. DQN: max feasible target-Q of the next state.
    DDQN: target-Q of the online net's feasible argmax."""
    rewards = batch["rewards"]
    dones = batch["dones"]
    next_states = batch["next_states"]
    q_t = target.forward(next_states)
    _, next_mask = target.split(next_states)
    neg = np.where(next_mask > 0.0, 0.0, -np.inf)
    if algo == "dqn":
        boot = (q_t + neg).max(axis=1)
    elif algo == "ddqn":
        q_o = online.forward(next_states)
        a_star = (q_o + neg).argmax(axis=1)
        boot = q_t[np.arange(len(q_t)), a_star]
    else:
        raise ValueError(f"unknown algo {algo!r}")
    return np.where(dones, rewards, rewards + gamma * boot)


class ReplayBuffer:
    """Ring buffer of transitions with seeded uniform without-replacement
    batch sampling. States are stored as float32 (the encodings are small
    integers, exactly representable)."""

    def __init__(self, capacity: int, state_dim: int, seed: int = 0):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim), dtype=np.float32)
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity, dtype=np.float64)
        self.next_states = np.zeros((capacity, state_dim), dtype=np.float32)
        self.dones = np.zeros(capacity, dtype=bool)
        self.rng = np.random.default_rng(seed)
        self._next = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def push(self, state, action: int, reward: float, next_state, done: bool) -> None:
        i = self._next
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self.dones[i] = done
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, batch: int) -> dict:
        if batch > self._size:
            raise ValueError("not enough transitions to sample")
        idx = self.rng.choice(self._size, size=batch, replace=False)
        return {
            "states": self.states[idx].astype(np.float64),
            "actions": self.actions[idx],
            "rewards": self.rewards[idx],
            "next_states": self.next_states[idx].astype(np.float64),
            "dones": self.dones[idx],
        }


class Adam:
    """Adam over a QNetwork's parameter list (beta1=0.9, beta2=0.999, eps=1e-8)."""

    def __init__(self, net: QNetwork, lr: float):
        self.lr = lr
        self.beta1, self.beta2, self.eps = 0.9, 0.999, 1e-8
        self.t = 0
        self.m_w = [np.zeros_like(w) for w in net.weights]
        self.v_w = [np.zeros_like(w) for w in net.weights]
        self.m_b = [np.zeros_like(b) for b in net.biases]
        self.v_b = [np.zeros_like(b) for b in net.biases]

    def update(self, net: QNetwork, gw: list[np.ndarray], gb: list[np.ndarray]) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for i in range(len(net.weights)):
            for params, grads, m, v in (
                (net.weights, gw, self.m_w, self.v_w),
                (net.biases, gb, self.m_b, self.v_b),
            ):
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * grads[i]
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * grads[i] ** 2
                params[i] -= self.lr * (m[i] / b1c) / (np.sqrt(v[i] / b2c) + self.eps)


def soft_update(target: QNetwork, online: QNetwork, tau: float) -> None:
    for tw, ow in zip(target.weights, online.weights):
        tw *= 1.0 - tau
        tw += tau * ow
    for tb, ob in zip(target.biases, online.biases):
        tb *= 1.0 - tau
        tb += tau * ob


class Trainer:
    """Owns the online/target pair, the replay buffer and the Adam state.
    One train_step = one sampled batch, one Adam update on the MSE TD error
    of the taken actions, one soft target update."""

    def __init__(self, online: QNetwork, buffer: ReplayBuffer, config: AgentConfig):
        config.validate()
        self.online = online
        self.target = online.clone()
        self.buffer = buffer
        self.config = config
        self.adam = Adam(online, config.lr)

    def train_step(self) -> float | None:
        cfg = self.config
        if len(self.buffer) < cfg.batch:
            return None
        batch = self.buffer.sample(cfg.batch)
        y = td_target(batch, self.online, self.target, cfg.gamma, cfg.algo)
        q = self.online.forward(batch["states"])
        rows = np.arange(len(y))
        taken = batch["actions"]
        err = q[rows, taken] - y
        loss = float(np.mean(err ** 2))
        d_q = np.zeros_like(q)
        d_q[rows, taken] = 2.0 * err / len(y)
        gw, gb = self.online.backward(batch["states"], d_q)
        self.adam.update(self.online, gw, gb)
        soft_update(self.target, self.online, cfg.tau)
        return loss


def gradient_check(net: QNetwork, s: np.ndarray, target_vec: np.ndarray,
                   step: float = 1e-5) -> float:
    """Max relative error of analytic vs central-difference gradients of the
    MSE loss between the masked outputs and target_vec. Exact loops over
    every parameter, so intended for verification runs, not training."""
    s = np.asarray(s, dtype=float)
    target_vec = np.asarray(target_vec, dtype=float)

    def loss() -> float:
        q = net.forward(s)
        return float(np.mean((q - target_vec) ** 2))

    q0 = net.forward(s)
    d_q = 2.0 * (q0 - target_vec) / target_vec.size
    gw, gb = net.backward(s, d_q)

    worst = 0.0
    for analytic, params in ((gw, net.weights), (gb, net.biases)):
        for grad, arr in zip(analytic, params):
            flat = arr.reshape(-1)
            gflat = grad.reshape(-1)
            for i in range(flat.size):
                keep = flat[i]
                flat[i] = keep + step
                up = loss()
                flat[i] = keep - step
                down = loss()
                flat[i] = keep
                numeric = (up - down) / (2.0 * step)
                denom = abs(gflat[i]) + abs(numeric)
                if denom > 1e-8:
                    worst = max(worst, abs(gflat[i] - numeric) / denom)
    return worst
