"""Experiment orchestration: configs, presets, training/eval loops, metrics.

Every run is driven by one ExperimentConfig (TOML file or named preset).
Randomness is split into labeled substreams derived from the master seed via
SHA-256, so the draw count of one concern (placement, circuit, generation,
exploration, replay, init) never perturbs another. Metrics go to a CSV with
the fixed header below; models to the JSON format of the learn module.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import random
import sys
import time
from dataclasses import dataclass, field

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import topology
from .circuit import CircuitDag, load_file as load_circuit, random_circuit
from .env import RUNNING, SUCCESS, CompilerEnv, EnvConfig
from .errors import ValidationError
from .learn import AgentConfig, QNetwork, ReplayBuffer, Trainer, epsilon, select_action

CSV_HEADER = ["episode", "seed", "gates_total", "gates_completed",
              "stops_used", "success", "cum_reward", "epsilon", "wall_ms"]


def substream(master: int, label: str) -> int:
    """Deterministic 64-bit seed for a named concern."""
    digest = hashlib.sha256(f"{master}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass
class EpisodeRecord:
    episode: int
    seed: int
    gates_total: int
    gates_completed: int
    stops_used: int
    success: bool
    cum_reward: float
    epsilon: float
    wall_ms: float

    def validate(self, deadline: int) -> None:
        if self.success:
            if self.gates_completed != self.gates_total:
                raise ValidationError("success with incomplete gates")
            if self.stops_used > deadline:
                raise ValidationError("success past the deadline")
        elif self.stops_used != deadline:
            raise ValidationError("failed episode must use the full deadline")


@dataclass
class ExperimentConfig:
    topology: str | dict = "guadalupe"
    circuit: dict = field(default_factory=lambda: {"num_qubits": 18, "gates": 30})
    env: EnvConfig = field(default_factory=EnvConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    episodes: int = 10_000
    seed: int = 0
    out_dir: str | None = None
    # "random": uniform injective placement over all nodes. "balanced":
    # uniform over placements that leave every QPU at least one free node
    # (on small crowded topologies a fully packed QPU can never clear its
    # link qubit, making cross-QPU gates uncompilable from the start).
    placement: str = "random"

    def validate(self) -> None:
        self.env.validate()
        self.agent.validate()
        if self.episodes < 0:
            raise ValidationError("episodes must be >= 0")
        if self.placement not in ("random", "balanced"):
            raise ValidationError(f"unknown placement policy {self.placement!r}")
        if "file" not in self.circuit:
            if self.circuit.get("num_qubits", 0) < 2 or self.circuit.get("gates", -1) < 0:
                raise ValidationError("circuit spec needs num_qubits >= 2 and gates >= 0")
            if self.circuit["gates"] > self.env.g_max:
                raise ValidationError("g_max must cover the circuit gate count")

    def to_dict(self) -> dict:
        return {
            "topology": self.topology,
            "circuit": dict(self.circuit),
            "env": self.env.to_dict(),
            "agent": self.agent.to_dict(),
            "episodes": self.episodes,
            "seed": self.seed,
            "out_dir": self.out_dir,
            "placement": self.placement,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {"topology", "circuit", "env", "agent", "episodes", "seed",
                 "out_dir", "placement"}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(
            topology=data.get("topology", "guadalupe"),
            circuit=dict(data.get("circuit", {"num_qubits": 18, "gates": 30})),
            env=EnvConfig.from_dict(data.get("env", {})),
            agent=AgentConfig.from_dict(data.get("agent", {})),
            episodes=int(data.get("episodes", 10_000)),
            seed=int(data.get("seed", 0)),
            out_dir=data.get("out_dir"),
            placement=data.get("placement", "random"),
        )
        cfg.validate()
        return cfg

    @classmethod
    def from_toml(cls, path: str) -> "ExperimentConfig":
        with open(path, "rb") as fh:
            return cls.from_dict(tomllib.load(fh))


# -- presets ----------------------------------------------------------------

def _two_guadalupe() -> dict:
    edges = [list(e) for e in topology.GUADALUPE_EDGES]
    return {"qpus": [{"nodes": 16, "edges": edges}, {"nodes": 16, "edges": edges}],
            "quantum_links": [[0, 15, 1, 0]]}


def _two_line4() -> dict:
    line = [[0, 1], [1, 2], [2, 3]]
    return {"qpus": [{"nodes": 4, "edges": line}, {"nodes": 4, "edges": line}],
            "quantum_links": [[0, 3, 1, 0]]}


def _paper_preset(p_gen: float, gates: int, hidden: tuple[int, int],
                  algo: str = "ddqn") -> ExperimentConfig:
    return ExperimentConfig(
        topology=_two_guadalupe(),
        circuit={"num_qubits": 18, "gates": gates},
        env=EnvConfig(p_gen=p_gen, g_max=gates),
        agent=AgentConfig(hidden=hidden, algo=algo),
        episodes=10_000,
    )


def _desk_preset(p_gen: float) -> ExperimentConfig:
    return ExperimentConfig(
        topology=_two_line4(),
        circuit={"num_qubits": 6, "gates": 10},
        env=EnvConfig(p_gen=p_gen, deadline=300, g_max=10),
        agent=AgentConfig(lr=1e-3, batch=256, buffer=20_000, hidden=(64, 64),
                          tau=0.01, train_every=5, train_iters=3,
                          eps_denominator=400.0),
        episodes=3000,
        placement="balanced",
    )


PRESETS = {
    # paper-scale experiments (PPO excluded by scope)
    "guadalupe2_p095": lambda: _paper_preset(0.95, 30, (140, 150)),
    "guadalupe2_p07": lambda: _paper_preset(0.7, 30, (240, 200)),
    "guadalupe2_p05": lambda: _paper_preset(0.5, 30, (240, 200)),
    "guadalupe2_g40": lambda: _paper_preset(0.95, 40, (140, 150)),
    "guadalupe2_g50": lambda: _paper_preset(0.95, 50, (140, 150)),
    "guadalupe2_dqn_p095": lambda: _paper_preset(0.95, 30, (140, 150), algo="dqn"),
    # desk-scale presets for verification runs
    "desk_small": lambda: _desk_preset(1.0),
    "desk_stoch": lambda: _desk_preset(0.7),
}


def load_preset(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ValidationError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    return PRESETS[name]()


# -- run plumbing -------------------------------------------------------------

def _draw_circuit(config: ExperimentConfig, rng: random.Random) -> CircuitDag:
    if "file" in config.circuit:
        return load_circuit(config.circuit["file"])
    return random_circuit(config.circuit["num_qubits"], config.circuit["gates"], rng)


def draw_placement(graph, num_qubits: int, policy: str,
                   rng: random.Random) -> dict[int, int] | None:
    """Harness-side placement draw. ``random`` defers to the environment's
    own uniform draw; ``balanced`` rejection-samples until every QPU keeps a
    free node (still uniform over the valid placements)."""
    if policy == "random":
        return None
    caps = graph.capacities
    if num_qubits > graph.num_nodes - len(caps):
        raise ValidationError("balanced placement needs a free node per QPU")
    while True:
        nodes = rng.sample(range(graph.num_nodes), num_qubits)
        used: dict[int, int] = {}
        for v in nodes:
            used[graph.qpu_of[v]] = used.get(graph.qpu_of[v], 0) + 1
        if all(used.get(q, 0) < cap for q, cap in caps.items()):
            return {q: nodes[q] for q in range(num_qubits)}


def _fresh_net(env: CompilerEnv, config: ExperimentConfig, seed: int) -> QNetwork:
    n_in = env.graph.num_nodes + 3 * config.env.g_max
    return QNetwork(n_in, config.agent.hidden, len(env.table), seed=seed)


def _check_model(net: QNetwork, env: CompilerEnv, config: ExperimentConfig) -> None:
    n_in = env.graph.num_nodes + 3 * config.env.g_max
    if net.n_in != n_in or net.n_out != len(env.table):
        raise ValidationError(
            f"model arch {net.arch} does not match topology/action table "
            f"(expected input {n_in}, output {len(env.table)})")


def rollout(env: CompilerEnv, circuit: CircuitDag, net: QNetwork | None,
            eps: float, policy_rng: np.random.Generator,
            env_seed: int, placement: dict[int, int] | None = None,
            on_transition=None) -> tuple[float, bool, int, int]:
    """One episode. ``net=None`` plays the uniform-random-feasible policy.
    Returns (cum_reward, success, stops_used, actions_taken)."""
    result = env.reset(circuit, placement=placement, seed=env_seed)
    cum_reward = result.reward
    actions = 0
    while result.status == RUNNING:
        if net is None:
            mask = env.mask()
            feasible = [i for i, b in enumerate(mask) if b]
            action = int(feasible[policy_rng.integers(len(feasible))])
            state_vec = None
        else:
            state_vec = env.encode()
            action = select_action(net, state_vec, eps, policy_rng)
        result = env.step(action)
        cum_reward += result.reward
        actions += 1
        if on_transition is not None:
            on_transition(state_vec, action, result)
    return cum_reward, result.status == SUCCESS, env.state.stops, actions


def train(config: ExperimentConfig, out_dir: str | None = None,
          progress=None) -> tuple[list[EpisodeRecord], QNetwork, str | None, str | None]:
    """Run the training loop: fresh random circuit and placement per episode,
    epsilon-greedy acting, replay training on the configured schedule.
    Returns (records, net, csv_path, model_path); paths are None when no
    output directory is configured."""
    config.validate()
    graph = topology.build(config.topology)
    env = CompilerEnv(graph, config.env)
    agent_cfg = config.agent
    master = config.seed

    circuit_rng = random.Random(substream(master, "circuit"))
    placement_rng = random.Random(substream(master, "placement"))
    explore_rng = np.random.default_rng(substream(master, "explore"))
    net = _fresh_net(env, config, seed=substream(master, "init") % 2**32)
    state_dim = graph.num_nodes + 3 * config.env.g_max + len(env.table)
    buffer = ReplayBuffer(agent_cfg.buffer, state_dim, seed=substream(master, "replay"))
    trainer = Trainer(net, buffer, agent_cfg)

    records: list[EpisodeRecord] = []
    actions_since_train = 0
    for episode in range(config.episodes):
        t0 = time.perf_counter()
        eps = epsilon(episode, agent_cfg.eps_denominator, agent_cfg.eps_form)
        circuit = _draw_circuit(config, circuit_rng)
        env_seed = substream(master, f"env:{episode}")
        placement = draw_placement(graph, circuit.num_qubits, config.placement,
                                   placement_rng)

        result = env.reset(circuit, placement=placement, seed=env_seed)
        cum_reward = result.reward
        state_vec = env.encode() if result.status == RUNNING else None
        while result.status == RUNNING:
            action = select_action(net, state_vec, eps, explore_rng)
            result = env.step(action)
            cum_reward += result.reward
            next_vec = env.encode()
            buffer.push(state_vec, action, result.reward, next_vec, result.done)
            state_vec = next_vec
            actions_since_train += 1
            if actions_since_train >= agent_cfg.train_every:
                actions_since_train = 0
                for _ in range(agent_cfg.train_iters):
                    trainer.train_step()

        st = env.state
        rec = EpisodeRecord(
            episode=episode,
            seed=env_seed % 2**32,
            gates_total=len(circuit.gates),
            gates_completed=len(st.dag.done),
            stops_used=st.stops,
            success=result.status == SUCCESS,
            cum_reward=cum_reward,
            epsilon=eps,
            wall_ms=(time.perf_counter() - t0) * 1000.0,
        )
        rec.validate(config.env.deadline)
        records.append(rec)
        if progress is not None:
            progress(rec)

    csv_path = model_path = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        csv_path = os.path.join(out_dir, "metrics.csv")
        model_path = os.path.join(out_dir, "model.json")
        emit_metrics(records, csv_path)
        net.save(model_path)
    return records, net, csv_path, model_path


def evaluate(net: QNetwork | None, config: ExperimentConfig, episodes: int,
             policy: str = "greedy") -> tuple[list[EpisodeRecord], dict]:
    """Greedy (eps=0) or random-baseline rollouts; no training. Returns
    per-episode records and an aggregate summary."""
    config.validate()
    if policy not in ("greedy", "random"):
        raise ValidationError(f"unknown policy {policy!r}")
    graph = topology.build(config.topology)
    env = CompilerEnv(graph, config.env)
    if policy == "greedy":
        if net is None:
            raise ValidationError("greedy evaluation needs a model")
        _check_model(net, env, config)
    master = config.seed
    circuit_rng = random.Random(substream(master, "eval-circuit"))
    placement_rng = random.Random(substream(master, "eval-placement"))
    policy_rng = np.random.default_rng(substream(master, "eval-policy"))

    records: list[EpisodeRecord] = []
    for episode in range(episodes):
        t0 = time.perf_counter()
        circuit = _draw_circuit(config, circuit_rng)
        env_seed = substream(master, f"eval-env:{episode}")
        placement = draw_placement(graph, circuit.num_qubits, config.placement,
                                   placement_rng)
        cum_reward, success, stops, _ = rollout(
            env, circuit, net if policy == "greedy" else None,
            0.0, policy_rng, env_seed, placement=placement)
        rec = EpisodeRecord(
            episode=episode,
            seed=env_seed % 2**32,
            gates_total=len(circuit.gates),
            gates_completed=len(env.state.dag.done),
            stops_used=stops,
            success=success,
            cum_reward=cum_reward,
            epsilon=0.0,
            wall_ms=(time.perf_counter() - t0) * 1000.0,
        )
        rec.validate(config.env.deadline)
        records.append(rec)
    n = max(len(records), 1)
    summary = {
        "episodes": len(records),
        "success_rate": sum(r.success for r in records) / n,
        "mean_stops": sum(r.stops_used for r in records) / n,
        "mean_reward": sum(r.cum_reward for r in records) / n,
    }
    return records, summary


def _greedy_final_placement(env: CompilerEnv, circuit: CircuitDag, net: QNetwork,
                            policy_rng: np.random.Generator, env_seed: int,
                            placement: dict[int, int] | None) -> tuple[dict[int, int], bool]:
    _, success, _, _ = rollout(env, circuit, net, 0.0, policy_rng, env_seed,
                               placement=placement)
    st = env.state
    final = {q: st.node_of_qubit[q] for q in range(st.num_qubits)}
    return final, success


def initial_map(circuit: CircuitDag, net: QNetwork, config: ExperimentConfig,
                ) -> tuple[dict[int, int], bool]:
    """Reverse-circuit triple-compilation mapping: compile from a random
    placement, reuse the final placement to compile the reverse circuit, and
    return that compilation's final placement as the initial mapping. The
    warning flag is set when either compilation hit the deadline (the result
    is then best-effort)."""
    config.validate()
    graph = topology.build(config.topology)
    env = CompilerEnv(graph, config.env)
    _check_model(net, env, config)
    master = config.seed
    policy_rng = np.random.default_rng(substream(master, "map-policy"))

    mid, ok1 = _greedy_final_placement(env, circuit, net, policy_rng,
                                       substream(master, "map-env:0"), None)
    final, ok2 = _greedy_final_placement(env, circuit.reverse(), net, policy_rng,
                                         substream(master, "map-env:1"), mid)
    return final, not (ok1 and ok2)


# -- metrics I/O --------------------------------------------------------------

def emit_metrics(records: list[EpisodeRecord], path: str) -> None:
    """CSV with the fixed header; floats as shortest round-tripping decimals,
    UTF-8, LF line endings."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in records:
            writer.writerow([
                r.episode, r.seed, r.gates_total, r.gates_completed,
                r.stops_used, int(r.success), repr(r.cum_reward),
                repr(r.epsilon), repr(r.wall_ms),
            ])


def read_metrics(path: str) -> list[EpisodeRecord]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ValidationError(f"unexpected metrics header {header}")
        out = []
        for row in reader:
            out.append(EpisodeRecord(
                episode=int(row[0]), seed=int(row[1]), gates_total=int(row[2]),
                gates_completed=int(row[3]), stops_used=int(row[4]),
                success=bool(int(row[5])), cum_reward=float(row[6]),
                epsilon=float(row[7]), wall_ms=float(row[8]),
            ))
        return out


def save_json(data, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2)
