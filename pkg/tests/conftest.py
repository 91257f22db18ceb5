import random

import pytest

from dqcroute.circuit import CircuitDag
from dqcroute.env import CompilerEnv, EnvConfig
from dqcroute.topology import build_line, unify


def two_qpus(n: int = 2):
    """Two line(n) QPUs joined end-to-end by one quantum link."""
    graph, offsets = unify([build_line(n), build_line(n)], [(0, n - 1, 1, 0)])
    return graph, offsets


@pytest.fixture
def remote_gate_instance():
    """The canonical 2x line(2) remote-gate instance: q0 and q1 on opposite
    outer nodes, one gate, p_gen = 1."""
    graph, _ = two_qpus(2)
    circuit = CircuitDag(2, [(0, 1)])
    config = EnvConfig(p_gen=1.0, deadline=100, g_max=5)
    return graph, circuit, {0: 0, 1: 3}, config


def make_env(graph, config=None):
    return CompilerEnv(graph, config or EnvConfig(p_gen=1.0, deadline=100, g_max=10))


def random_feasible_rollout(env, circuit, seed, placement=None, max_actions=100_000):
    """Play uniformly random feasible actions until the episode ends.
    Returns (status, stops, actions_taken)."""
    rng = random.Random(seed)
    result = env.reset(circuit, placement=placement, seed=seed)
    actions = 0
    while result.status == "running" and actions < max_actions:
        mask = env.mask()
        feasible = [i for i, b in enumerate(mask) if b]
        result = env.step(rng.choice(feasible))
        actions += 1
    return result.status, env.state.stops, actions


def gen_tiny_instance(rng: random.Random, max_gates: int = 4):
    """Random oracle-scale instance that is compilable by construction: on
    two-QPU topologies every QPU keeps at least one free node, so the link
    endpoints can always be cleared for entanglement generation."""
    from dqcroute.circuit import random_circuit

    if rng.random() < 0.25:
        graph = build_line(rng.randrange(3, 7))
        per_qpu = None
    else:
        n = rng.randrange(2, 5)
        graph, _ = two_qpus(n)
        per_qpu = n
    gates = rng.randrange(1, max_gates + 1)
    if per_qpu is None:
        num_qubits = rng.randrange(2, graph.num_nodes + 1)
        nodes = rng.sample(range(graph.num_nodes), num_qubits)
    else:
        qa = rng.randrange(1, per_qpu)      # leaves >= 1 free node in A
        qb = rng.randrange(1, per_qpu)      # and in B
        num_qubits = qa + qb
        if num_qubits < 2:
            qa = qb = 1
            num_qubits = 2
        nodes = rng.sample(range(per_qpu), qa) + \
            [per_qpu + v for v in rng.sample(range(per_qpu), qb)]
        rng.shuffle(nodes)
    circuit = random_circuit(num_qubits, gates, rng)
    placement = {q: nodes[q] for q in range(num_qubits)}
    return graph, circuit, placement
