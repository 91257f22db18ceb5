"""The distributed-compilation environment.

State: qubit/EPR placement, per-node cooldowns, in-flight entanglement
generations, the remaining gate DAG, and the elapsed-slot counter. Actions are
flattened to ``stop | swap(e in E^p) | tele_qubit(e in E^p) | generate(e in
E^n)``; a binary feasibility mask over that table is part of the observable
state. Gate executions (local scores and EPR-consuming tele-gates) are never
chosen: they fire automatically, to fixpoint, after every action.

Time bridge: one slot elapses per ``stop``. An operation that keeps a node
busy for k further slots sets its cooldown to k at action time; every stop
decrements positive cooldowns. So: swap = 3, score = 1, tele ops = kappa + 1,
generate = lambda. A pending generation resolves its Bernoulli(p_gen) outcome
when its countdown hits zero.

Execution log records (one JSON-able dict per primitive)::

    {"slot": t, "op": "swap|score|tele_gate|tele_qubit|generate|stop",
     "nodes": [...], "gate": id?, "pair": id?}
"""

from __future__ import annotations

import random
from dataclasses import dataclass, asdict

import numpy as np

from . import shaping
from .circuit import CircuitDag
from .errors import CapacityError, ContractViolation, StateError
from .topology import CouplingGraph

EMPTY, CIRC, EPR = 0, 1, 2
RUNNING, SUCCESS, FAILURE = "running", "success", "failure"


@dataclass
class EnvConfig:
    p_gen: float = 0.95          # Bernoulli success probability per generation attempt
    kappa: int = 5               # classical-communication slots of a teleportation
    lambda_gen: int = 5          # slots an entanglement-generation attempt takes
    deadline: int = 1500         # decoherence horizon N, in slots
    r_score: float = 500.0
    r_success: float = 3000.0    # added on success (sign per the stated semantics)
    r_fail: float = 3000.0       # subtracted on deadline failure
    r_stop: float = -20.0
    xi: float = 18.0
    w_qlink: float = 30.0
    g_max: int = 30              # gate capacity of the state encoding
    shaping: bool = True         # skip R_dist bookkeeping entirely when False

    def validate(self) -> None:
        if not 0.0 <= self.p_gen <= 1.0:
            raise ValueError("p_gen must lie in [0, 1]")
        if self.kappa < 1 or self.lambda_gen < 1:
            raise ValueError("kappa and lambda_gen must be >= 1")
        if self.deadline < 1:
            raise ValueError("deadline must be >= 1")
        if self.g_max < 0:
            raise ValueError("g_max must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "EnvConfig":
        cfg = cls(**data)
        cfg.validate()
        return cfg


class ActionTable:
    """Flattened action indexing: index 0 is stop, then swaps by intra-QPU
    edge id, tele-qubits by edge id, generates by link id. Total size
    1 + 2|E^p| + |E^n|."""

    STOP = 0

    def __init__(self, graph: CouplingGraph):
        self.graph = graph
        self.n_p = len(graph.edges_p)
        self.n_n = len(graph.edges_n)
        entries: list[tuple[str, int]] = [("stop", -1)]
        entries += [("swap", i) for i in range(self.n_p)]
        entries += [("tele", i) for i in range(self.n_p)]
        entries += [("gen", i) for i in range(self.n_n)]
        self.entries = tuple(entries)

    def __len__(self) -> int:
        return len(self.entries)

    def swap_index(self, edge_idx: int) -> int:
        return 1 + edge_idx

    def tele_index(self, edge_idx: int) -> int:
        return 1 + self.n_p + edge_idx

    def gen_index(self, link_idx: int) -> int:
        return 1 + 2 * self.n_p + link_idx

    def describe(self, action: int) -> dict:
        kind, idx = self.entries[action]
        if kind == "stop":
            return {"kind": "stop"}
        edge = self.graph.edges_p[idx] if kind in ("swap", "tele") else self.graph.edges_n[idx]
        return {"kind": {"swap": "swap", "tele": "tele_qubit", "gen": "generate"}[kind],
                "edge": list(edge)}


@dataclass
class StepResult:
    reward: float
    status: str
    scored_gates: list[int]
    info: dict

    @property
    def done(self) -> bool:
        return self.status != RUNNING


class EnvState:
    """Single-owner mutable episode state. ``clone`` gives an independent
    copy (the RNG is shared when ``copy_rng=False``, for deterministic
    searches that never draw)."""

    __slots__ = (
        "num_qubits", "kind", "ident", "node_of_qubit", "pair_nodes",
        "cooldown", "pending", "dag", "slot", "deadline", "rng", "status",
        "stops", "pairs_created", "pairs_consumed", "scored_local",
        "scored_tele", "d_cache",
    )

    def __init__(self) -> None:  # populated by initial_state / clone
        self.d_cache: float | None = None

    def clone(self, copy_rng: bool = True) -> "EnvState":
        s = EnvState()
        s.num_qubits = self.num_qubits
        s.kind = list(self.kind)
        s.ident = list(self.ident)
        s.node_of_qubit = list(self.node_of_qubit)
        s.pair_nodes = list(self.pair_nodes)
        s.cooldown = list(self.cooldown)
        s.pending = list(self.pending)
        s.dag = self.dag.copy()
        s.slot = self.slot
        s.deadline = self.deadline
        if copy_rng:
            s.rng = random.Random()
            s.rng.setstate(self.rng.getstate())
        else:
            s.rng = self.rng
        s.status = self.status
        s.stops = self.stops
        s.pairs_created = self.pairs_created
        s.pairs_consumed = self.pairs_consumed
        s.scored_local = self.scored_local
        s.scored_tele = self.scored_tele
        s.d_cache = self.d_cache
        return s

    def live_pairs(self) -> list[int]:
        return [s for s, nodes in enumerate(self.pair_nodes) if nodes is not None]


def initial_state(
    graph: CouplingGraph,
    circuit: CircuitDag,
    placement: dict[int, int] | None,
    config: EnvConfig,
    seed: int | None = None,
    log: list | None = None,
) -> tuple[EnvState, StepResult]:
    """Place the circuit (random injective placement over all nodes when none
    is given), then run auto-execution once so trivially adjacent frontier
    gates score immediately. The returned StepResult carries that reward."""
    config.validate()
    nv, nq = graph.num_nodes, circuit.num_qubits
    if nq > nv:
        raise CapacityError(f"{nq} logical qubits will not fit {nv} nodes")
    if len(circuit.gates) > config.g_max:
        raise CapacityError(f"circuit has {len(circuit.gates)} gates > g_max={config.g_max}")
    rng = random.Random(seed)
    if placement is None:
        drawn = rng.sample(range(nv), nq)
        placement = {q: drawn[q] for q in range(nq)}
    else:
        if sorted(placement.keys()) != list(range(nq)):
            raise ValueError("placement must cover every logical qubit exactly once")
        nodes = list(placement.values())
        if len(set(nodes)) != len(nodes):
            raise ValueError("placement must be injective")
        if any(not (0 <= v < nv) for v in nodes):
            raise ValueError("placement targets an unknown node")

    st = EnvState()
    st.num_qubits = nq
    st.kind = [EMPTY] * nv
    st.ident = [-1] * nv
    st.node_of_qubit = [-1] * nq
    for q, v in placement.items():
        st.kind[v] = CIRC
        st.ident[v] = q
        st.node_of_qubit[q] = v
    st.pair_nodes = [None] * (nv // 2)
    st.cooldown = [0] * nv
    st.pending = [0] * len(graph.edges_n)
    st.dag = circuit.copy()
    st.slot = 0
    st.deadline = config.deadline
    st.rng = rng
    st.status = RUNNING
    st.stops = 0
    st.pairs_created = 0
    st.pairs_consumed = 0
    st.scored_local = 0
    st.scored_tele = 0
    st.d_cache = None

    scored: list[int] = []
    reward = _auto_execute(graph, config, st, scored, log)
    if st.dag.is_empty:
        st.status = SUCCESS
        reward += config.r_success
    return st, StepResult(reward, st.status, scored, _info(st))


def _info(state: EnvState) -> dict:
    return {
        "stops": state.stops,
        "pairs_created": state.pairs_created,
        "pairs_consumed": state.pairs_consumed,
        "scored_local": state.scored_local,
        "scored_tele": state.scored_tele,
    }


def _frontier_pairs(state: EnvState) -> set[tuple[int, int]]:
    out = set()
    for g in state.dag.frontier():
        c, t = g.control, g.target
        out.add((c, t) if c < t else (t, c))
    return out


def _feasible(graph: CouplingGraph, state: EnvState, kind: str, idx: int,
              frontier_pairs: set[tuple[int, int]] | None = None) -> bool:
    cd = state.cooldown
    if kind == "stop":
        return True
    if kind == "swap":
        u, v = graph.edges_p[idx]
        if cd[u] or cd[v]:
            return False
        ku, kv = state.kind[u], state.kind[v]
        if ku == EMPTY and kv == EMPTY:
            return False
        if ku == CIRC and kv == CIRC:
            # never swap a pair that could score; the score fires automatically
            a, b = state.ident[u], state.ident[v]
            pair = (a, b) if a < b else (b, a)
            if frontier_pairs is None:
                frontier_pairs = _frontier_pairs(state)
            if pair in frontier_pairs:
                return False
        return True
    if kind == "tele":
        u, v = graph.edges_p[idx]
        if cd[u] or cd[v]:
            return False
        if state.kind[u] == CIRC and state.kind[v] == EPR:
            enode = v
        elif state.kind[v] == CIRC and state.kind[u] == EPR:
            enode = u
        else:
            return False
        a, b = state.pair_nodes[state.ident[enode]]
        return cd[b if a == enode else a] == 0
    # generate
    a, b = graph.edges_n[idx]
    return state.kind[a] == EMPTY and state.kind[b] == EMPTY and cd[a] == 0 and cd[b] == 0


def compute_mask(graph: CouplingGraph, table: ActionTable, state: EnvState) -> list[int]:
    """Binary feasibility vector over the action table. Stop is always 1."""
    fr_pairs = _frontier_pairs(state)
    return [1 if _feasible(graph, state, kind, idx, fr_pairs) else 0
            for kind, idx in table.entries]


def _create_pair(state: EnvState, a: int, b: int) -> int:
    slot = next(s for s, nodes in enumerate(state.pair_nodes) if nodes is None)
    state.pair_nodes[slot] = (a, b)
    state.kind[a] = state.kind[b] = EPR
    state.ident[a] = state.ident[b] = slot
    state.pairs_created += 1
    return slot


def _repoint_pair(state: EnvState, slot: int, old: int, new: int) -> None:
    a, b = state.pair_nodes[slot]
    state.pair_nodes[slot] = (new, b) if a == old else (a, new)


def _swap_occupants(state: EnvState, u: int, v: int) -> None:
    ku, iu = state.kind[u], state.ident[u]
    kv, iv = state.kind[v], state.ident[v]
    state.kind[u], state.ident[u] = kv, iv
    state.kind[v], state.ident[v] = ku, iu
    if ku == CIRC:
        state.node_of_qubit[iu] = v
    elif ku == EPR:
        _repoint_pair(state, iu, u, v)
    if kv == CIRC:
        state.node_of_qubit[iv] = u
    elif kv == EPR:
        _repoint_pair(state, iv, v, u)


def _auto_execute(graph: CouplingGraph, config: EnvConfig, state: EnvState,
                  scored: list[int], log: list | None) -> float:
    """Fire automatic gate executions to fixpoint: local scores on E^p edges,
    then EPR-consuming tele-gates; deterministic scan order (ascending gate
    id, lowest pair id). Returns the accumulated reward."""
    reward = 0.0
    cd = state.cooldown
    adj_p = graph.adj_p
    while True:
        frontier = state.dag.frontier()
        fired = False
        for g in frontier:
            u = state.node_of_qubit[g.control]
            v = state.node_of_qubit[g.target]
            if cd[u] == 0 and cd[v] == 0 and ((u, v) if u < v else (v, u)) in graph.edge_p_set:
                state.dag.complete(g.id)
                cd[u] = cd[v] = 1  # the CNOT occupies its slot
                reward += config.r_score
                scored.append(g.id)
                state.scored_local += 1
                if log is not None:
                    log.append({"slot": state.slot, "op": "score", "nodes": [u, v], "gate": g.id})
                fired = True
                break
        if fired:
            continue
        for g in frontier:
            u = state.node_of_qubit[g.control]
            v = state.node_of_qubit[g.target]
            if cd[u] or cd[v]:
                continue
            for slot_id, nodes in enumerate(state.pair_nodes):
                if nodes is None:
                    continue
                a, b = nodes
                if cd[a] or cd[b]:
                    continue
                if a in adj_p[u] and b in adj_p[v]:
                    near, far = a, b
                elif b in adj_p[u] and a in adj_p[v]:
                    near, far = b, a
                else:
                    continue
                state.dag.complete(g.id)
                state.kind[a] = state.kind[b] = EMPTY
                state.ident[a] = state.ident[b] = -1
                state.pair_nodes[slot_id] = None
                state.pairs_consumed += 1
                k1 = config.kappa + 1
                cd[u] = cd[v] = cd[a] = cd[b] = k1
                reward += config.r_score
                scored.append(g.id)
                state.scored_tele += 1
                if log is not None:
                    log.append({"slot": state.slot, "op": "tele_gate",
                                "nodes": [u, near, far, v], "gate": g.id, "pair": slot_id})
                fired = True
                break
            if fired:
                break
        if not fired:
            return reward


def apply_action(graph: CouplingGraph, table: ActionTable, config: EnvConfig,
                 state: EnvState, action: int, log: list | None = None) -> StepResult:
    """Apply one masked action, run auto-execution to fixpoint, settle rewards
    and termination. Raises ContractViolation on a masked-out action and
    StateError on a finished episode."""
    if state.status != RUNNING:
        raise StateError("episode already finished")
    kind, idx = table.entries[action]
    if not _feasible(graph, state, kind, idx):
        raise ContractViolation(f"action {action} ({table.describe(action)}) is masked out")

    cd = state.cooldown
    reward = 0.0
    shaped = config.shaping and kind in ("swap", "tele") and config.xi != 0.0
    prev_d = None
    if shaped:
        prev_d = state.d_cache
        if prev_d is None:
            prev_d = shaping.d_frontier(state, graph, config.w_qlink)

    if kind == "stop":
        state.slot += 1
        state.stops += 1
        for i in range(len(cd)):
            if cd[i] > 0:
                cd[i] -= 1
        for li in range(len(state.pending)):
            rem = state.pending[li]
            if rem > 0:
                rem -= 1
                state.pending[li] = rem
                if rem == 0:
                    p = config.p_gen
                    if p >= 1.0 or (p > 0.0 and state.rng.random() < p):
                        a, b = graph.edges_n[li]
                        _create_pair(state, a, b)
        reward += config.r_stop
        if log is not None:
            log.append({"slot": state.slot, "op": "stop", "nodes": []})
    elif kind == "swap":
        u, v = graph.edges_p[idx]
        _swap_occupants(state, u, v)
        cd[u] = cd[v] = 3  # a SWAP is three CNOTs
        if log is not None:
            log.append({"slot": state.slot, "op": "swap", "nodes": [u, v]})
    elif kind == "tele":
        u, v = graph.edges_p[idx]
        cnode, enode = (u, v) if state.kind[u] == CIRC else (v, u)
        q = state.ident[cnode]
        pslot = state.ident[enode]
        a, b = state.pair_nodes[pslot]
        w = b if a == enode else a
        # the qubit lands on the remote half's node; the pair is consumed
        state.kind[w], state.ident[w] = CIRC, q
        state.node_of_qubit[q] = w
        state.kind[cnode] = state.kind[enode] = EMPTY
        state.ident[cnode] = state.ident[enode] = -1
        state.pair_nodes[pslot] = None
        state.pairs_consumed += 1
        k1 = config.kappa + 1
        cd[cnode] = cd[enode] = cd[w] = k1
        if log is not None:
            log.append({"slot": state.slot, "op": "tele_qubit",
                        "nodes": [cnode, enode, w], "pair": pslot})
    else:  # generate
        a, b = graph.edges_n[idx]
        state.pending[idx] = config.lambda_gen
        cd[a] = cd[b] = config.lambda_gen
        if log is not None:
            log.append({"slot": state.slot, "op": "generate", "nodes": [a, b]})

    scored: list[int] = []
    reward += _auto_execute(graph, config, state, scored, log)

    if shaped:
        new_d = shaping.d_frontier(state, graph, config.w_qlink)
        state.d_cache = new_d
        reward += shaping.r_dist(prev_d, new_d, config.xi)
    else:
        state.d_cache = None

    if state.dag.is_empty:
        state.status = SUCCESS
        reward += config.r_success
    elif state.slot >= state.deadline:
        state.status = FAILURE
        reward -= config.r_fail
    return StepResult(reward, state.status, scored, _info(state))


def encode_state(graph: CouplingGraph, table: ActionTable, state: EnvState,
                 g_max: int, mask: list[int] | None = None) -> np.ndarray:
    """Flat observation [S_loc, S_dag, S_msk].

    S_loc: per node, 0 for empty, 1+q for circuit qubit q, |Q|+1+p for an EPR
    half with pair code p (codes come from a pool of |V|//2 slots, reused
    after destruction; both halves share the code). S_dag: remaining gates
    sorted by (layer, id), one (1+control, 1+target, layer) triple each,
    zero-padded to 3*g_max. S_msk: the feasibility mask.
    """
    if state.dag.remaining > g_max:
        raise CapacityError(f"{state.dag.remaining} remaining gates exceed g_max={g_max}")
    nv = graph.num_nodes
    nq = state.num_qubits
    out = np.zeros(nv + 3 * g_max + len(table))
    for v in range(nv):
        k = state.kind[v]
        if k == CIRC:
            out[v] = 1 + state.ident[v]
        elif k == EPR:
            out[v] = nq + 1 + state.ident[v]
    layers = state.dag.layers()
    for i, (gid, lay) in enumerate(sorted(layers.items(), key=lambda kv: (kv[1], kv[0]))):
        g = state.dag.gates[gid]
        base = nv + 3 * i
        out[base] = 1 + g.control
        out[base + 1] = 1 + g.target
        out[base + 2] = lay
    if mask is None:
        mask = compute_mask(graph, table, state)
    out[nv + 3 * g_max:] = mask
    return out


class CompilerEnv:
    """Gym-style wrapper: owns one episode's state plus its execution log
    (the compiled-circuit record). Instances are single-owner; run several in
    parallel with independent seeds if needed."""

    def __init__(self, graph: CouplingGraph, config: EnvConfig):
        self.graph = graph
        self.config = config
        self.table = ActionTable(graph)
        self.state: EnvState | None = None
        self.log: list[dict] = []

    def reset(self, circuit: CircuitDag, placement: dict[int, int] | None = None,
              seed: int | None = None) -> StepResult:
        self.log = []
        self.state, result = initial_state(self.graph, circuit, placement,
                                           self.config, seed, self.log)
        return result

    def step(self, action: int) -> StepResult:
        return apply_action(self.graph, self.table, self.config, self.state,
                            action, self.log)

    def mask(self) -> list[int]:
        return compute_mask(self.graph, self.table, self.state)

    def encode(self, mask: list[int] | None = None) -> np.ndarray:
        return encode_state(self.graph, self.table, self.state,
                            self.config.g_max, mask)
