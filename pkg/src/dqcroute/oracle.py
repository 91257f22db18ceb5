"""Exact minimal-stop-count search on tiny deterministic instances.

Stops are the only costed transitions, so the search is a 0-1 BFS over
environment states: non-stop actions are zero-cost edges expanded in action-
table order, states are deduplicated on a canonical digest, and the first
settled goal state is optimal. Restricted to p_gen = 1 (the Bernoulli draw
never fires), |V| <= 8 and <= 5 gates to stay tractable.
"""

from __future__ import annotations

from collections import deque

from .circuit import CircuitDag
from .env import RUNNING, SUCCESS, ActionTable, EnvConfig, EnvState, apply_action, compute_mask, initial_state
from .topology import CouplingGraph

MAX_NODES = 8
MAX_GATES = 5


def canonical_key(state: EnvState) -> tuple:
    """Digest of everything that determines masks and transitions (slot count
    excluded: the search layers by stop count itself)."""
    occ = []
    for v in range(len(state.kind)):
        k = state.kind[v]
        occ.append((k, state.ident[v] if k else -1))
    return (
        tuple(occ),
        tuple(state.cooldown),
        tuple(state.pending),
        frozenset(state.dag.done),
    )


def min_stops(
    graph: CouplingGraph,
    circuit: CircuitDag,
    placement: dict[int, int],
    config: EnvConfig,
    budget: int = 2_000_000,
) -> tuple[int, list[int]] | None:
    """Minimal number of stop actions to empty the DAG, with a witness action
    sequence, or None if the expansion budget runs out or the deadline makes
    the circuit uncompilable."""
    if config.p_gen != 1.0:
        raise ValueError("the oracle only searches deterministic instances (p_gen = 1)")
    if graph.num_nodes > MAX_NODES:
        raise ValueError(f"oracle instances are capped at {MAX_NODES} nodes")
    if len(circuit.gates) > MAX_GATES:
        raise ValueError(f"oracle instances are capped at {MAX_GATES} gates")

    table = ActionTable(graph)
    search_cfg = EnvConfig(**{**config.to_dict(), "shaping": False})
    root, res = initial_state(graph, circuit, placement, search_cfg, seed=0)
    if res.status == SUCCESS:
        return 0, []

    root_key = canonical_key(root)
    best: dict[tuple, int] = {root_key: 0}
    parent: dict[tuple, tuple[tuple, int] | None] = {root_key: None}
    queue: deque[tuple[EnvState, tuple, int]] = deque([(root, root_key, 0)])
    expanded = 0

    # 0-1 BFS: pop costs are nondecreasing, so the first success POPPED is
    # optimal (a success generated through a stop edge may still be beaten by
    # zero-cost expansions of the current layer).
    while queue:
        state, key, stops = queue.popleft()
        if best.get(key, -1) != stops:
            continue  # superseded by a cheaper copy
        if state.status == SUCCESS:
            return stops, _walk_back(parent, key)
        expanded += 1
        if expanded > budget:
            return None
        mask = compute_mask(graph, table, state)
        for action, bit in enumerate(mask):
            if not bit:
                continue
            child = state.clone(copy_rng=False)
            result = apply_action(graph, table, search_cfg, child, action)
            cost = stops + (1 if action == table.STOP else 0)
            if result.status not in (RUNNING, SUCCESS):
                continue  # deadline failure
            ckey = canonical_key(child)
            known = best.get(ckey)
            if known is not None and known <= cost:
                continue
            best[ckey] = cost
            parent[ckey] = (key, action)
            if action == table.STOP:
                queue.append((child, ckey, cost))
            else:
                queue.appendleft((child, ckey, cost))
    return None


def _walk_back(parent: dict, key: tuple) -> list[int]:
    actions: list[int] = []
    while True:
        link = parent[key]
        if link is None:
            return actions[::-1]
        key, action = link
        actions.append(action)
