"""Distance-based reward shaping over the routing graph.

The shaping graph is the coupling graph with weight 1 on intra-QPU edges, a
large weight on quantum links, and an extra weight-1 edge between the two
current nodes of every live EPR pair. ``d_frontier`` sums, frontier gate by
frontier gate, the shortest distance between the gate's qubits, consuming
(deleting) every EPR edge a chosen path relied on so one pair is never counted
twice. All tie-breaks are deterministic: gates by ascending id, paths by
lexicographically smallest node sequence.
"""

from __future__ import annotations

from heapq import heappop, heappush

from .errors import StateError


def shortest_path_lex(
    adj: dict[int, list[tuple[int, float]]], src: int, dst: int
) -> tuple[float, tuple[int, ...]]:
    """Dijkstra returning (distance, path), breaking distance ties by the
    lexicographically smallest node sequence. Weights must be positive."""
    heap: list[tuple[float, tuple[int, ...]]] = [(0.0, (src,))]
    settled: set[int] = set()
    while heap:
        dist, path = heappop(heap)
        node = path[-1]
        if node in settled:
            continue
        settled.add(node)
        if node == dst:
            return dist, path
        for nbr, w in adj.get(node, ()):
            if nbr not in settled:
                heappush(heap, (dist + w, path + (nbr,)))
    raise StateError(f"no path from {src} to {dst} in shaping graph")


def d_frontier(state, graph, w_qlink: float) -> float:
    """Summed shortest qubit-pair distances over the current frontier.

    EPR edges used by a gate's path are deleted before the next gate is
    processed (deletion is local to this evaluation; the pair registry is
    untouched). An EPR edge parallel to an intra-QPU coupling is never the
    enabling edge (both weigh 1), so it is not consumed by such a hop.
    """
    gates = state.dag.frontier()
    if not gates:
        return 0.0

    base: dict[int, list[tuple[int, float]]] = {v: [] for v in range(graph.num_nodes)}
    for u, v in graph.edges_p:
        base[u].append((v, 1.0))
        base[v].append((u, 1.0))
    for u, v in graph.edges_n:
        base[u].append((v, float(w_qlink)))
        base[v].append((u, float(w_qlink)))
    epr_edges: dict[tuple[int, int], None] = {}
    for nodes in state.pair_nodes:
        if nodes is not None:
            a, b = nodes
            epr_edges[(a, b) if a < b else (b, a)] = None

    total = 0.0
    for g in gates:
        u = state.node_of_qubit[g.control]
        v = state.node_of_qubit[g.target]
        if u is None or v is None:
            raise StateError(f"frontier gate {g.id} has an unplaced qubit")
        adj = {n: list(ns) for n, ns in base.items()}
        for a, b in epr_edges:
            adj[a].append((b, 1.0))
            adj[b].append((a, 1.0))
        dist, path = shortest_path_lex(adj, u, v)
        total += dist
        for x, y in zip(path, path[1:]):
            e = (x, y) if x < y else (y, x)
            if e in epr_edges and e not in graph.edge_p_set:
                del epr_edges[e]
    return total


def r_dist(prev_d: float, new_d: float, xi: float) -> float:
    """Shaping reward for swap and tele-qubit actions."""
    return xi * (prev_d - new_d)
