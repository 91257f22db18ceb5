"""Coupling graphs for single QPUs and unified multi-QPU systems.

A coupling graph has two edge classes: intra-QPU couplings (``edges_p``, where
two-qubit gates and SWAPs run) and inter-QPU quantum links (``edges_n``, used
only to generate entanglement). Graphs are immutable after construction and
safe to share read-only.

Topology file format (JSON)::

    {"qpus": [{"nodes": N, "edges": [[u, v], ...]}, ...],
     "quantum_links": [[qpu_a, node_a, qpu_b, node_b], ...]}

Builder names accepted by the CLI: ``guadalupe``, ``line:<n>``, ``file:<path>``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

# IBM Q Guadalupe (Falcon r4P, 16 qubits) coupling map, kept as data so other
# QPUs can ship in the same shape via the file format.
GUADALUPE_EDGES: tuple[tuple[int, int], ...] = (
    (0, 1), (1, 2), (1, 4), (2, 3), (3, 5), (4, 7), (5, 8), (6, 7),
    (7, 10), (8, 9), (8, 11), (10, 12), (11, 14), (12, 13), (12, 15), (13, 14),
)


def _norm_edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass
class CouplingGraph:
    """Unified coupling graph: dense node ids, per-node QPU id, split edge set."""

    num_nodes: int
    qpu_of: tuple[int, ...]
    edges_p: tuple[tuple[int, int], ...]  # intra-QPU couplings, sorted
    edges_n: tuple[tuple[int, int], ...]  # quantum links, sorted

    # derived adjacency, filled by __post_init__
    adj_p: tuple[tuple[int, ...], ...] = field(init=False, repr=False)
    adj_all: tuple[tuple[int, ...], ...] = field(init=False, repr=False)
    edge_p_set: frozenset[tuple[int, int]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._validate()
        nbr_p: list[list[int]] = [[] for _ in range(self.num_nodes)]
        nbr_all: list[list[int]] = [[] for _ in range(self.num_nodes)]
        for u, v in self.edges_p:
            nbr_p[u].append(v)
            nbr_p[v].append(u)
            nbr_all[u].append(v)
            nbr_all[v].append(u)
        for u, v in self.edges_n:
            nbr_all[u].append(v)
            nbr_all[v].append(u)
        self.adj_p = tuple(tuple(sorted(ns)) for ns in nbr_p)
        self.adj_all = tuple(tuple(sorted(ns)) for ns in nbr_all)
        self.edge_p_set = frozenset(self.edges_p)

    def _validate(self) -> None:
        n = self.num_nodes
        if n < 1:
            raise ValueError("graph needs at least one node")
        if len(self.qpu_of) != n:
            raise ValueError("qpu_of must assign every node")
        seen: set[tuple[int, int]] = set()
        for kind, edges in (("p", self.edges_p), ("n", self.edges_n)):
            for u, v in edges:
                if u == v:
                    raise ValueError(f"self-loop ({u},{v})")
                if not (0 <= u < n and 0 <= v < n):
                    raise ValueError(f"edge ({u},{v}) out of range")
                e = _norm_edge(u, v)
                if e in seen:
                    raise ValueError(f"duplicate edge {e}")
                seen.add(e)
                same = self.qpu_of[u] == self.qpu_of[v]
                if kind == "p" and not same:
                    raise ValueError(f"intra-QPU edge {e} crosses QPUs")
                if kind == "n" and same:
                    raise ValueError(f"quantum link {e} inside one QPU")
        if not self._connected():
            raise ValueError("graph is not connected; some circuits would be uncompilable")

    def _connected(self) -> bool:
        if self.num_nodes == 1:
            return True
        nbr: list[list[int]] = [[] for _ in range(self.num_nodes)]
        for u, v in list(self.edges_p) + list(self.edges_n):
            nbr[u].append(v)
            nbr[v].append(u)
        seen = {0}
        stack = [0]
        while stack:
            for w in nbr[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.num_nodes

    @property
    def capacities(self) -> dict[int, int]:
        caps: dict[int, int] = {}
        for q in self.qpu_of:
            caps[q] = caps.get(q, 0) + 1
        return caps

    @property
    def num_qpus(self) -> int:
        return len(set(self.qpu_of))


def build_line(n: int) -> CouplingGraph:
    """Path graph 0-1-...-(n-1) as a single QPU."""
    if n < 1:
        raise ValueError("line topology needs n >= 1")
    return CouplingGraph(
        num_nodes=n,
        qpu_of=(0,) * n,
        edges_p=tuple((i, i + 1) for i in range(n - 1)),
        edges_n=(),
    )


def build_guadalupe() -> CouplingGraph:
    """16-node heavy-hex topology of the IBM Q Guadalupe processor."""
    return CouplingGraph(
        num_nodes=16,
        qpu_of=(0,) * 16,
        edges_p=tuple(sorted(_norm_edge(u, v) for u, v in GUADALUPE_EDGES)),
        edges_n=(),
    )


def unify(
    qpus: list[CouplingGraph],
    quantum_links: list[tuple[int, int, int, int]],
) -> tuple[CouplingGraph, list[int]]:
    """Merge QPUs into one graph with dense global ids.

    ``quantum_links`` entries are ``(qpu_a, node_a, qpu_b, node_b)`` in local
    ids. Returns the unified graph and per-QPU id offsets (global id =
    offsets[qpu] + local id), so callers can keep referring to local ids.
    Multiple links between the same QPU pair are allowed; duplicate links on
    the same node pair are not.
    """
    if not qpus:
        raise ValueError("unify needs at least one QPU")
    offsets: list[int] = []
    total = 0
    for g in qpus:
        if g.num_qpus != 1:
            raise ValueError("unify takes single-QPU graphs")
        offsets.append(total)
        total += g.num_nodes
    qpu_of: list[int] = []
    edges_p: list[tuple[int, int]] = []
    for i, g in enumerate(qpus):
        qpu_of.extend([i] * g.num_nodes)
        edges_p.extend(_norm_edge(u + offsets[i], v + offsets[i]) for u, v in g.edges_p)
    edges_n: list[tuple[int, int]] = []
    seen_links: set[tuple[int, int]] = set()
    for qa, na, qb, nb in quantum_links:
        for q, node in ((qa, na), (qb, nb)):
            if not (0 <= q < len(qpus)):
                raise ValueError(f"quantum link names unknown QPU {q}")
            if not (0 <= node < qpus[q].num_nodes):
                raise ValueError(f"quantum link endpoint {node} not a node of QPU {q}")
        e = _norm_edge(offsets[qa] + na, offsets[qb] + nb)
        if e in seen_links:
            raise ValueError(f"duplicate quantum link {e}")
        seen_links.add(e)
        edges_n.append(e)
    graph = CouplingGraph(
        num_nodes=total,
        qpu_of=tuple(qpu_of),
        edges_p=tuple(sorted(edges_p)),
        edges_n=tuple(sorted(edges_n)),
    )
    return graph, offsets


def from_dict(data: dict) -> CouplingGraph:
    """Build from the topology file schema (also used for inline config tables)."""
    try:
        qpu_specs = data["qpus"]
        links = [tuple(x) for x in data.get("quantum_links", [])]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed topology data: {exc}") from exc
    qpus = []
    for spec in qpu_specs:
        n = int(spec["nodes"])
        if n < 1:
            raise ValueError("QPU needs at least one node")
        edges = tuple(sorted(_norm_edge(int(u), int(v)) for u, v in spec.get("edges", [])))
        qpus.append(CouplingGraph(num_nodes=n, qpu_of=(0,) * n, edges_p=edges, edges_n=()))
    graph, _ = unify(qpus, links)  # type: ignore[arg-type]
    return graph


def load_file(path: str) -> CouplingGraph:
    with open(path, encoding="utf-8") as fh:
        return from_dict(json.load(fh))


def build(spec: str | dict) -> CouplingGraph:
    """Resolve a CLI/config topology spec: builder name, ``file:<path>``, or
    an inline dict in the file schema."""
    if isinstance(spec, dict):
        return from_dict(spec)
    if spec == "guadalupe":
        return build_guadalupe()
    if spec.startswith("line:"):
        return build_line(int(spec.split(":", 1)[1]))
    if spec.startswith("file:"):
        return load_file(spec.split(":", 1)[1])
    raise ValueError(f"unknown topology spec {spec!r}")
