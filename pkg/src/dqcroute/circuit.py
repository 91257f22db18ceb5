"""CNOT circuits as per-qubit-program-order dependency DAGs.

Gates are ordered; gate g precedes gate h iff g appears earlier and shares a
qubit with h. Completed gates are tracked in a grow-only done-set (ids stay
stable for state encoding). No commutation analysis: two CNOTs sharing only a
control are still ordered.

Circuit file format (JSON): ``{"num_qubits": n, "gates": [[c, t], ...]}``.
"""

from __future__ import annotations

import json
import random
from typing import NamedTuple

from .errors import ContractViolation


class Gate(NamedTuple):
    id: int
    control: int
    target: int


class CircuitDag:
    def __init__(self, num_qubits: int, pairs: list[tuple[int, int]]):
        if num_qubits < 1:
            raise ValueError("circuit needs at least one qubit")
        gates = []
        for i, (c, t) in enumerate(pairs):
            if c == t:
                raise ValueError(f"gate {i}: control equals target ({c})")
            if not (0 <= c < num_qubits and 0 <= t < num_qubits):
                raise ValueError(f"gate {i}: qubit out of range")
            gates.append(Gate(i, c, t))
        self.num_qubits = num_qubits
        self.gates: tuple[Gate, ...] = tuple(gates)
        self.done: set[int] = set()

    # -- queries ---------------------------------------------------------

    def __len__(self) -> int:
        return len(self.gates)

    @property
    def remaining(self) -> int:
        return len(self.gates) - len(self.done)

    @property
    def is_empty(self) -> bool:
        return len(self.done) == len(self.gates)

    def frontier(self) -> list[Gate]:
        """Not-done gates whose same-qubit predecessors are all done,
        ascending gate id."""
        blocked = [False] * self.num_qubits
        out = []
        for g in self.gates:
            if g.id in self.done:
                continue
            if not blocked[g.control] and not blocked[g.target]:
                out.append(g)
            blocked[g.control] = True
            blocked[g.target] = True
        return out

    def layers(self) -> dict[int, int]:
        """ASAP layer per not-done gate: 1 + max layer of its not-done
        same-qubit predecessors, else 0."""
        next_layer = [0] * self.num_qubits
        out: dict[int, int] = {}
        for g in self.gates:
            if g.id in self.done:
                continue
            lay = max(next_layer[g.control], next_layer[g.target])
            out[g.id] = lay
            next_layer[g.control] = next_layer[g.target] = lay + 1
        return out

    # -- mutation --------------------------------------------------------

    def complete(self, gate_id: int) -> None:
        if gate_id in self.done:
            raise ContractViolation(f"gate {gate_id} already completed")
        if all(g.id != gate_id for g in self.frontier()):
            raise ContractViolation(f"gate {gate_id} is not in the frontier")
        self.done.add(gate_id)

    def copy(self) -> "CircuitDag":
        dup = CircuitDag.__new__(CircuitDag)
        dup.num_qubits = self.num_qubits
        dup.gates = self.gates
        dup.done = set(self.done)
        return dup

    # -- construction helpers ---------------------------------------------

    def reverse(self) -> "CircuitDag":
        """Gate list reversed, done reset; CNOT is self-inverse so gates are
        unchanged elementwise."""
        return CircuitDag(self.num_qubits, [(g.control, g.target) for g in reversed(self.gates)])

    def to_dict(self) -> dict:
        return {"num_qubits": self.num_qubits, "gates": [[g.control, g.target] for g in self.gates]}

    @classmethod
    def from_dict(cls, data: dict) -> "CircuitDag":
        try:
            return cls(int(data["num_qubits"]), [(int(c), int(t)) for c, t in data["gates"]])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed circuit data: {exc}") from exc


def random_circuit(num_qubits: int, num_gates: int, rng: random.Random) -> CircuitDag:
    """Gates drawn independently: (control, target) uniform over ordered
    distinct pairs. Bit-reproducible under a seeded rng."""
    if num_gates > 0 and num_qubits < 2:
        raise ValueError("need at least 2 qubits to draw CNOT gates")
    pairs = []
    for _ in range(num_gates):
        c = rng.randrange(num_qubits)
        t = rng.randrange(num_qubits - 1)
        if t >= c:
            t += 1
        pairs.append((c, t))
    return CircuitDag(max(num_qubits, 1), pairs)


def load_file(path: str) -> CircuitDag:
    with open(path, encoding="utf-8") as fh:
        return CircuitDag.from_dict(json.load(fh))


def save_file(dag: CircuitDag, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(dag.to_dict(), fh)
