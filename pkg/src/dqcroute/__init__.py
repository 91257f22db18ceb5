"""dqcroute: multi-QPU qubit-routing MDP, masked deep-Q agents, exact oracle."""

from .circuit import CircuitDag, Gate, random_circuit
from .env import ActionTable, CompilerEnv, EnvConfig, EnvState, StepResult
from .learn import AgentConfig, QNetwork, ReplayBuffer, Trainer
from .oracle import min_stops
from .topology import CouplingGraph, build_guadalupe, build_line, unify

__all__ = [
    "ActionTable", "AgentConfig", "CircuitDag", "CompilerEnv", "CouplingGraph",
    "EnvConfig", "EnvState", "Gate", "QNetwork", "ReplayBuffer", "StepResult",
    "Trainer", "build_guadalupe", "build_line", "min_stops", "random_circuit",
    "unify",
]
