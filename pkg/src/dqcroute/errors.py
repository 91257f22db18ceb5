"""Exception taxonomy shared across the package.

ValueError covers plain invalid arguments; the subclasses below exist where
the caller is expected to branch on the failure kind (CLI exit codes, tests).
"""


class ContractViolation(Exception):
    """An operation was invoked outside its precondition (e.g. a masked-out
    action fed to the environment, or completing a non-frontier gate)."""


class CapacityError(ValueError):
    """A fixed-size resource was exceeded (more qubits than nodes, more
    remaining gates than the state encoding can hold)."""


class StateError(RuntimeError):
    """The object is in a state where the operation is meaningless
    (stepping a finished episode, querying distances of unplaced qubits)."""


class ValidationError(ValueError):
    """A config or serialized artifact failed validation."""
