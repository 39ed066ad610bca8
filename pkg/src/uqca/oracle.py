"""Dense state-vector simulator for small circuits over the tile gate set.

Qubit 0 is the most significant bit of the amplitude index.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

MAX_QUBITS = 12

_S = 1 / math.sqrt(2)
_W = cmath.exp(1j * math.pi / 4)

GATE_MATRICES: dict[str, np.ndarray] = {
    "ID": np.eye(2, dtype=complex),
    "H": np.array([[_S, _S], [_S, -_S]], dtype=complex),
    "T": np.diag([1, _W]).astype(complex),
    "CP": np.diag([1, 1, 1, _W]).astype(complex),
    "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
}
ARITY = {"ID": 1, "H": 1, "T": 1, "CP": 2, "SWAP": 2, "CNOT": 2, "CZ": 2}


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class GateOp:
    kind: str
    targets: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in ARITY:
            raise CircuitError(f"unknown gate {self.kind!r}")
        if len(self.targets) != ARITY[self.kind]:
            raise CircuitError(f"{self.kind} takes {ARITY[self.kind]} target(s), got {len(self.targets)}")
        if len(set(self.targets)) != len(self.targets):
            raise CircuitError(f"{self.kind} targets must be distinct")

    @property
    def matrix(self) -> np.ndarray:
        return GATE_MATRICES[self.kind]

    def __str__(self) -> str:
        return " ".join([self.kind, *map(str, self.targets)])


@dataclass(frozen=True)
class CircuitIR:
    qubit_count: int
    layers: tuple[tuple[GateOp, ...], ...] = field(default=())

    def __post_init__(self):
        for k, layer in enumerate(self.layers):
            seen: set[int] = set()
            for g in layer:
                for q in g.targets:
                    if not 0 <= q < self.qubit_count:
                        raise CircuitError(f"layer {k}: target {q} out of range")
                    if q in seen:
                        raise CircuitError(f"layer {k}: qubit {q} used twice")
                    seen.add(q)

    @property
    def gates(self) -> list[GateOp]:
        return [g for layer in self.layers for g in layer]

    def __len__(self) -> int:
        return len(self.layers)


def apply_gate(state: np.ndarray, gate: GateOp, n: int) -> np.ndarray:
    k = len(gate.targets)
    psi = state.reshape((2,) * n)
    m = gate.matrix.reshape((2,) * (2 * k))
    psi = np.tensordot(m, psi, axes=(list(range(k, 2 * k)), list(gate.targets)))
    # tensordot puts the gate axes first; move them back
    psi = np.moveaxis(psi, list(range(k)), list(gate.targets))
    return psi.reshape(-1)


def apply_circuit(circuit: CircuitIR, state: np.ndarray) -> np.ndarray:
    n = circuit.qubit_count
    if n > MAX_QUBITS:
        raise CircuitError(f"{n} qubits exceeds the oracle bound of {MAX_QUBITS}")
    state = np.asarray(state, dtype=complex)
    if state.shape != (2**n,):
        raise CircuitError(f"state has shape {state.shape}, expected ({2**n},)")
    for layer in circuit.layers:
        for g in layer:
            state = apply_gate(state, g, n)
    return state


def apply_gates(n: int, gates, state: np.ndarray) -> np.ndarray:
    return apply_circuit(CircuitIR(n, tuple((g,) for g in gates)), state)


def circuit_unitary(circuit: CircuitIR) -> np.ndarray:
    n = circuit.qubit_count
    cols = [apply_circuit(circuit, basis_state(n, i)) for i in range(2**n)]
    return np.stack(cols, axis=1)


def adjoint_circuit(circuit: CircuitIR) -> CircuitIR:
    """Inverse circuit, staying inside the gate set (T^-1 = T^7, CP^-1 = CP^7)."""
    layers = []
    for layer in reversed(circuit.layers):
        plain = tuple(g for g in layer if g.kind not in ("T", "CP"))
        phased = tuple(g for g in layer if g.kind in ("T", "CP"))
        if plain:
            layers.append(plain)
        for _ in range(7 if phased else 0):
            layers.append(phased)
    return CircuitIR(circuit.qubit_count, tuple(layers))


def basis_state(n: int, index: int) -> np.ndarray:
    v = np.zeros(2**n, dtype=complex)
    v[index] = 1
    return v


def bits_of(index: int, n: int) -> tuple[int, ...]:
    return tuple((index >> (n - 1 - q)) & 1 for q in range(n))


def index_of(bits) -> int:
    i = 0
    for b in bits:
        i = (i << 1) | int(b)
    return i


def random_state(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return v / np.linalg.norm(v)


def phase_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """|<a|b>|, insensitive to a global phase."""
    return float(abs(np.vdot(a, b)))


def phase_distance(m: np.ndarray, g: np.ndarray) -> float:
    """max-entry distance between m and g after removing the best global phase."""
    overlap = np.vdot(g, m)
    phase = overlap / abs(overlap) if abs(overlap) > 1e-15 else 1
    return float(np.max(np.abs(m - phase * g)))


def check_gate_unitarity(tol: float = 1e-12) -> None:
    for name, m in GATE_MATRICES.items():
        if np.max(np.abs(m.conj().T @ m - np.eye(len(m)))) > tol:
            raise CircuitError(f"gate {name} is not unitary")


check_gate_unitarity()
