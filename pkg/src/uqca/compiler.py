"""Compile circuits into barrier layouts and move qubit states in and out.

Qubit ``i`` travels on lane ``i``. Layer ``k`` tiles sit at
``(14 k + 8 lane, 14 k)``; lanes without a gate in a layer get an identity
tile, so every signal crosses exactly one tile per layer and all lanes stay
synchronous.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evolution import Superposition
from .lattice import SIG0, SIG1, Configuration, Coord, Parity
from .oracle import ARITY, CircuitError, CircuitIR, GateOp, bits_of, index_of
from .tiles import (
    DISPLACEMENT,
    DURATION,
    LANE_WIDTH,
    PORT_OFFSET,
    LeakageError,
    decode_branch,
    tile_for_gate,
)

__all__ = [
    "CircuitIR",
    "CircuitSyntaxError",
    "CompiledLayout",
    "GateOp",
    "LayoutError",
    "decode_outputs",
    "encode_inputs",
    "layout_circuit",
    "parse_circuit",
]

AMP_CUTOFF = 1e-15


class CircuitSyntaxError(CircuitError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


class LayoutError(RuntimeError):
    pass


def expand_gate(g: GateOp) -> list[GateOp]:
    """Rewrite CNOT and CZ into H and CP; CNOT = (I x H) CP^4 (I x H)."""
    if g.kind == "CNOT":
        c, t = g.targets
        return [GateOp("H", (t,)), *[GateOp("CP", (c, t))] * 4, GateOp("H", (t,))]
    if g.kind == "CZ":
        return [GateOp("CP", g.targets)] * 4
    return [g]


def layer_gates(n: int, gates: list[GateOp]) -> CircuitIR:
    """Greedy as-soon-as-possible layering."""
    free = [0] * n
    layers: list[list[GateOp]] = []
    for g in gates:
        k = max(free[q] for q in g.targets)
        while len(layers) <= k:
            layers.append([])
        layers[k].append(g)
        for q in g.targets:
            free[q] = k + 1
    return CircuitIR(n, tuple(tuple(sorted(l, key=lambda g: g.targets)) for l in layers))


def parse_circuit(text: str) -> CircuitIR:
    n = None
    gates: list[GateOp] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        if n is None:
            if words[0] != "qubits" or len(words) != 2:
                raise CircuitSyntaxError(lineno, "first statement must be 'qubits <n>'")
            try:
                n = int(words[1])
            except ValueError:
                raise CircuitSyntaxError(lineno, f"bad qubit count {words[1]!r}") from None
            if n < 0:
                raise CircuitSyntaxError(lineno, "negative qubit count")
            continue
        kind = words[0].upper()
        if kind not in ARITY:
            raise CircuitSyntaxError(lineno, f"unknown gate {words[0]!r}")
        try:
            targets = tuple(int(w) for w in words[1:])
        except ValueError:
            raise CircuitSyntaxError(lineno, f"bad qubit index in {line!r}") from None
        for q in targets:
            if not 0 <= q < n:
                raise CircuitSyntaxError(lineno, f"qubit {q} out of range for {n} qubits")
        try:
            g = GateOp(kind, targets)
        except CircuitError as exc:
            raise CircuitSyntaxError(lineno, str(exc)) from None
        gates.extend(expand_gate(g))
    if n is None:
        raise CircuitSyntaxError(1, "missing 'qubits <n>' header")
    return layer_gates(n, gates)


def format_circuit(ir: CircuitIR) -> str:
    lines = [f"qubits {ir.qubit_count}"]
    lines += [str(g) for g in ir.gates]
    return "\n".join(lines) + "\n"


# routing -------------------------------------------------------------------

def is_routed(ir: CircuitIR) -> bool:
    return all(
        g.kind in ("CP", "SWAP") and abs(g.targets[0] - g.targets[1]) == 1 or len(g.targets) == 1
        for g in ir.gates
    )


def route_gate(g: GateOp) -> list[GateOp]:
    """Adjacent-transposition chain bringing the far qubit next to the near one, then back."""
    g = expand_gate(g)[0] if g.kind in ("CNOT", "CZ") else g
    if len(g.targets) == 1:
        return [g]
    lo, hi = sorted(g.targets)
    if hi - lo == 1:
        return [GateOp(g.kind, (lo, hi))]
    chain = [GateOp("SWAP", (k, k + 1)) for k in range(hi - 1, lo, -1)]
    return chain + [GateOp(g.kind, (lo, lo + 1))] + chain[::-1]


def route_circuit(ir: CircuitIR) -> CircuitIR:
    gates = []
    for g in ir.gates:
        for e in expand_gate(g):
            gates.extend(route_gate(e))
    return layer_gates(ir.qubit_count, gates)


# layout --------------------------------------------------------------------

@dataclass(frozen=True)
class CompiledLayout:
    qubit_count: int
    circuit: CircuitIR  # routed, one tile per lane per layer
    config: Configuration
    in_ports: tuple[Coord, ...]
    out_ports: tuple[Coord, ...]
    total_steps: int
    entry_parity: Parity = Parity.ALIGNED

    @property
    def layer_count(self) -> int:
        return len(self.circuit.layers)


def lane_port(lane: int, layer: int) -> Coord:
    return (DISPLACEMENT[0] * layer + LANE_WIDTH * lane + PORT_OFFSET, DISPLACEMENT[1] * layer)


def layout_circuit(ir: CircuitIR) -> CompiledLayout:
    """Place one tile per lane per layer. Unrouted circuits are routed first;
    routed ones keep their layering, so empty layers become delays."""
    if not is_routed(ir):
        ir = route_circuit(ir)
    n = ir.qubit_count
    config = Configuration.empty()
    for k, layer in enumerate(ir.layers):
        covered: set[int] = set()
        placed = []
        for g in layer:
            lanes = sorted(g.targets)
            if len(lanes) == 2 and lanes[1] - lanes[0] != 1:
                raise LayoutError(f"layer {k}: {g} is not on adjacent lanes")
            placed.append((tile_for_gate(g.kind), lanes[0]))
            covered.update(lanes)
        ident = tile_for_gate("ID")
        placed += [(ident, q) for q in range(n) if q not in covered]
        for tile, lane in placed:
            origin = (DISPLACEMENT[0] * k + LANE_WIDTH * lane, DISPLACEMENT[1] * k)
            try:
                config = config.union(tile.machinery(origin))
            except ValueError as exc:
                raise LayoutError(f"layer {k}: tile collision: {exc}") from None
    layers = len(ir.layers)
    ins = tuple(lane_port(q, 0) for q in range(n))
    outs = tuple(lane_port(q, layers) for q in range(n))
    if len(set(ins)) != n or len(set(outs)) != n:
        raise LayoutError("port collision")
    return CompiledLayout(n, ir, config, ins, outs, DURATION * layers)


def format_ports(layout: CompiledLayout) -> str:
    lines = [f"inport {i} {x} {y}" for i, (x, y) in enumerate(layout.in_ports)]
    lines += [f"outport {i} {x} {y}" for i, (x, y) in enumerate(layout.out_ports)]
    lines += [f"steps {layout.total_steps}", f"parity {layout.entry_parity.name.lower()}"]
    return "\n".join(lines) + "\n"


def parse_ports(text: str) -> tuple[list[Coord], list[Coord], int, Parity]:
    ins: dict[int, Coord] = {}
    outs: dict[int, Coord] = {}
    steps, parity = 0, Parity.ALIGNED
    for line in text.splitlines():
        w = line.split()
        if not w:
            continue
        if w[0] in ("inport", "outport"):
            (ins if w[0] == "inport" else outs)[int(w[1])] = (int(w[2]), int(w[3]))
        elif w[0] == "steps":
            steps = int(w[1])
        elif w[0] == "parity":
            parity = Parity.parse(w[1])
        else:
            raise ValueError(f"bad port line {line!r}")
    return [ins[i] for i in sorted(ins)], [outs[i] for i in sorted(outs)], steps, parity


# encoding ------------------------------------------------------------------

def encode_state(machinery: Configuration, ports, state, parity: Parity = Parity.ALIGNED) -> Superposition:
    """Branch per basis component: ``Sig_b`` at each port on top of the machinery."""
    n = len(ports)
    if isinstance(state, (int, np.integer)):
        state = np.eye(2**n, dtype=complex)[int(state)]
    elif isinstance(state, (tuple, list, str)) and len(state) == n and all(str(b) in "01" for b in state):
        state = np.eye(2**n, dtype=complex)[index_of(int(b) for b in state)]
    state = np.asarray(state, dtype=complex)
    if state.shape != (2**n,):
        raise ValueError(f"state of shape {state.shape} for {n} lanes")
    branches = []
    for i in np.flatnonzero(np.abs(state) > AMP_CUTOFF):
        bits = bits_of(int(i), n)
        cfg = machinery.with_cells((p, SIG1 if b else SIG0) for p, b in zip(ports, bits))
        branches.append((cfg, complex(state[i])))
    return Superposition.from_branches(branches, parity, prune=0.0)


def decode_state(psi: Superposition, machinery: Configuration, ports) -> np.ndarray:
    n = len(ports)
    out = np.zeros(2**n, dtype=complex)
    for cfg, amp in psi.branches.items():
        out[index_of(decode_branch(cfg, machinery, ports))] += amp
    return out


def encode_inputs(layout: CompiledLayout, basis_or_state) -> Superposition:
    return encode_state(layout.config, layout.in_ports, basis_or_state, layout.entry_parity)


def decode_outputs(layout: CompiledLayout, psi: Superposition, at: str = "out") -> np.ndarray:
    """Qubit state read from the output ports (``at="in"`` reads the inputs)."""
    ports = layout.out_ports if at == "out" else layout.in_ports
    return decode_state(psi, layout.config, ports)


def simulate(layout: CompiledLayout, basis_or_state, table=None) -> np.ndarray:
    from .evolution import run

    psi = run(encode_inputs(layout, basis_or_state), layout.total_steps, table)
    return decode_outputs(layout, psi)


__all__ += ["LeakageError", "simulate", "route_circuit", "expand_gate"]
