"""Simulating a small qubit-per-cell partitioned automaton on the universal one.

The simulated automaton lives on a ``width x height`` torus of cells. Each step
applies a 4-qubit circuit ``V`` to every 2x2 block of the current partition
(qubits 0..3 = NW, NE, SW, SE), then the partition shifts by one cell.

Flattening turns each simulated cell into one lane of the compiled layout:
every simulated step becomes the union of the block circuits, routed onto
adjacent lanes and padded to a fixed number of tile layers, so a simulated
step always costs the same number of universal steps.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .compiler import (
    CompiledLayout,
    encode_state,
    expand_gate,
    lane_port,
    layout_circuit,
    layer_gates,
    route_circuit,
)
from .evolution import Superposition, fidelity, run
from .lattice import Configuration, Coord, Parity
from .oracle import (
    MAX_QUBITS,
    CircuitIR,
    GateOp,
    apply_circuit,
    basis_state,
    circuit_unitary,
    index_of,
    phase_fidelity,
    random_state,
)
from .tiles import DURATION, LANE_WIDTH, LeakageError, decode_branch

QUIESCENCE_TOL = 1e-12


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ReferencePQCA:
    """Qubit-per-cell automaton with block circuit ``v`` on a periodic region."""

    width: int
    height: int
    v: CircuitIR
    alphabet: int = 2
    quiescent: int = 0

    def __post_init__(self):
        if self.v.qubit_count != 4:
            raise ValueError("V must act on the 4 cells of a block")
        if self.width < 2 or self.height < 2 or self.width % 2 or self.height % 2:
            raise ValueError(f"region {self.width}x{self.height} must have even sides >= 2")
        if self.alphabet != 2 or self.quiescent != 0:
            raise ValueError("only qubit cells with quiescent |0> are supported")
        if self.cell_count > MAX_QUBITS:
            raise ValueError(f"{self.cell_count} cells exceed the oracle bound of {MAX_QUBITS}")

    @property
    def cell_count(self) -> int:
        return self.width * self.height

    @property
    def cells(self) -> list[Coord]:
        """Canonical order: rows North to South, West to East within a row."""
        return [(x, y) for y in range(self.height - 1, -1, -1) for x in range(self.width)]

    def cell_index(self, xy: Coord) -> int:
        x, y = xy
        return (self.height - 1 - y % self.height) * self.width + x % self.width

    def v_matrix(self) -> np.ndarray:
        return circuit_unitary(self.v)

    def preserves_quiescence(self) -> bool:
        out = apply_circuit(self.v, basis_state(4, 0))
        return abs(out[0] - 1) <= QUIESCENCE_TOL


def block_lanes(p: ReferencePQCA, parity: Parity) -> list[tuple[int, int, int, int]]:
    """Cell indices (NW, NE, SW, SE) of every block of the partition."""
    off = parity.value
    out = []
    for oy in range(off, p.height + off, 2):
        for ox in range(off, p.width + off, 2):
            nw, ne = (ox, oy + 1), (ox + 1, oy + 1)
            sw, se = (ox, oy), (ox + 1, oy)
            out.append(tuple(p.cell_index(c) for c in (nw, ne, sw, se)))
    return out


def step_gates(p: ReferencePQCA, parity: Parity) -> list[GateOp]:
    gates = []
    for lanes in block_lanes(p, parity):
        for g in p.v.gates:
            for e in expand_gate(g):
                gates.append(GateOp(e.kind, tuple(lanes[q] for q in e.targets)))
    return gates


def step_circuit(p: ReferencePQCA, parity: Parity) -> CircuitIR:
    return layer_gates(p.cell_count, step_gates(p, parity))


def reference_step(p: ReferencePQCA, psi: np.ndarray, parity: Parity = Parity.ALIGNED) -> np.ndarray:
    """One simulated step: V on every block of ``parity`` via the dense oracle."""
    return apply_circuit(step_circuit(p, parity), psi)


def reference_run(p: ReferencePQCA, psi: np.ndarray, steps: int, parity: Parity = Parity.ALIGNED) -> np.ndarray:
    for _ in range(steps):
        psi = reference_step(p, psi, parity)
        parity = parity.flipped()
    return psi


@dataclass(frozen=True)
class IsometricCoding:
    """Cell-to-lane coding of a flattened automaton.

    ``supercell`` is the lane pitch in universal cells and
    ``steps_per_update`` the universal steps per simulated step; a simulated
    cell's quiescent word is its lane's machinery plus a ``Sig0`` signal.
    Ports move by one tile displacement per layer, so the same layout serves
    every ``i <= sim_steps``.
    """

    cells: tuple[Coord, ...]
    layers_per_update: int
    sim_steps: int
    machinery: Configuration
    sim_parity: Parity = Parity.ALIGNED  # partition of the first simulated step
    entry_parity: Parity = Parity.ALIGNED
    supercell: int = LANE_WIDTH

    @property
    def steps_per_update(self) -> int:
        return DURATION * self.layers_per_update

    def ports(self, i: int) -> tuple[Coord, ...]:
        """Where the cell signals sit after ``i`` simulated steps."""
        if not 0 <= i <= self.sim_steps:
            raise SimulationError(f"layout covers {self.sim_steps} simulated steps, asked for {i}")
        return tuple(lane_port(q, i * self.layers_per_update) for q in range(len(self.cells)))

    def encode(self, psi: np.ndarray) -> Superposition:
        return encode_state(self.machinery, self.ports(0), psi, self.entry_parity)

    def decode(self, phi: Superposition, i: int = 0) -> tuple[np.ndarray, Superposition]:
        """Split a universal state into the simulated state and the residue.

        Raises LeakageError unless every branch has the machinery restored and
        exactly one signal on each cell port.
        """
        ports = self.ports(i)
        n = len(ports)
        by_residue: dict[Configuration, np.ndarray] = {}
        for cfg, amp in phi.branches.items():
            bits = decode_branch(cfg, self.machinery, ports)
            residue = cfg.with_cells((xy, 0) for xy in ports)
            vec = by_residue.setdefault(residue, np.zeros(2**n, dtype=complex))
            vec[index_of(bits)] += amp
        if len(by_residue) != 1:
            raise LeakageError(f"{len(by_residue)} distinct residues; state does not factor")
        (residue, vec), = by_residue.items()
        return vec, Superposition.basis(residue)

    def quiescent_image(self) -> Configuration:
        """Enc of the all-quiescent region: machinery plus ``Sig0`` on every port."""
        return self.encode(basis_state(len(self.cells), 0)).top_branch()[0]


def flatten_pqca(
    p: ReferencePQCA, sim_steps: int, parity: Parity = Parity.ALIGNED
) -> tuple[CompiledLayout, IsometricCoding]:
    """Lay out ``sim_steps`` simulated steps as one compiled circuit over cell lanes."""
    if sim_steps < 0:
        raise ValueError("sim_steps must be non-negative")
    per_parity = {par: route_circuit(step_circuit(p, par)).layers for par in Parity}
    depth = max(1, *(len(l) for l in per_parity.values()))
    layers = []
    par = parity
    for _ in range(sim_steps):
        block = list(per_parity[par])
        layers += block + [()] * (depth - len(block))
        par = par.flipped()
    layout = layout_circuit(CircuitIR(p.cell_count, tuple(layers)))
    coding = IsometricCoding(tuple(p.cells), depth, sim_steps, layout.config, parity)
    return layout, coding


@dataclass
class SimulationReport:
    steps: int
    states_checked: int
    min_fidelity: float
    residue_fidelity: float
    worst_state: str
    threshold: float
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures and self.min_fidelity >= self.threshold

    def summary(self) -> str:
        status = "ok" if self.ok else "FAIL"
        return (
            f"direct simulation i={self.steps}: {status} states={self.states_checked} "
            f"min_fidelity={self.min_fidelity:.12f} residue_fidelity={self.residue_fidelity:.12f} "
            f"worst={self.worst_state}"
        )


def probe_states(n: int, random_count: int = 3, rng: np.random.Generator | None = None):
    """Basis states with at most two excited cells, then random superpositions."""
    rng = rng or np.random.default_rng(0)
    for k in range(3):
        for ones in itertools.combinations(range(n), k):
            label = "".join("1" if q in ones else "0" for q in range(n))
            yield label, basis_state(n, int(label, 2))
    for r in range(random_count):
        yield f"random{r}", random_state(n, rng)


def check_direct_simulation(
    layout: CompiledLayout,
    h: ReferencePQCA,
    coding: IsometricCoding,
    i: int,
    states=None,
    threshold: float = 1 - 1e-5,
    residue_threshold: float = 1 - 1e-6,
    table=None,
) -> SimulationReport:
    """Compare Dec(run(Enc psi)) with ``i`` reference steps for each test state."""
    if layout.config != coding.machinery:
        raise SimulationError("coding does not belong to this layout")
    states = list(states if states is not None else probe_states(h.cell_count))
    report = SimulationReport(i, 0, 1.0, 1.0, "-", threshold)
    first_residue = None
    for label, psi in states:
        want = reference_run(h, psi, i, coding.sim_parity)
        try:
            universal = run(coding.encode(psi), i * coding.steps_per_update, table)
            got, residue = coding.decode(universal, i)
        except LeakageError as exc:
            report.failures.append(f"{label}: {exc}")
            report.min_fidelity = 0.0
            continue
        report.states_checked += 1
        f = phase_fidelity(got, want)
        if f < report.min_fidelity:
            report.min_fidelity, report.worst_state = f, label
        if first_residue is None:
            first_residue = residue
        else:
            report.residue_fidelity = min(report.residue_fidelity, fidelity(first_residue, residue))
    if report.residue_fidelity < residue_threshold:
        report.failures.append(f"residue depends on the input (fidelity {report.residue_fidelity:.3g})")
    return report


def translate_state(p: ReferencePQCA, psi: np.ndarray, dx: int, dy: int) -> np.ndarray:
    """Shift every cell by (dx, dy) on the torus."""
    n = p.cell_count
    perm = [p.cell_index((x + dx, y + dy)) for x, y in p.cells]
    t = psi.reshape((2,) * n)
    order = [0] * n
    for src, dst in enumerate(perm):
        order[dst] = src
    return np.transpose(t, order).reshape(-1)
