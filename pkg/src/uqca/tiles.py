"""Gate tiles: barrier layouts that implement one gate in a fixed number of steps.

A single-lane tile is a sheared 8x14 strip: row ``r`` spans columns
``r .. r + 7`` relative to the tile origin, so a signal flying NE keeps its
column offset. Signals enter at offset 4 of their lane on row 0 and leave
24 steps later at (+14, +14), on row 0 of the next tile. Layout data lives
in ``tiles_data/*.uqca``.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .evolution import Superposition, run
from .lattice import (
    BARRIER,
    SIG1,
    CellState,
    Configuration,
    Coord,
    GridFormatError,
    Parity,
    block_origin,
    format_grid,
    parse_grid,
)
from .oracle import GATE_MATRICES, bits_of, index_of, phase_distance
from .scattering import ScatteringTable, default_table

DURATION = 24
ROWS = 14
LANE_WIDTH = 8
PORT_OFFSET = 4
DISPLACEMENT = (14, 14)
ANCILLA_PERIOD = 6
GATE_TOL = 1e-9

DATA_DIR = Path(__file__).with_name("tiles_data")
GATE_LANES = {"ID": 1, "H": 1, "T": 1, "SWAP": 2, "CP": 2}


class TileError(ValueError):
    pass


class LeakageError(RuntimeError):
    """A signal ended off its port, or machinery was not restored."""


@dataclass(frozen=True)
class TileSpec:
    name: str
    width: int
    barriers: frozenset
    ancillas: tuple  # ((x, y), CellState) pairs
    in_ports: tuple
    out_ports: tuple
    gate: str
    duration: int = DURATION
    height: int = ROWS
    entry_parity: Parity = Parity.ALIGNED

    @property
    def lanes(self) -> int:
        return len(self.in_ports)

    @property
    def matrix(self) -> np.ndarray:
        return GATE_MATRICES[self.gate]

    def machinery(self, origin: Coord = (0, 0)) -> Configuration:
        cells = {b: BARRIER for b in self.barriers}
        cells.update(dict(self.ancillas))
        return Configuration(cells).translated(*origin)

    def ports(self, origin: Coord = (0, 0)) -> tuple[list[Coord], list[Coord]]:
        ox, oy = origin
        return (
            [(x + ox, y + oy) for x, y in self.in_ports],
            [(x + ox, y + oy) for x, y in self.out_ports],
        )

    def in_footprint(self, xy: Coord) -> bool:
        x, y = xy
        return 0 <= y < self.height and 0 <= x - y < self.width


# file format ---------------------------------------------------------------

def format_tile(spec: TileSpec) -> str:
    def pts(ps):
        return " ".join(f"{x} {y}" for x, y in ps)

    head = [
        f"tile {spec.name}",
        f"gate {spec.gate}",
        f"duration {spec.duration}",
        f"parity {spec.entry_parity.name.lower()}",
        f"width {spec.width}",
        f"ports in {pts(spec.in_ports)}",
        f"ports out {pts(spec.out_ports)}",
    ]
    window = (0, 0, spec.width + spec.height - 2, spec.height - 1)
    return "\n".join(head) + "\n" + format_grid(spec.machinery(), window)


def parse_tile(text: str, name: str | None = None) -> TileSpec:
    lines = text.splitlines()
    meta: dict[str, str] = {}
    ports: dict[str, list[Coord]] = {}
    i = 0
    while i < len(lines) and not lines[i].startswith("offset"):
        line = lines[i].strip()
        i += 1
        if not line:
            continue
        key, _, rest = line.partition(" ")
        if key == "ports":
            kind, _, nums = rest.partition(" ")
            vals = [int(v) for v in nums.split()]
            if kind not in ("in", "out") or len(vals) % 2:
                raise GridFormatError(f"bad ports line {line!r}")
            ports[kind] = list(zip(vals[::2], vals[1::2]))
        else:
            meta[key] = rest.strip()
    grid = parse_grid("\n".join(lines[i:]))
    for key in ("gate", "duration", "parity"):
        if key not in meta:
            raise GridFormatError(f"tile file lacks a '{key}' header")
    if "in" not in ports or "out" not in ports:
        raise GridFormatError("tile file lacks port lines")
    lanes = len(ports["in"])
    return TileSpec(
        name=meta.get("tile", name or "tile"),
        width=int(meta.get("width", LANE_WIDTH * lanes)),
        barriers=grid.barriers,
        ancillas=tuple(sorted(grid.signal_items())),
        in_ports=tuple(ports["in"]),
        out_ports=tuple(ports["out"]),
        gate=meta["gate"],
        duration=int(meta["duration"]),
        entry_parity=Parity.parse(meta["parity"]),
    )


@functools.lru_cache(maxsize=None)
def builtin_tiles() -> dict[str, TileSpec]:
    out = {}
    for path in sorted(DATA_DIR.glob("*.uqca")):
        spec = parse_tile(path.read_text(), path.stem)
        out[spec.name] = spec
    return out


def tile_for_gate(gate: str) -> TileSpec:
    for spec in builtin_tiles().values():
        if spec.gate == gate:
            return spec
    raise TileError(f"no tile implements {gate}")


# simulation helpers --------------------------------------------------------

def encode_basis(machinery: Configuration, ports, bits) -> Configuration:
    return machinery.with_cells((p, CellState.signal(b)) for p, b in zip(ports, bits))


def decode_branch(cfg: Configuration, machinery: Configuration, ports) -> tuple[int, ...]:
    """Qubit bits read from ``ports``; raises LeakageError on any residue."""
    if cfg.barriers != machinery.barriers:
        raise LeakageError("barriers changed")
    signals = cfg.signals
    for xy, s in machinery.signal_items():
        if signals.pop(xy, None) is not s:
            raise LeakageError(f"ancilla at {xy} not restored")
    bits = []
    for p in ports:
        s = signals.pop(p, None)
        if s is None:
            raise LeakageError(f"no signal at port {p}")
        bits.append(1 if s is SIG1 else 0)
    if signals:
        raise LeakageError(f"stray signals at {sorted(signals)[:4]}")
    return tuple(bits)


def opposite_pairs(cfg: Configuration, parity: Parity) -> list[Coord]:
    """Block origins holding two signals at opposite corners."""
    seen: dict[Coord, list[Coord]] = {}
    for xy, _ in cfg.signal_items():
        seen.setdefault(block_origin(xy, parity), []).append(xy)
    bad = []
    for origin, cells in seen.items():
        for (x1, y1), (x2, y2) in itertools.combinations(cells, 2):
            if x1 != x2 and y1 != y2:
                bad.append(origin)
    return bad


def induced_matrix(
    machinery: Configuration,
    in_ports,
    out_ports,
    steps: int,
    parity: Parity = Parity.ALIGNED,
    table: ScatteringTable | None = None,
) -> np.ndarray:
    n = len(in_ports)
    m = np.zeros((2**n, 2**n), dtype=complex)
    for i in range(2**n):
        psi = Superposition.basis(encode_basis(machinery, in_ports, bits_of(i, n)), parity)
        psi = run(psi, steps, table)
        for cfg, amp in psi.branches.items():
            m[index_of(decode_branch(cfg, machinery, out_ports)), i] += amp
    return m


# verification --------------------------------------------------------------

@dataclass
class TileReport:
    name: str
    ok: bool = True
    distance: float = float("nan")
    ancilla_period: int | None = None
    failures: list[str] = field(default_factory=list)

    def fail(self, msg: str) -> None:
        self.ok = False
        self.failures.append(msg)

    def __str__(self) -> str:
        status = "ok" if self.ok else "FAIL"
        text = f"{self.name}: {status} distance={self.distance:.2e}"
        if self.ancilla_period is not None:
            text += f" ancilla_period={self.ancilla_period}"
        return "\n  ".join([text, *self.failures])


def _machinery_orbit(spec: TileSpec, table) -> list[Configuration]:
    psi = Superposition.basis(spec.machinery(), spec.entry_parity)
    orbit = [spec.machinery()]
    for _ in range(spec.duration):
        psi = run(psi, 1, table)
        if len(psi) != 1:
            raise TileError("machinery alone does not stay classical")
        orbit.append(next(iter(psi.branches)))
    return orbit


def _check_contract(spec: TileSpec, report: TileReport) -> None:
    if spec.duration != DURATION:
        report.fail(f"duration {spec.duration} != {DURATION}")
    if spec.lanes != GATE_LANES.get(spec.gate):
        report.fail(f"{spec.gate} needs {GATE_LANES.get(spec.gate)} lane(s), tile has {spec.lanes}")
    if spec.width != LANE_WIDTH * spec.lanes or spec.height != ROWS:
        report.fail(f"footprint {spec.width}x{spec.height}")
    for lane, (p, q) in enumerate(zip(spec.in_ports, spec.out_ports)):
        if p != (lane * LANE_WIDTH + PORT_OFFSET, 0):
            report.fail(f"lane {lane}: in port {p} is not the fifth cell of the lane")
        if (q[0] - p[0], q[1] - p[1]) != DISPLACEMENT:
            report.fail(f"lane {lane}: out port {q} is not in port + {DISPLACEMENT}")
    for xy in list(spec.barriers) + [a for a, _ in spec.ancillas]:
        if not spec.in_footprint(xy):
            report.fail(f"machinery cell {xy} outside the footprint")


def verify_tile(spec: TileSpec, table: ScatteringTable | None = None) -> TileReport:
    """Simulate every basis input and compare the induced matrix with the gate."""
    table = table or default_table()
    report = TileReport(spec.name)
    _check_contract(spec, report)
    orbit = _machinery_orbit(spec, table)
    if spec.ancillas:
        # a state recurs only when the partition parity recurs too
        period = next((k for k in range(2, spec.duration + 1, 2) if orbit[k] == orbit[0]), None)
        report.ancilla_period = period
        if period != ANCILLA_PERIOD:
            report.fail(f"ancilla period {period}, expected {ANCILLA_PERIOD}")
    elif orbit[-1] != orbit[0]:
        report.fail("machinery changed without inputs")

    n = spec.lanes
    machinery = spec.machinery()
    m = np.zeros((2**n, 2**n), dtype=complex)
    for i in range(2**n):
        bits = bits_of(i, n)
        psi = Superposition.basis(encode_basis(machinery, spec.in_ports, bits), spec.entry_parity)
        diverged = None
        for t in range(1, spec.duration + 1):
            psi = run(psi, 1, table)
            for cfg in psi.branches:
                anc = orbit[t].signal_items()
                if any(cfg.get(xy) is not s for xy, s in anc) or cfg.barriers != machinery.barriers:
                    diverged = diverged or f"machinery disturbed at step {t}"
                if any(not spec.in_footprint(xy) and xy not in spec.out_ports for xy, _ in cfg.signal_items()):
                    diverged = diverged or f"signal left the footprint at step {t}"
                if opposite_pairs(cfg, psi.parity):
                    diverged = diverged or f"opposite-corner signals at step {t}"
        if diverged:
            report.fail(f"input {bits}: {diverged}")
        try:
            for cfg, amp in psi.branches.items():
                m[index_of(decode_branch(cfg, machinery, spec.out_ports)), i] += amp
        except LeakageError as exc:
            report.fail(f"input {bits}: {exc}")
    report.distance = phase_distance(m, spec.matrix)
    if not report.distance <= GATE_TOL:
        report.fail(f"induced matrix differs from {spec.gate} by {report.distance:.3e}")
    # relative phases through one superposed input
    if report.ok:
        amps = np.full(2**n, 2 ** (-n / 2), dtype=complex)
        psi = Superposition.from_branches(
            ((encode_basis(machinery, spec.in_ports, bits_of(i, n)), amps[i]) for i in range(2**n)),
            spec.entry_parity,
        )
        psi = run(psi, spec.duration, table)
        out = np.zeros(2**n, dtype=complex)
        for cfg, amp in psi.branches.items():
            out[index_of(decode_branch(cfg, machinery, spec.out_ports))] += amp
        fid = abs(np.vdot(spec.matrix @ amps, out))
        if fid < 1 - GATE_TOL:
            report.fail(f"superposed input fidelity {fid:.12f}")
    return report


def check_composition(first: TileSpec, second: TileSpec, table=None) -> bool:
    """``second`` placed one layer after ``first`` realises the product gate."""
    if first.lanes != second.lanes:
        raise TileError("composition needs equal lane counts")
    machinery = first.machinery().union(second.machinery(DISPLACEMENT))
    ins, _ = first.ports()
    _, outs = second.ports(DISPLACEMENT)
    m = induced_matrix(machinery, ins, outs, first.duration + second.duration, first.entry_parity, table)
    return phase_distance(m, second.matrix @ first.matrix) <= GATE_TOL


def check_lateral(spec: TileSpec, copies: int | None = None, table=None) -> bool:
    """Side-by-side copies act as the tensor power of the gate."""
    copies = copies or (3 if spec.lanes == 1 else 2)
    machinery = Configuration.empty()
    ins, outs = [], []
    for c in range(copies):
        origin = (c * spec.width, 0)
        machinery = machinery.union(spec.machinery(origin))
        i, o = spec.ports(origin)
        ins += i
        outs += o
    m = induced_matrix(machinery, ins, outs, spec.duration, spec.entry_parity, table)
    g = spec.matrix
    for _ in range(copies - 1):
        g = np.kron(g, spec.matrix)
    return phase_distance(m, g) <= GATE_TOL
