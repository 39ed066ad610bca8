"""Superpositions of finite configurations and the global partitioned dynamics."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .lattice import (
    BARRIER,
    SIG0,
    SIG1,
    Configuration,
    Parity,
    block_from_index,
    format_grid,
    parse_grid,
)
from .scattering import ScatteringTable, default_table

PRUNE_THRESHOLD = 1e-12
NORM_TOL = 1e-9
DRIFT_LIMIT = 1e-6
DEFAULT_BRANCH_CAP = int(os.environ.get("UQCA_BRANCH_CAP", 2**20))


class IntegrityError(RuntimeError):
    """The norm drifted: the table or the branch merge is broken."""


class ResourceError(RuntimeError):
    """The branch count exceeded the configured cap."""


@dataclass(frozen=True)
class Superposition:
    branches: Mapping[Configuration, complex]
    time: int = 0
    parity: Parity = Parity.ALIGNED

    @classmethod
    def basis(cls, config: Configuration, parity: Parity = Parity.ALIGNED, time: int = 0) -> "Superposition":
        return cls({config: 1 + 0j}, time, parity)

    @classmethod
    def from_branches(
        cls,
        items: Iterable[tuple[Configuration, complex]],
        parity: Parity = Parity.ALIGNED,
        time: int = 0,
        prune: float = PRUNE_THRESHOLD,
    ) -> "Superposition":
        acc: dict[Configuration, complex] = {}
        for cfg, amp in items:
            acc[cfg] = acc.get(cfg, 0j) + complex(amp)
        return cls(_pruned(acc, prune), time, parity)

    def __len__(self) -> int:
        return len(self.branches)

    def norm_squared(self) -> float:
        return sum(abs(a) ** 2 for a in self.branches.values())

    def ordered(self) -> list[tuple[Configuration, complex]]:
        return sorted(self.branches.items(), key=lambda kv: kv[0].sort_key())

    def top_branch(self) -> tuple[Configuration, complex]:
        return max(self.ordered(), key=lambda kv: abs(kv[1]))

    def amplitude(self, config: Configuration) -> complex:
        return self.branches.get(config, 0j)


def _pruned(acc: dict, prune: float) -> dict:
    return {k: v for k, v in acc.items() if abs(v) >= prune}


_LUT_CACHE: dict[int, tuple[ScatteringTable, list]] = {}


def _compile_row(i: int, row) -> tuple | None:
    """Per output: (amplitude, changed cells as (corner, new state), barrier moved?)."""
    if row is None:
        return None
    old = block_from_index(i)
    outs = []
    for blk, amp in row:
        changes = tuple((k, blk[k]) for k in range(4) if blk[k] is not old[k])
        moved = any(old[k] is BARRIER or n is BARRIER for k, n in changes)
        outs.append((complex(amp), changes, moved))
    return tuple(outs)


def _lut(table: ScatteringTable) -> list:
    hit = _LUT_CACHE.get(id(table))
    if hit is None or hit[0] is not table:
        hit = (table, [_compile_row(i, r) for i, r in enumerate(table.lookup_table())])
        _LUT_CACHE[id(table)] = hit
    return hit[1]


def _scatter_branch(cfg: Configuration, amp: complex, parity: Parity, lut: list, out: dict) -> None:
    signals = cfg._signals
    barriers = cfg._barriers
    off = parity.value
    origins = sorted({(x - ((x - off) & 1), y - ((y - off) & 1)) for x, y in signals})
    changes = []
    for ox, oy in origins:
        cells = ((ox, oy + 1), (ox + 1, oy + 1), (ox, oy), (ox + 1, oy))
        idx = 0
        for c in cells:
            v = signals.get(c)
            idx = (idx << 2) | (v if v is not None else (3 if c in barriers else 0))
        row = lut[idx]
        if row is not None:
            changes.append((cells, row))
    if not changes:
        out[cfg] = out.get(cfg, 0j) + amp
        return
    partial: list[tuple[list, complex]] = [([], amp)]
    for cells, row in changes:
        if len(row) == 1:
            a, delta, moved = row[0]
            for upd, _ in partial:
                upd.append((cells, delta, moved))
            if a != 1:
                partial = [(u, p * a) for u, p in partial]
        else:
            partial = [(u + [(cells, delta, moved)], p * a) for u, p in partial for a, delta, moved in row]
    for updates, a in partial:
        new_signals = dict(signals)
        barrier_moves = []
        for cells, delta, moved in updates:
            for k, n in delta:
                xy = cells[k]
                if moved:
                    barrier_moves.append((xy, n))
                new_signals.pop(xy, None)
                if n is SIG0 or n is SIG1:
                    new_signals[xy] = n
        if barrier_moves:
            ncfg = Configuration._make(barriers, new_signals).with_cells(barrier_moves)
        else:
            ncfg = Configuration._make(barriers, new_signals)
        out[ncfg] = out.get(ncfg, 0j) + a


def _apply(psi: Superposition, table: ScatteringTable, parity: Parity, prune: float, branch_cap: int) -> dict:
    lut = _lut(table)
    out: dict[Configuration, complex] = {}
    for cfg, amp in psi.ordered():
        _scatter_branch(cfg, amp, parity, lut, out)
    out = _pruned(out, prune)
    if len(out) > branch_cap:
        raise ResourceError(f"branch count {len(out)} exceeds cap {branch_cap}")
    return out


def _check_norm(branches: Mapping, before: float) -> None:
    after = sum(abs(a) ** 2 for a in branches.values())
    if abs(after - before) > DRIFT_LIMIT:
        raise IntegrityError(f"norm drifted from {before:.12g} to {after:.12g}")


def step(
    psi: Superposition,
    table: ScatteringTable | None = None,
    prune: float = PRUNE_THRESHOLD,
    branch_cap: int = DEFAULT_BRANCH_CAP,
) -> Superposition:
    """One global step: scatter every block of the current partition, then flip it.

    Blocks without a signal are skipped; the table fixes all of them.
    """
    table = table or default_table()
    branches = _apply(psi, table, psi.parity, prune, branch_cap)
    _check_norm(branches, psi.norm_squared())
    return Superposition(branches, psi.time + 1, psi.parity.flipped())


def step_back(
    psi: Superposition,
    adjoint: ScatteringTable,
    prune: float = PRUNE_THRESHOLD,
    branch_cap: int = DEFAULT_BRANCH_CAP,
) -> Superposition:
    """Undo one ``step`` given the adjoint table."""
    parity = psi.parity.flipped()
    branches = _apply(psi, adjoint, parity, prune, branch_cap)
    _check_norm(branches, psi.norm_squared())
    return Superposition(branches, psi.time - 1, parity)


@dataclass
class Telemetry:
    times: list[int] = field(default_factory=list)
    branch_counts: list[int] = field(default_factory=list)
    norms: list[float] = field(default_factory=list)

    def record(self, psi: Superposition) -> None:
        self.times.append(psi.time)
        self.branch_counts.append(len(psi))
        self.norms.append(psi.norm_squared())


def run(
    psi: Superposition,
    steps: int,
    table: ScatteringTable | None = None,
    prune: float = PRUNE_THRESHOLD,
    branch_cap: int = DEFAULT_BRANCH_CAP,
    telemetry: Telemetry | None = None,
    on_step=None,
) -> Superposition:
    if steps < 0:
        raise ValueError("steps must be non-negative")
    table = table or default_table()
    for _ in range(steps):
        psi = step(psi, table, prune, branch_cap)
        if telemetry is not None:
            telemetry.record(psi)
        if on_step is not None:
            on_step(psi)
    return psi


def run_back(psi: Superposition, steps: int, adjoint: ScatteringTable, **kw) -> Superposition:
    for _ in range(steps):
        psi = step_back(psi, adjoint, **kw)
    return psi


def inner(psi: Superposition, phi: Superposition) -> complex:
    """<psi|phi>."""
    small, big = (psi.branches, phi.branches)
    total = 0j
    for cfg, a in small.items():
        b = big.get(cfg)
        if b is not None:
            total += a.conjugate() * b
    return total


def fidelity(psi: Superposition, phi: Superposition) -> float:
    return abs(inner(psi, phi))


# text output ---------------------------------------------------------------

def dump_branches(psi: Superposition, window=None) -> str:
    records = []
    for cfg, amp in psi.ordered():
        records.append(f"amp {amp.real:.17g} {amp.imag:.17g}\n" + format_grid(cfg, window))
    return "---\n" + "---\n".join(records)


def load_branches(text: str, parity: Parity = Parity.ALIGNED, time: int = 0) -> Superposition:
    items = []
    for rec in text.split("---"):
        rec = rec.strip("\n")
        if not rec.strip():
            continue
        head, _, grid = rec.partition("\n")
        parts = head.split()
        if len(parts) != 3 or parts[0] != "amp":
            raise ValueError(f"bad branch header {head!r}")
        items.append((parse_grid(grid), complex(float(parts[1]), float(parts[2]))))
    return Superposition.from_branches(items, parity, time)


def superposition_window(psi: Superposition, margin: int = 0) -> tuple[int, int, int, int] | None:
    boxes = [b for b in (cfg.bounds() for cfg in psi.branches) if b is not None]
    if not boxes:
        return None
    return (
        min(b[0] for b in boxes) - margin,
        min(b[1] for b in boxes) - margin,
        max(b[2] for b in boxes) + margin,
        max(b[3] for b in boxes) + margin,
    )


def render_frame(psi: Superposition, window=None) -> str:
    """Dominant branch as a grid, followed by a legend row of block columns.

    In the legend ``[`` marks the west column and ``]`` the east column of
    blocks in the partition about to be applied.
    """
    window = window or superposition_window(psi) or (0, 0, 0, 0)
    cfg, amp = psi.top_branch() if psi.branches else (Configuration.empty(), 0j)
    xmin, ymin, xmax, ymax = window
    rows = [
        f"t={psi.time} parity={psi.parity.name.lower()} branches={len(psi)} top_amp={abs(amp):.6f} "
        f"window={xmin},{ymin}..{xmax},{ymax}",
    ]
    for y in range(ymax, ymin - 1, -1):
        rows.append("".join(cfg.get((x, y)).char for x in range(xmin, xmax + 1)))
    off = psi.parity.value
    rows.append("".join("[" if (x - off) % 2 == 0 else "]" for x in range(xmin, xmax + 1)))
    return "\n".join(rows) + "\n"
