"""Shared builders for the test suite."""

from __future__ import annotations

import numpy as np

from uqca.evolution import Superposition
from uqca.lattice import BARRIER, SIG0, SIG1, BLOCK_OFFSETS, Configuration, block_index, block_from_index


def reflecting_box(n: int, splitters=((3, 3), (7, 5))) -> dict:
    """Barrier ring around an n x n interior with diagonal barrier pairs inside."""
    cells = {}
    for i in range(-1, n + 1):
        for xy in ((i, -1), (i, n), (-1, i), (n, i)):
            cells[xy] = BARRIER
    for x, y in splitters:
        cells[(x, y + 1)] = BARRIER
        cells[(x + 1, y)] = BARRIER
    return cells


def stress_state(branches: int = 10, seed: int = 7) -> Superposition:
    """Normalized superposition of distinct signal placements inside a box."""
    rng = np.random.default_rng(seed)
    base = reflecting_box(12)
    free = [(x, y) for x in range(12) for y in range(12) if (x, y) not in base]
    items = {}
    while len(items) < branches:
        picks = rng.choice(len(free), size=1 + len(items) % 2, replace=False)
        cells = dict(base)
        for i in picks:
            cells[free[i]] = SIG1 if rng.random() < 0.5 else SIG0
        items[Configuration(cells)] = complex(rng.normal(), rng.normal())
    norm = np.sqrt(sum(abs(a) ** 2 for a in items.values()))
    return Superposition({c: a / norm for c, a in items.items()})


def double_splitter(bit: int) -> Configuration:
    """A NE-moving signal meeting two diagonal barrier pairs on consecutive steps."""
    return Configuration(
        {
            (0, 1): BARRIER,
            (1, 0): BARRIER,
            (1, 2): BARRIER,
            (2, 1): BARRIER,
            (0, 0): SIG1 if bit else SIG0,
        }
    )


def naive_step(psi: Superposition, table) -> dict:
    """Reference step: apply the full 256x256 matrix to every block touching the support."""
    m = table.matrix()
    off = psi.parity.value
    out: dict = {}
    for cfg, amp in psi.branches.items():
        origins = {(x - (x - off) % 2, y - (y - off) % 2) for x, y in cfg.keys()}
        partial = [({}, amp)]
        for ox, oy in sorted(origins):
            cells = [(ox + dx, oy + dy) for dx, dy in BLOCK_OFFSETS]
            col = m[:, block_index(tuple(cfg.get(c) for c in cells))]
            nxt = []
            for upd, a in partial:
                for j in np.flatnonzero(np.abs(col) > 1e-15):
                    u = dict(upd)
                    u.update(zip(cells, block_from_index(int(j))))
                    nxt.append((u, a * col[j]))
            partial = nxt
        for upd, a in partial:
            key = cfg.with_cells(upd)
            out[key] = out.get(key, 0) + a
    return {k: v for k, v in out.items() if abs(v) > 1e-12}
