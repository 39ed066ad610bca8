"""The universal scattering unitary acting on 2x2 blocks.

The table is generated from a handful of rewrite rules (free flight, wall
bounce, single-barrier pass, semitransparent barrier, signal crossing), closed
under quarter-turn rotations and completed by the identity.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import (
    BARRIER,
    EMPTY,
    SIG0,
    SIG1,
    Block,
    block_from_index,
    block_index,
    block_str,
)

AMP_TOL = 1e-10
UNITARY_TOL = 1e-12

SQRT1_2 = math.sqrt(0.5)
CROSS_PHASE = complex(SQRT1_2, SQRT1_2)  # e^{i pi/4}

E, B = EMPTY, BARRIER
SIGNALS = (SIG0, SIG1)

Row = tuple[tuple[Block, complex], ...]


class ConstructionError(RuntimeError):
    pass


@dataclass(frozen=True)
class RuleGenerator:
    name: str
    input: Block
    outputs: Row

    def rotated(self, turns: int) -> "RuleGenerator":
        return RuleGenerator(
            self.name,
            rotate_block(self.input, turns),
            tuple((rotate_block(b, turns), a) for b, a in self.outputs),
        )


def rotate_block(b: Block, quarter_turns: int) -> Block:
    """Rotate clockwise: the NW cell moves to NE, NE to SE, SE to SW, SW to NW."""
    nw, ne, sw, se = b
    for _ in range(quarter_turns % 4):
        nw, ne, se, sw = sw, nw, ne, se
    return (nw, ne, sw, se)


def _opposite(i: int) -> int:
    # positions 0..3 = NW, NE, SW, SE
    return 3 - i


def rule_generators() -> list[RuleGenerator]:
    """The seed rules before rotation closure."""
    gens = []
    for s in SIGNALS:
        gens.append(RuleGenerator(f"propagate[{s.char}]", (E, E, s, E), (((E, s, E, E), 1),)))
        gens.append(RuleGenerator(f"wall[{s.char}]", (B, s, B, E), (((B, E, B, s), 1),)))
        gens.append(RuleGenerator(f"wall-back[{s.char}]", (B, E, B, s), (((B, s, B, E), 1),)))
    # one barrier, one signal: hop to the opposite corner unless the barrier sits there
    for s in SIGNALS:
        for bpos, spos in itertools.permutations(range(4), 2):
            if bpos == _opposite(spos):
                continue
            cells = [E] * 4
            cells[bpos], cells[spos] = B, s
            out = [E] * 4
            out[bpos], out[_opposite(spos)] = B, s
            gens.append(RuleGenerator(f"pass[{s.char}]", tuple(cells), ((tuple(out), 1),)))
    gens.append(
        RuleGenerator(
            "semitransparent[0]",
            (B, E, SIG0, B),
            (((B, SIG0, E, B), SQRT1_2), ((B, SIG1, E, B), SQRT1_2)),
        )
    )
    gens.append(
        RuleGenerator(
            "semitransparent[1]",
            (B, E, SIG1, B),
            (((B, SIG0, E, B), SQRT1_2), ((B, SIG1, E, B), -SQRT1_2)),
        )
    )
    for x, y in itertools.product(SIGNALS, SIGNALS):
        amp = CROSS_PHASE if (x is SIG1 and y is SIG1) else 1
        gens.append(RuleGenerator(f"cross[{x.char}{y.char}]", (x, E, y, E), (((E, y, E, x), amp),)))
    return gens


def _rows_equal(a: Row, b: Row) -> bool:
    da, db = dict(), dict()
    for blk, amp in a:
        da[blk] = da.get(blk, 0) + amp
    for blk, amp in b:
        db[blk] = db.get(blk, 0) + amp
    keys = set(da) | set(db)
    return all(abs(da.get(k, 0) - db.get(k, 0)) <= AMP_TOL for k in keys)


@dataclass(frozen=True)
class ScatteringTable:
    """Total map from the 256 block basis states to their images."""

    rows: tuple[Row, ...]
    origins: tuple[str | None, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if len(self.rows) != 256:
            raise ConstructionError(f"table has {len(self.rows)} rows, expected 256")

    def row(self, b: Block) -> Row:
        return self.rows[block_index(b)]

    def is_identity_row(self, i: int) -> bool:
        r = self.rows[i]
        return len(r) == 1 and block_index(r[0][0]) == i and abs(r[0][1] - 1) <= AMP_TOL

    def non_identity_rows(self) -> list[int]:
        return [i for i in range(256) if not self.is_identity_row(i)]

    def matrix(self) -> np.ndarray:
        """M[out, in] with column ``in`` holding the image of basis block ``in``."""
        m = np.zeros((256, 256), dtype=complex)
        for i, row in enumerate(self.rows):
            for blk, amp in row:
                m[block_index(blk), i] += amp
        return m

    def adjoint(self) -> "ScatteringTable":
        m = self.matrix().conj().T
        rows = []
        for i in range(256):
            col = m[:, i]
            rows.append(tuple((block_from_index(int(j)), complex(col[j])) for j in np.flatnonzero(np.abs(col) > AMP_TOL)))
        return ScatteringTable(tuple(rows))

    def lookup_table(self) -> list[Row | None]:
        """Per-index rows, ``None`` where the row is the identity."""
        return [None if self.is_identity_row(i) else self.rows[i] for i in range(256)]


def apply_block(t: ScatteringTable, b: Block) -> Row:
    return t.row(b)


def build_scattering_table(generators: list[RuleGenerator] | None = None, audit: bool = True) -> ScatteringTable:
    gens = rule_generators() if generators is None else generators
    claimed: dict[int, tuple[RuleGenerator, Row]] = {}
    for gen in gens:
        norm = sum(abs(a) ** 2 for _, a in gen.outputs)
        if abs(norm - 1) > AMP_TOL:
            raise ConstructionError(f"rule {gen.name} {block_str(gen.input)}: output norm {norm}")
        for turns in range(4):
            r = gen.rotated(turns)
            key = block_index(r.input)
            row = tuple((blk, complex(a)) for blk, a in r.outputs)
            if key in claimed:
                other, other_row = claimed[key]
                if not _rows_equal(other_row, row):
                    raise ConstructionError(
                        f"rule collision on {block_str(r.input)}: {other.name} vs {gen.name}"
                    )
                continue
            claimed[key] = (gen, row)
    rows = []
    origins = []
    for i in range(256):
        if i in claimed:
            rows.append(claimed[i][1])
            origins.append(claimed[i][0].name)
        else:
            rows.append(((block_from_index(i), 1 + 0j),))
            origins.append(None)
    table = ScatteringTable(tuple(rows), tuple(origins))
    if audit:
        audit_table(table)
    return table


def unitarity_residual(table: ScatteringTable) -> float:
    m = table.matrix()
    return float(np.max(np.abs(m.conj().T @ m - np.eye(256))))


def audit_table(table: ScatteringTable) -> None:
    m = table.matrix()
    gram = m.conj().T @ m - np.eye(256)
    bad = np.argwhere(np.abs(gram) > UNITARY_TOL)
    if bad.size:
        i, j = (int(v) for v in bad[0])
        raise ConstructionError(
            f"unitarity audit failed on columns {block_str(block_from_index(i))} / {block_str(block_from_index(j))}"
        )
    if not table.is_identity_row(0):
        raise ConstructionError("quiescent block is not fixed")


def rotation_permutation(quarter_turns: int = 1) -> np.ndarray:
    p = np.zeros((256, 256))
    for i in range(256):
        p[block_index(rotate_block(block_from_index(i), quarter_turns)), i] = 1
    return p


def format_amp(a: complex) -> str:
    return f"{a.real:+.17g}{a.imag:+.17g}j"


def dump_table(table: ScatteringTable) -> str:
    """One line per non-identity row, in block-index order."""
    lines = []
    for i in table.non_identity_rows():
        parts = [f"{format_amp(a)} {block_str(b)}" for b, a in table.rows[i]]
        lines.append(f"IN {block_str(block_from_index(i))} -> " + " + ".join(parts))
    return "\n".join(lines) + "\n"


_DEFAULT: ScatteringTable | None = None


def default_table() -> ScatteringTable:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = build_scattering_table()
    return _DEFAULT

