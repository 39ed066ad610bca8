"""Cell states, finite configurations and the alternating 2x2 block partition.

Coordinates are ``(x, y)`` integer pairs, x growing East and y growing North.
A block is addressed by its south-west cell; its four cells are always listed
in the order (NW, NE, SW, SE).
"""

from __future__ import annotations

import enum
from typing import Iterable, Iterator, Mapping

Coord = tuple[int, int]


class CellState(enum.IntEnum):
    EMPTY = 0
    SIG0 = 1
    SIG1 = 2
    BARRIER = 3

    @property
    def is_signal(self) -> bool:
        return self is CellState.SIG0 or self is CellState.SIG1

    @property
    def char(self) -> str:
        return _STATE_CHARS[self]

    @classmethod
    def signal(cls, bit: int) -> "CellState":
        return cls.SIG1 if bit else cls.SIG0


_STATE_CHARS = {
    CellState.EMPTY: ".",
    CellState.SIG0: "0",
    CellState.SIG1: "1",
    CellState.BARRIER: "#",
}
_CHAR_STATES = {c: s for s, c in _STATE_CHARS.items()}

EMPTY, SIG0, SIG1, BARRIER = CellState.EMPTY, CellState.SIG0, CellState.SIG1, CellState.BARRIER

Block = tuple[CellState, CellState, CellState, CellState]

# offsets of (NW, NE, SW, SE) relative to the block origin
BLOCK_OFFSETS: tuple[Coord, ...] = ((0, 1), (1, 1), (0, 0), (1, 0))


class Parity(enum.Enum):
    ALIGNED = 0
    SHIFTED = 1

    def flipped(self) -> "Parity":
        return Parity.SHIFTED if self is Parity.ALIGNED else Parity.ALIGNED

    @classmethod
    def parse(cls, text: str) -> "Parity":
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown parity {text!r}") from None


class ParityError(ValueError):
    """A block origin does not belong to the requested partition."""


class GridFormatError(ValueError):
    pass


def block_origin(xy: Coord, parity: Parity) -> Coord:
    """Origin of the block containing ``xy`` for the given partition."""
    off = parity.value
    x, y = xy
    return (x - ((x - off) % 2), y - ((y - off) % 2))


def block_cells(origin: Coord) -> tuple[Coord, Coord, Coord, Coord]:
    ox, oy = origin
    return ((ox, oy + 1), (ox + 1, oy + 1), (ox, oy), (ox + 1, oy))


def is_origin(xy: Coord, parity: Parity) -> bool:
    return block_origin(xy, parity) == xy


def block_index(b: Block) -> int:
    """Basis index in 0..255; the NW cell is the most significant digit."""
    return (b[0] << 6) | (b[1] << 4) | (b[2] << 2) | b[3]


def block_from_index(i: int) -> Block:
    return (CellState((i >> 6) & 3), CellState((i >> 4) & 3), CellState((i >> 2) & 3), CellState(i & 3))


def block_str(b: Block) -> str:
    return "".join(s.char for s in b)


def parse_block(text: str) -> Block:
    if len(text) != 4:
        raise GridFormatError(f"block literal needs 4 characters, got {text!r}")
    return tuple(_char_state(c) for c in text)  # type: ignore[return-value]


def _char_state(c: str) -> CellState:
    try:
        return _CHAR_STATES[c]
    except KeyError:
        raise GridFormatError(f"invalid cell character {c!r}") from None


class Configuration(Mapping[Coord, CellState]):
    """Finitely supported, immutable map from cells to non-empty states.

    Barriers and signals are held separately: the dynamics never moves a
    barrier, so every branch of a superposition shares one barrier set.
    """

    __slots__ = ("_barriers", "_signals", "_hash")

    def __init__(self, cells: Mapping[Coord, CellState] | Iterable[tuple[Coord, CellState]] = ()):
        items = cells.items() if isinstance(cells, Mapping) else cells
        barriers = set()
        signals = {}
        for xy, state in items:
            xy = (int(xy[0]), int(xy[1]))
            state = CellState(state)
            barriers.discard(xy)
            signals.pop(xy, None)
            if state is BARRIER:
                barriers.add(xy)
            elif state is not EMPTY:
                signals[xy] = state
        self._barriers = frozenset(barriers)
        self._signals = signals
        self._hash = None

    @classmethod
    def _make(cls, barriers: frozenset, signals: dict) -> "Configuration":
        c = cls.__new__(cls)
        c._barriers = barriers
        c._signals = signals
        c._hash = None
        return c

    @classmethod
    def empty(cls) -> "Configuration":
        return cls._make(frozenset(), {})

    # Mapping interface -------------------------------------------------
    def __getitem__(self, xy: Coord) -> CellState:
        s = self._signals.get(xy)
        if s is not None:
            return s
        if xy in self._barriers:
            return BARRIER
        raise KeyError(xy)

    def get(self, xy: Coord, default: CellState = EMPTY) -> CellState:  # type: ignore[override]
        s = self._signals.get(xy)
        if s is not None:
            return s
        return BARRIER if xy in self._barriers else default

    def __iter__(self) -> Iterator[Coord]:
        return iter(k for k, _ in self.canonical())

    def __len__(self) -> int:
        return len(self._barriers) + len(self._signals)

    def __contains__(self, xy: object) -> bool:
        return xy in self._signals or xy in self._barriers

    # identity ------------------------------------------------------------
    def _key(self):
        return (self._barriers, frozenset(self._signals.items()))

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self._key())
        return self._hash

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        if self is other:
            return True
        return self._signals == other._signals and self._barriers == other._barriers

    def __repr__(self) -> str:
        return f"Configuration({dict(self.canonical())!r})"

    # accessors -----------------------------------------------------------
    @property
    def barriers(self) -> frozenset[Coord]:
        return self._barriers

    @property
    def signals(self) -> dict[Coord, CellState]:
        return dict(self._signals)

    def signal_items(self):
        return self._signals.items()

    def canonical(self) -> tuple[tuple[Coord, CellState], ...]:
        """Entries sorted North to South, then West to East."""
        entries = [(xy, BARRIER) for xy in self._barriers]
        entries.extend(self._signals.items())
        entries.sort(key=lambda e: (-e[0][1], e[0][0]))
        return tuple(entries)

    def signal_key(self) -> tuple:
        return tuple(sorted(((-xy[1], xy[0], int(s)) for xy, s in self._signals.items())))

    def sort_key(self) -> tuple:
        return (self.signal_key(), len(self._barriers))

    def bounds(self) -> tuple[int, int, int, int] | None:
        """(xmin, ymin, xmax, ymax) of the support, or None when empty."""
        if not self:
            return None
        xs = [xy[0] for xy in self._barriers] + [xy[0] for xy in self._signals]
        ys = [xy[1] for xy in self._barriers] + [xy[1] for xy in self._signals]
        return min(xs), min(ys), max(xs), max(ys)

    # updates (return new objects) ---------------------------------------
    def with_cells(self, updates: Mapping[Coord, CellState] | Iterable[tuple[Coord, CellState]]) -> "Configuration":
        items = updates.items() if isinstance(updates, Mapping) else updates
        signals = dict(self._signals)
        add_b, drop_b = set(), set()
        for xy, state in items:
            signals.pop(xy, None)
            if state is BARRIER:
                if xy not in self._barriers:
                    add_b.add(xy)
                drop_b.discard(xy)
            else:
                if xy in self._barriers:
                    drop_b.add(xy)
                add_b.discard(xy)
                if state is not EMPTY:
                    signals[xy] = CellState(state)
        barriers = self._barriers
        if add_b or drop_b:
            barriers = (barriers - drop_b) | add_b
        return Configuration._make(barriers, signals)

    def translated(self, dx: int, dy: int) -> "Configuration":
        return Configuration._make(
            frozenset((x + dx, y + dy) for x, y in self._barriers),
            {(x + dx, y + dy): s for (x, y), s in self._signals.items()},
        )

    def union(self, other: "Configuration") -> "Configuration":
        overlap = set(self.keys()) & set(other.keys())
        if overlap:
            raise ValueError(f"configurations overlap at {sorted(overlap)[:5]}")
        signals = dict(self._signals)
        signals.update(other._signals)
        return Configuration._make(self._barriers | other._barriers, signals)

    def without_signals(self) -> "Configuration":
        return Configuration._make(self._barriers, {})


def active_blocks(c: Configuration, parity: Parity) -> set[Coord]:
    """Origins of all blocks of the given partition holding a non-empty cell."""
    out = {block_origin(xy, parity) for xy in c.barriers}
    out.update(block_origin(xy, parity) for xy in c.signals)
    return out


def signal_blocks(c: Configuration, parity: Parity) -> set[Coord]:
    """Origins of the blocks holding at least one signal."""
    return {block_origin(xy, parity) for xy, _ in c.signal_items()}


def read_block(c: Configuration, origin: Coord) -> Block:
    return tuple(c.get(xy) for xy in block_cells(origin))  # type: ignore[return-value]


def write_block(c: Configuration, origin: Coord, block: Block, parity: Parity | None = None) -> Configuration:
    if parity is not None and not is_origin(origin, parity):
        raise ParityError(f"{origin} is not a {parity.name.lower()} block origin")
    return c.with_cells(zip(block_cells(origin), (CellState(s) for s in block)))


# grid text ---------------------------------------------------------------

def parse_grid(text: str) -> Configuration:
    """Parse the ``offset x y`` + rows text format."""
    lines = text.splitlines()
    while lines and not lines[0].strip():
        lines.pop(0)
    if not lines:
        raise GridFormatError("missing offset line")
    head = lines[0].split()
    if len(head) != 3 or head[0] != "offset":
        raise GridFormatError(f"expected 'offset <x> <y>', got {lines[0]!r}")
    try:
        ox, oy = int(head[1]), int(head[2])
    except ValueError:
        raise GridFormatError(f"bad offset line {lines[0]!r}") from None
    cells = {}
    for row, line in enumerate(lines[1:]):
        line = line.rstrip("\n").rstrip()
        for col, ch in enumerate(line):
            state = _char_state(ch)
            if state is not EMPTY:
                cells[(ox + col, oy - row)] = state
    return Configuration(cells)


def format_grid(c: Configuration, window: tuple[int, int, int, int] | None = None) -> str:
    """Render as grid text; ``window`` is (xmin, ymin, xmax, ymax)."""
    if window is None:
        window = c.bounds()
        if window is None:
            return "offset 0 0\n"
    xmin, ymin, xmax, ymax = window
    lines = [f"offset {xmin} {ymax}"]
    for y in range(ymax, ymin - 1, -1):
        row = "".join(c.get((x, y)).char for x in range(xmin, xmax + 1))
        lines.append(row.rstrip("."))
    while len(lines) > 1 and lines[-1] == "":
        lines.pop()
    return "\n".join(lines) + "\n"
