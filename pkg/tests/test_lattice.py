import pytest
from hypothesis import given
from hypothesis import strategies as st

from uqca.lattice import (
    BARRIER,
    EMPTY,
    SIG0,
    SIG1,
    CellState,
    Configuration,
    GridFormatError,
    Parity,
    ParityError,
    block_cells,
    block_from_index,
    block_index,
    block_origin,
    format_grid,
    parse_block,
    parse_grid,
    read_block,
    signal_blocks,
    write_block,
)

coords = st.tuples(st.integers(-20, 20), st.integers(-20, 20))
states = st.sampled_from([SIG0, SIG1, BARRIER])
configs = st.dictionaries(coords, states, max_size=25).map(Configuration)


def test_cell_states_and_chars():
    assert [s.char for s in CellState] == [".", "0", "1", "#"]
    assert CellState.signal(0) is SIG0 and CellState.signal(1) is SIG1
    assert SIG0.is_signal and not BARRIER.is_signal and not EMPTY.is_signal


def test_block_index_round_trip():
    for i in range(256):
        assert block_index(block_from_index(i)) == i
    assert block_index((SIG0, EMPTY, EMPTY, BARRIER)) == (1 << 6) | 3


def test_block_origin_by_parity():
    assert block_origin((3, 5), Parity.ALIGNED) == (2, 4)
    assert block_origin((3, 5), Parity.SHIFTED) == (3, 5)
    assert block_origin((-1, 0), Parity.ALIGNED) == (-2, 0)
    assert block_origin((0, 0), Parity.SHIFTED) == (-1, -1)
    assert block_cells((0, 0)) == ((0, 1), (1, 1), (0, 0), (1, 0))


def test_empty_configuration_reads_quiescent():
    c = Configuration.empty()
    assert len(c) == 0
    assert c.get((5, -7)) is EMPTY
    assert read_block(c, (0, 0)) == (EMPTY,) * 4


def test_write_block_rejects_wrong_parity():
    c = Configuration.empty()
    with pytest.raises(ParityError):
        write_block(c, (1, 0), (SIG0, EMPTY, EMPTY, EMPTY), Parity.ALIGNED)
    c2 = write_block(c, (1, 1), (SIG0, EMPTY, EMPTY, BARRIER), Parity.SHIFTED)
    assert c2[(1, 2)] is SIG0 and c2[(2, 1)] is BARRIER


def test_empty_states_are_not_stored():
    c = Configuration({(0, 0): EMPTY, (1, 1): SIG1})
    assert len(c) == 1 and (0, 0) not in c


def test_with_cells_keeps_shared_barrier_set():
    c = Configuration({(0, 0): BARRIER, (2, 2): SIG0})
    moved = c.with_cells([((2, 2), EMPTY), ((3, 3), SIG0)])
    assert moved.barriers is c.barriers
    assert moved != c and moved.get((3, 3)) is SIG0


def test_union_rejects_overlap():
    a = Configuration({(0, 0): BARRIER})
    with pytest.raises(ValueError):
        a.union(Configuration({(0, 0): SIG0}))


def test_parse_grid_example():
    c = parse_grid("offset 0 2\n#..\n.1.\n..0\n")
    assert c == Configuration({(0, 2): BARRIER, (1, 1): SIG1, (2, 0): SIG0})


@pytest.mark.parametrize("text", ["", "0 0\n1\n", "offset a b\n", "offset 0 0\n.x\n"])
def test_parse_grid_rejects_malformed(text):
    with pytest.raises(GridFormatError):
        parse_grid(text)


def test_parse_block_rejects_bad_literals():
    with pytest.raises(GridFormatError):
        parse_block("..0")
    with pytest.raises(GridFormatError):
        parse_block("..a.")


@given(configs)
def test_grid_round_trip(c):
    assert parse_grid(format_grid(c)) == c


@given(configs, st.integers(-5, 5), st.integers(-5, 5))
def test_translation_round_trip(c, dx, dy):
    t = c.translated(dx, dy)
    assert t.translated(-dx, -dy) == c
    assert len(t) == len(c)


@given(configs)
def test_hash_matches_equality(c):
    rebuilt = Configuration(dict(c.items()))
    assert rebuilt == c and hash(rebuilt) == hash(c)


@given(configs)
def test_canonical_order_is_north_to_south(c):
    keys = [(-xy[1], xy[0]) for xy, _ in c.canonical()]
    assert keys == sorted(keys)


@given(configs, st.sampled_from(list(Parity)))
def test_signal_blocks_cover_every_signal(c, parity):
    origins = signal_blocks(c, parity)
    for xy, _ in c.signal_items():
        assert xy in block_cells(block_origin(xy, parity))
        assert block_origin(xy, parity) in origins
