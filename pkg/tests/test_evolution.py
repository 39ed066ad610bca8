import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from support import double_splitter, naive_step, reflecting_box, stress_state

from uqca.evolution import (
    IntegrityError,
    ResourceError,
    Superposition,
    Telemetry,
    dump_branches,
    fidelity,
    load_branches,
    render_frame,
    run,
    run_back,
    step,
)
from uqca.lattice import BARRIER, EMPTY, SIG0, SIG1, Configuration, Parity
from uqca.scattering import ScatteringTable, default_table

cells = st.tuples(st.integers(0, 7), st.integers(0, 7))
small_configs = st.dictionaries(cells, st.sampled_from([SIG0, SIG1, BARRIER]), min_size=1, max_size=8).map(
    Configuration
)


def test_empty_superposition_is_fixed():
    psi = Superposition.basis(Configuration.empty())
    out = run(psi, 17)
    assert out.branches == {Configuration.empty(): 1}
    assert out.time == 17 and out.parity is Parity.SHIFTED


@pytest.mark.parametrize("bit", [0, 1])
def test_free_signal_moves_diagonally(bit):
    s = SIG1 if bit else SIG0
    psi = Superposition.basis(Configuration({(4, 0): s}))
    (cfg, amp), = run(psi, 24).branches.items()
    assert cfg == Configuration({(28, 24): s}) and amp == 1


def test_semitransparent_splits_into_two_branches():
    cfg = Configuration({(0, 1): BARRIER, (1, 0): BARRIER, (0, 0): SIG1})
    out = step(Superposition.basis(cfg))
    amps = {c.get((1, 1)): a for c, a in out.branches.items()}
    assert amps[SIG0] == pytest.approx(math.sqrt(0.5))
    assert amps[SIG1] == pytest.approx(-math.sqrt(0.5))


@pytest.mark.parametrize("bit", [0, 1])
def test_two_splitters_interfere_back(bit):
    out = run(Superposition.basis(double_splitter(bit)), 2, prune=0.0)
    want = double_splitter(0).with_cells([((0, 0), EMPTY), ((2, 2), SIG1 if bit else SIG0)])
    assert abs(abs(out.amplitude(want)) - 1) < 1e-12
    spurious = sum(abs(a) ** 2 for c, a in out.branches.items() if c != want)
    assert spurious <= 1e-18


def test_step_matches_naive_full_block_update():
    table = default_table()
    psi = stress_state()
    for _ in range(12):
        want = naive_step(psi, table)
        psi = step(psi, table)
        assert set(want) == set(psi.branches)
        for c, a in want.items():
            assert abs(psi.branches[c] - a) < 1e-12


@settings(max_examples=40, deadline=None)
@given(small_configs, st.integers(0, 30), st.sampled_from(list(Parity)))
def test_norm_conserved(cfg, steps, parity):
    out = run(Superposition.basis(cfg, parity), steps)
    assert abs(out.norm_squared() - 1) < 1e-9


@settings(max_examples=40, deadline=None)
@given(small_configs, st.integers(0, 24))
def test_reversible(cfg, steps):
    psi = Superposition.basis(cfg)
    back = run_back(run(psi, steps), steps, default_table().adjoint())
    assert back.time == 0 and back.parity is Parity.ALIGNED
    assert fidelity(back, psi) >= 1 - 1e-9


@settings(max_examples=25, deadline=None)
@given(small_configs, small_configs, st.integers(0, 10))
def test_far_apart_patches_evolve_independently(a, b, steps):
    far = b.translated(100, 0)
    joint = run(Superposition.basis(a.union(far)), steps)
    left = run(Superposition.basis(a), steps)
    right = run(Superposition.basis(far), steps)
    assert len(joint) == len(left) * len(right)
    for ca, xa in left.branches.items():
        for cb, xb in right.branches.items():
            assert abs(joint.amplitude(ca.union(cb)) - xa * xb) < 1e-12


def test_barriers_never_move():
    psi = stress_state()
    barriers = {c.barriers for c in psi.branches}
    out = run(psi, 50)
    assert {c.barriers for c in out.branches} == barriers


def test_stress_state_norm_and_reversal():
    psi = stress_state()
    tel = Telemetry()
    out = run(psi, 200, telemetry=tel)
    assert max(abs(n - 1) for n in tel.norms) <= 1e-9
    assert fidelity(run_back(out, 200, default_table().adjoint()), psi) >= 1 - 1e-9


def test_branch_cap_raises():
    psi = Superposition.basis(Configuration({**reflecting_box(12), (2, 2): SIG1}))
    with pytest.raises(ResourceError):
        run(psi, 60, branch_cap=1)


def test_norm_drift_is_detected():
    t = default_table()
    rows = list(t.rows)
    lossy = ((EMPTY, SIG0, EMPTY, EMPTY), 0.5)
    rows[0b00000100] = (lossy,)  # SW signal 0, otherwise empty
    broken = ScatteringTable(tuple(rows))
    with pytest.raises(IntegrityError):
        step(Superposition.basis(Configuration({(0, 0): SIG0})), broken)


def test_dump_round_trip_and_determinism():
    psi = run(stress_state(), 30)
    text = dump_branches(psi)
    assert text == dump_branches(run(stress_state(), 30))
    back = load_branches(text, psi.parity, psi.time)
    assert fidelity(back, psi) == pytest.approx(1, abs=1e-12)


def test_render_frame_marks_block_columns():
    psi = Superposition.basis(Configuration({(0, 0): SIG1}))
    frame = render_frame(psi, (0, 0, 3, 1))
    lines = frame.splitlines()
    assert lines[0].startswith("t=0 parity=aligned")
    assert lines[1:] == ["....", "1...", "[][]"]
    assert render_frame(step(psi), (0, 0, 3, 1)).splitlines()[-1] == "][]["


def test_superposition_merges_equal_branches():
    c = Configuration({(0, 0): SIG0})
    psi = Superposition.from_branches([(c, 0.5), (c, 0.5), (Configuration({(1, 1): SIG0}), 1e-14)])
    assert psi.branches == {c: 1}
    assert np.isclose(psi.norm_squared(), 1)
