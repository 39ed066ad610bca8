"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` or as a script.
"""

from __future__ import annotations

import cmath
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from support import double_splitter, stress_state  # noqa: E402

from uqca.compiler import layout_circuit, parse_circuit, simulate  # noqa: E402
from uqca.evolution import Superposition, Telemetry, fidelity, run, run_back  # noqa: E402
from uqca.intrinsic import ReferencePQCA, check_direct_simulation, flatten_pqca, probe_states  # noqa: E402
from uqca.lattice import EMPTY, SIG0, SIG1, block_index, parse_block  # noqa: E402
from uqca.oracle import GATE_MATRICES, apply_circuit, basis_state, phase_fidelity, random_state  # noqa: E402
from uqca.scattering import build_scattering_table, rotation_permutation, unitarity_residual  # noqa: E402
from uqca.tiles import DURATION, builtin_tiles, verify_tile  # noqa: E402

RULES = Path(__file__).parent / "data" / "displayed_rules.txt"


def report(capsys, number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    if capsys is None:
        print(line)
    else:
        with capsys.disabled():
            print("\n" + line)
    assert ok, line


def criterion_1():
    t0 = time.perf_counter()
    table = build_scattering_table()
    residual = unitarity_residual(table)
    elapsed = time.perf_counter() - t0
    quiescent = table.is_identity_row(0)
    ok = residual <= 1e-12 and quiescent and elapsed < 1.0
    return ok, f"unitarity residual {residual:.2e}, quiescent row fixed={quiescent}, {elapsed:.2f}s"


def criterion_2():
    m = build_scattering_table().matrix()
    r = rotation_permutation(1)
    ok = bool(np.array_equal(r @ m, m @ r))
    return ok, "rotation permutation commutes exactly" if ok else "rotation does not commute"


def criterion_3():
    table = build_scattering_table()
    checked, bad = 0, []
    for line in RULES.read_text().splitlines():
        if not line.strip() or line.startswith(";"):
            continue
        lhs, rhs = line.split("->")
        want = {}
        for term in rhs.split("+ "):
            amp, blk = term.split()
            want[block_index(parse_block(blk))] = complex(amp)
        got = {block_index(b): a for b, a in table.row(parse_block(lhs.strip()))}
        checked += 1
        if got.keys() != want.keys() or any(abs(got[k] - want[k]) > 1e-15 for k in want):
            bad.append(lhs.strip())
    (_, phase), = table.row(parse_block("1.1."))
    phase_ok = abs(phase - cmath.exp(1j * math.pi / 4)) < 1e-15
    ok = not bad and checked == 18 and phase_ok
    return ok, f"{checked} displayed rows matched, mismatches={bad}, crossing phase ok={phase_ok}"


def criterion_4():
    t0 = time.perf_counter()
    psi = stress_state(10)
    tel = Telemetry()
    out = run(psi, 200, telemetry=tel)
    drift = max(abs(n - 1) for n in tel.norms)
    back = run_back(out, 200, build_scattering_table().adjoint())
    f = fidelity(back, psi)
    elapsed = time.perf_counter() - t0
    ok = len(psi) == 10 and drift <= 1e-9 and f >= 1 - 1e-9 and elapsed < 10
    return ok, f"max norm drift {drift:.1e}, reversal fidelity {f:.12f}, peak branches {max(tel.branch_counts)}, {elapsed:.2f}s"


def criterion_5():
    t0 = time.perf_counter()
    tiles = builtin_tiles()
    reports = [verify_tile(spec) for spec in tiles.values()]
    elapsed = time.perf_counter() - t0
    gates = sorted(spec.gate for spec in tiles.values())
    phase = next(r for r in reports if r.name == "phase")
    worst = max(r.distance for r in reports)
    ok = (
        all(r.ok for r in reports)
        and gates == ["CP", "H", "ID", "SWAP", "T"]
        and all(s.duration == DURATION for s in tiles.values())
        and phase.ancilla_period == 6
        and DURATION % phase.ancilla_period == 0
        and worst <= 1e-9
        and elapsed < 10
    )
    return ok, f"{len(reports)} tiles ok, worst distance {worst:.1e}, ancilla period {phase.ancilla_period}, {elapsed:.2f}s"


def criterion_6():
    t0 = time.perf_counter()
    layout = layout_circuit(parse_circuit("qubits 2\nCNOT 0 1\n"))
    cnot = GATE_MATRICES["CNOT"]
    fids = [phase_fidelity(simulate(layout, i), cnot[:, i]) for i in range(4)]
    elapsed = time.perf_counter() - t0
    ok = min(fids) >= 1 - 1e-6 and elapsed < 30
    return ok, f"min basis fidelity {min(fids):.12f} over 4 inputs, {layout.layer_count} layers, {elapsed:.2f}s"


def random_circuit(rng) -> str:
    n = int(rng.integers(1, 4))
    kinds = ["H", "T"] + (["CP", "SWAP", "CNOT"] if n > 1 else [])
    lines = [f"qubits {n}"]
    for _ in range(int(rng.integers(1, 9))):
        kind = kinds[int(rng.integers(len(kinds)))]
        if kind in ("H", "T"):
            lines.append(f"{kind} {int(rng.integers(n))}")
        else:
            a, b = rng.choice(n, size=2, replace=False)
            lines.append(f"{kind} {a} {b}")
    return "\n".join(lines) + "\n"


def criterion_7():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240607)
    worst, inputs = 1.0, 0
    for _ in range(25):
        ir = parse_circuit(random_circuit(rng))
        layout = layout_circuit(ir)
        n = ir.qubit_count
        for i in range(2**n):
            x = basis_state(n, i)
            worst = min(worst, phase_fidelity(simulate(layout, x), apply_circuit(ir, x)))
            inputs += 1
    elapsed = time.perf_counter() - t0
    ok = worst >= 1 - 1e-6 and elapsed < 300
    return ok, f"25 circuits, {inputs} basis inputs, min fidelity {worst:.12f}, {elapsed:.1f}s"


def criterion_8():
    details, ok = [], True
    for bit in (0, 1):
        start = double_splitter(bit)
        want = start.with_cells([((0, 0), EMPTY), ((2, 2), SIG1 if bit else SIG0)])
        pruned = run(Superposition.basis(start), 2)
        exact = run(Superposition.basis(start), 2, prune=0.0)
        spurious = sum(abs(a) ** 2 for c, a in exact.branches.items() if c != want)
        single = len(pruned) == 1 and abs(abs(pruned.amplitude(want)) - 1) < 1e-12
        ok &= single and spurious <= 1e-18
        details.append(f"bit {bit}: single={single} spurious mass {spurious:.1e}")
    # the same through two compiled hadamard tiles
    layout = layout_circuit(parse_circuit("qubits 1\nH 0\nH 0\n"))
    for bit in (0, 1):
        out = simulate(layout, bit)
        ok &= abs(abs(out[bit]) - 1) < 1e-12 and abs(out[1 - bit]) ** 2 <= 1e-18
    details.append("two hadamard tiles restore both inputs" if ok else "tile pair failed")
    return ok, "; ".join(details)


def criterion_9():
    t0 = time.perf_counter()
    circuits = {"identity": "qubits 4\nID 0\n", "in-block swap": "qubits 4\nSWAP 0 1\n", "one-H": "qubits 4\nH 0\n"}
    worst, parts = 1.0, []
    ok = True
    for name, src in circuits.items():
        p = ReferencePQCA(2, 2, parse_circuit(src))
        layout, coding = flatten_pqca(p, 2)
        states = list(probe_states(4, 3, np.random.default_rng(1)))
        for i in (1, 2):
            r = check_direct_simulation(layout, p, coding, i, states, threshold=1 - 1e-5)
            ok &= r.ok
            worst = min(worst, r.min_fidelity)
        parts.append(name)
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 600
    return ok, f"V in {parts}, i in (1, 2), min fidelity {worst:.12f}, {elapsed:.1f}s"


def criterion_10():
    p = ReferencePQCA(2, 2, parse_circuit("qubits 4\nH 0\nCP 0 3\n"))
    layout, coding = flatten_pqca(p, 1)
    rng = np.random.default_rng(10)
    states = [(f"random{k}", random_state(4, rng)) for k in range(10)]
    r = check_direct_simulation(layout, p, coding, 0, states, threshold=1 - 1e-9, residue_threshold=1 - 1e-6)
    ok = r.ok and r.states_checked == 10 and r.min_fidelity >= 1 - 1e-9 and r.residue_fidelity >= 1 - 1e-6
    return ok, f"10 random states, min fidelity {r.min_fidelity:.12f}, residue fidelity {r.residue_fidelity:.12f}"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


@pytest.mark.parametrize("number", range(1, 11))
def test_criterion(number, capsys):
    ok, detail = CRITERIA[number - 1]()
    report(capsys, number, ok, detail)


if __name__ == "__main__":
    failed = 0
    for k, fn in enumerate(CRITERIA, 1):
        ok, detail = fn()
        print(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        failed += not ok
    sys.exit(1 if failed else 0)
