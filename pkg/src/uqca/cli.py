"""Command-line front end.

Failures print one line ``error: <ErrorClass>: <message>`` on stderr and exit
with status 1; malformed arguments exit with status 2.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import compiler, intrinsic, oracle, scattering, tiles
from .evolution import (
    DEFAULT_BRANCH_CAP,
    PRUNE_THRESHOLD,
    Superposition,
    dump_branches,
    load_branches,
    render_frame,
    run,
    superposition_window,
)
from .lattice import Parity, format_grid, parse_grid


class VerificationError(RuntimeError):
    pass


def _read(path: str) -> str:
    return sys.stdin.read() if path == "-" else Path(path).read_text()


def _load_state(path: str, parity: Parity) -> Superposition:
    text = _read(path)
    if text.lstrip().startswith("---"):
        return load_branches(text, parity)
    return Superposition.basis(parse_grid(text), parity)


def _positive_float(s: str) -> float:
    v = float(s)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _positive_int(s: str) -> int:
    v = int(s)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _steps(s: str) -> int:
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _region(s: str) -> tuple[int, int]:
    try:
        w, h = (int(v) for v in s.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"region must look like WxH, got {s!r}") from None
    return w, h


def _bits(s: str) -> str:
    if not s or set(s) - {"0", "1"}:
        raise argparse.ArgumentTypeError(f"basis must be a bit string, got {s!r}")
    return s


def _print_amplitudes(vec: np.ndarray, out) -> None:
    n = int(np.log2(len(vec))) if len(vec) > 1 else 0
    for i, a in enumerate(vec):
        label = format(i, f"0{n}b") if n else ""
        print(f"|{label}> {a.real:+.12f} {a.imag:+.12f}i", file=out)


def _joint_window(frames):
    boxes = [w for w in (superposition_window(f, margin=1) for f in frames) if w is not None]
    if not boxes:
        return None
    return (
        min(b[0] for b in boxes),
        min(b[1] for b in boxes),
        max(b[2] for b in boxes),
        max(b[3] for b in boxes),
    )


# subcommands ----------------------------------------------------------------

def cmd_run(args, out) -> int:
    parity = Parity.parse(args.parity)
    steps = args.steps
    if args.ports:
        ins, outs, sidecar_steps, parity = compiler.parse_ports(_read(args.ports))
        steps = sidecar_steps if steps is None else steps
    if steps is None:
        raise argparse.ArgumentTypeError("--steps is required without --ports")
    psi = _load_state(args.input, parity)
    machinery = None
    if args.basis is not None or args.decode:
        if not args.ports or args.basis is None:
            raise argparse.ArgumentTypeError("--basis and --decode need --ports and --basis")
        machinery = psi.top_branch()[0]
        if len(args.basis) != len(ins):
            raise argparse.ArgumentTypeError(f"--basis needs {len(ins)} bits")
        psi = compiler.encode_state(machinery, ins, args.basis, parity)
    frames = [psi]

    def on_step(s):
        if args.render == "frames":
            frames.append(s)

    psi = run(psi, steps, prune=args.prune, branch_cap=args.branch_cap, on_step=on_step)
    if args.render == "frames":
        window = _joint_window(frames)
        print("\n".join(render_frame(f, window) for f in frames), end="", file=out)
    if args.render == "final":
        print(render_frame(psi), file=out)
    if args.dump:
        Path(args.dump).write_text(dump_branches(psi))
    print(f"branches: {len(psi)}; norm: {psi.norm_squared():.12f}", file=out)
    if args.decode:
        _print_amplitudes(compiler.decode_state(psi, machinery, outs), out)
    return 0


def cmd_compile(args, out) -> int:
    ir = compiler.parse_circuit(_read(args.circuit))
    layout = compiler.layout_circuit(ir)
    if args.out:
        dest = Path(args.out)
        dest.write_text(format_grid(layout.config))
        ports = Path(args.ports) if args.ports else dest.with_suffix(".ports")
        ports.write_text(compiler.format_ports(layout))
    print(
        f"qubits: {layout.qubit_count}; layers: {layout.layer_count}; steps: {layout.total_steps}; "
        f"barriers: {len(layout.config.barriers)}",
        file=out,
    )
    if args.basis is not None:
        if len(args.basis) != layout.qubit_count:
            raise argparse.ArgumentTypeError(f"--basis needs {layout.qubit_count} bits")
        psi = run(compiler.encode_inputs(layout, args.basis), layout.total_steps)
        _print_amplitudes(compiler.decode_outputs(layout, psi), out)
    return 0


def _reference(args) -> intrinsic.ReferencePQCA:
    v = compiler.parse_circuit(_read(args.v))
    w, h = args.region
    return intrinsic.ReferencePQCA(w, h, v)


def cmd_flatten(args, out) -> int:
    p = _reference(args)
    layout, coding = intrinsic.flatten_pqca(p, args.steps)
    if args.out:
        prefix = Path(args.out)
        prefix.with_suffix(".uqca").write_text(format_grid(layout.config))
        prefix.with_suffix(".ports").write_text(compiler.format_ports(layout))
        lines = [f"cell {q} {x} {y}" for q, (x, y) in enumerate(coding.cells)]
        lines += [
            f"region {p.width} {p.height}",
            f"supercell {coding.supercell}",
            f"steps_per_update {coding.steps_per_update}",
            f"sim_steps {coding.sim_steps}",
        ]
        prefix.with_suffix(".coding").write_text("\n".join(lines) + "\n")
    print(
        f"cells: {p.cell_count}; layers_per_update: {coding.layers_per_update}; "
        f"steps_per_update: {coding.steps_per_update}; supercell: {coding.supercell}; "
        f"total_steps: {layout.total_steps}",
        file=out,
    )
    return 0


def cmd_verify_table(args, out) -> int:
    table = scattering.build_scattering_table()
    residual = scattering.unitarity_residual(table)
    rows = len(table.non_identity_rows())
    print(f"unitary: residual {residual:.1e}; rows: {rows}", file=out)
    m = table.matrix()
    r = scattering.rotation_permutation(1)
    if residual > scattering.UNITARY_TOL:
        raise VerificationError(f"unitarity residual {residual:.3g}")
    if not np.array_equal(r @ m, m @ r):
        raise VerificationError("table is not invariant under rotation")
    if args.dump:
        Path(args.dump).write_text(scattering.dump_table(table))
    return 0


def cmd_verify_tiles(args, out) -> int:
    specs = tiles.builtin_tiles()
    if args.tile:
        specs = {k: v for k, v in specs.items() if k in args.tile}
    bad = []
    for name, spec in sorted(specs.items()):
        report = tiles.verify_tile(spec)
        print(report, file=out)
        if not report.ok:
            bad.append(name)
    if args.compose:
        for a in sorted(specs):
            for b in sorted(specs):
                if specs[a].lanes != specs[b].lanes:
                    continue
                ok = tiles.check_composition(specs[a], specs[b])
                print(f"compose {a} -> {b}: {'ok' if ok else 'FAIL'}", file=out)
                if not ok:
                    bad.append(f"{a}->{b}")
    if bad:
        raise VerificationError(f"failing tiles: {', '.join(bad)}")
    return 0


def cmd_check_intrinsic(args, out) -> int:
    p = _reference(args)
    layout, coding = intrinsic.flatten_pqca(p, args.steps)
    rng = np.random.default_rng(args.seed)
    states = list(intrinsic.probe_states(p.cell_count, args.random, rng))
    failed = []
    for i in range(args.steps + 1):
        report = intrinsic.check_direct_simulation(layout, p, coding, i, states, threshold=args.threshold)
        print(report.summary(), file=out)
        for f in report.failures:
            print(f"  {f}", file=out)
        if not report.ok:
            failed.append(i)
    if failed:
        raise VerificationError(f"direct simulation failed at i={failed}")
    return 0


def cmd_oracle(args, out) -> int:
    ir = compiler.parse_circuit(_read(args.circuit))
    n = ir.qubit_count
    if args.basis is not None:
        if len(args.basis) != n:
            raise argparse.ArgumentTypeError(f"--basis needs {n} bits")
        state = oracle.basis_state(n, int(args.basis, 2))
    else:
        state = oracle.random_state(n, np.random.default_rng(args.seed))
    _print_amplitudes(oracle.apply_circuit(ir, state), out)
    return 0


def cmd_render(args, out) -> int:
    psi = _load_state(args.input, Parity.parse(args.parity))
    frames = [psi]

    def keep(s):
        if s.time % args.every == 0 or s.time == args.steps:
            frames.append(s)

    psi = run(psi, args.steps, prune=args.prune, branch_cap=args.branch_cap, on_step=keep)
    window = _joint_window(frames)
    print("\n".join(render_frame(f, window) for f in frames), end="", file=out)
    if args.final:
        Path(args.final).write_text(format_grid(psi.top_branch()[0]))
    return 0


def cmd_dump_table(args, out) -> int:
    print(scattering.dump_table(scattering.default_table()), end="", file=out)
    return 0


# parser ---------------------------------------------------------------------

def _add_run_options(p) -> None:
    p.add_argument("--parity", default="aligned", choices=["aligned", "shifted"])
    p.add_argument("--prune", type=_positive_float, default=PRUNE_THRESHOLD)
    cap = os.environ.get("UQCA_BRANCH_CAP")
    p.add_argument("--branch-cap", type=_positive_int, default=int(cap) if cap else DEFAULT_BRANCH_CAP)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="uqca", description="Universal partitioned quantum cellular automaton toolkit.")
    ap.add_argument("--threads", type=_positive_int, default=1, help="worker budget; results do not depend on it")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="evolve a configuration or branch dump")
    p.add_argument("--input", required=True)
    p.add_argument("--steps", type=_steps)
    _add_run_options(p)
    p.add_argument("--render", default="none", choices=["none", "frames", "final"])
    p.add_argument("--dump", help="write the final branches here")
    p.add_argument("--ports", help="port sidecar written by 'compile'")
    p.add_argument("--basis", type=_bits, help="encode this bit string at the input ports")
    p.add_argument("--decode", action="store_true", help="print the qubit state at the output ports")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compile", help="compile a circuit into a barrier layout")
    p.add_argument("--circuit", required=True)
    p.add_argument("--out", help="layout grid file; ports go next to it")
    p.add_argument("--ports")
    p.add_argument("--basis", type=_bits, help="also run this basis input and print the decoded state")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("flatten", help="flatten a small qubit-per-cell automaton")
    p.add_argument("--v", required=True, help="4-qubit block circuit")
    p.add_argument("--region", type=_region, default=(2, 2))
    p.add_argument("--steps", type=_steps, default=1)
    p.add_argument("--out", help="output prefix for .uqca, .ports and .coding")
    p.set_defaults(func=cmd_flatten)

    p = sub.add_parser("verify-table", help="audit the scattering table")
    p.add_argument("--dump", help="also write the table text here")
    p.set_defaults(func=cmd_verify_table)

    p = sub.add_parser("verify-tiles", help="verify the built-in tiles")
    p.add_argument("--tile", nargs="*")
    p.add_argument("--compose", action="store_true", help="also check tile-after-tile composition")
    p.set_defaults(func=cmd_verify_tiles)

    p = sub.add_parser("check-intrinsic", help="direct-simulation report for a flattened automaton")
    p.add_argument("--v", required=True)
    p.add_argument("--region", type=_region, default=(2, 2))
    p.add_argument("--steps", type=_steps, default=2)
    p.add_argument("--random", type=_steps, default=3, help="random superpositions to add to the basis probes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=1 - 1e-5)
    p.set_defaults(func=cmd_check_intrinsic)

    p = sub.add_parser("oracle", help="dense reference simulator")
    osub = p.add_subparsers(dest="oracle_command", required=True)
    q = osub.add_parser("run", help="apply a circuit to a basis or random state")
    q.add_argument("--circuit", required=True)
    q.add_argument("--basis", type=_bits)
    q.add_argument("--seed", type=int, default=0)
    q.set_defaults(func=cmd_oracle)

    p = sub.add_parser("render", help="ASCII space-time frames")
    p.add_argument("--input", required=True)
    p.add_argument("--steps", type=_steps, default=0)
    p.add_argument("--every", type=_positive_int, default=1)
    p.add_argument("--final", help="write the final dominant branch as a grid file")
    _add_run_options(p)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("dump-table", help="print the non-identity scattering rows")
    p.set_defaults(func=cmd_dump_table)
    return ap


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except argparse.ArgumentTypeError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: UsageError: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
