"""Search for barrier layouts meeting the tile contracts.

Signal paths are planned from macros (free flight, wall zigzags, a
semitransparent pass, an ancilla loop); barrier positions follow from the
plan. Candidates are accepted only after the real dynamics reproduce the
planned gate. Writes the layout files into src/uqca/tiles_data/.

    python tools/design_tiles.py [--seed N] [--out DIR]
"""

from __future__ import annotations

import argparse
import random
import sys
from dataclasses import dataclass
from pathlib import Path

from uqca import tiles
from uqca.lattice import SIG1, Parity, block_origin

DURATION = tiles.DURATION
ROWS = tiles.ROWS
LANE = tiles.LANE_WIDTH
PORT = tiles.PORT_OFFSET

# keeps every signal >= 3 offset columns away from the neighbouring lanes' cells
SIG_LO, SIG_HI = 2, 6
BAR_LO, BAR_HI = 1, 7


def direction(p, t):
    x, y = p
    off = t % 2
    return (1 if (x - off) % 2 == 0 else -1, 1 if (y - off) % 2 == 0 else -1)


@dataclass
class Plan:
    path: list  # position at each time 0..len
    barriers: set
    moves: str


def plan_path(start, moves: str) -> Plan | None:
    p = start
    path = [p]
    barriers = set()
    for t, m in enumerate(moves):
        dx, dy = direction(p, t)
        x, y = p
        if m == "F":
            q = (x + dx, y + dy)
        elif m == "V":
            barriers |= {(x + dx, y + dy), (x + dx, y)}
            q = (x, y + dy)
        elif m == "H":
            barriers |= {(x + dx, y + dy), (x, y + dy)}
            q = (x + dx, y)
        elif m == "D":
            barriers |= {(x + dx, y), (x, y + dy)}
            q = (x + dx, y + dy)
        elif m == "R":
            barriers.add((x + dx, y + dy))
            q = p
        else:
            raise ValueError(m)
        p = q
        path.append(p)
    if set(path) & barriers:
        return None
    return Plan(path, barriers, moves)


def zig(kind: str, k: int) -> str:
    return kind + "F" * k + kind


def random_moves(rng, x_loss: int, y_loss: int, max_k: int = 2) -> str | None:
    tokens = []
    for kind, loss in (("V", x_loss), ("H", y_loss)):
        while loss > 0:
            k = rng.randint(0, min(max_k, loss // 2 - 1))
            tokens.append(zig(kind, k))
            loss -= 2 + 2 * k
    special = sum(len(t) for t in tokens)
    free = DURATION - special
    if free < 0:
        return None
    tokens += ["F"] * free
    rng.shuffle(tokens)
    return "".join(tokens)


def in_footprint(plan: Plan, width: int, ancilla: bool = False) -> bool:
    for t, (x, y) in enumerate(plan.path):
        o = x - y
        if not (SIG_LO <= o <= width - LANE + SIG_HI):
            return False
        if t < len(plan.path) - 1 and not (0 <= y <= ROWS - 1):
            return False
        if ancilla and not (1 <= y <= ROWS - 2):
            return False
    for x, y in plan.barriers:
        if not (BAR_LO <= x - y <= width - LANE + BAR_HI and 1 <= y <= ROWS - 2):
            return False
    return True


def meetings(a: Plan, b: Plan):
    out = []
    for t in range(min(len(a.path), len(b.path)) - 1):
        par = Parity(t % 2)
        if block_origin(a.path[t], par) == block_origin(b.path[t], par):
            out.append(t)
    return out


def _exit_ok(plan: Plan, lane_out: int) -> bool:
    return plan.path[-1] == (lane_out * LANE + PORT + 14, 14)


def verify(spec: tiles.TileSpec) -> bool:
    try:
        report = tiles.verify_tile(spec)
    except Exception:
        return False
    return report.ok


def verify_composed(spec: tiles.TileSpec) -> bool:
    try:
        return tiles.check_composition(spec, spec) and tiles.check_lateral(spec)
    except Exception:
        return False


def search_single(rng, gate: str, tries: int = 20000) -> tiles.TileSpec:
    start = (PORT, 0)
    for _ in range(tries):
        moves = random_moves(rng, 10, 10)
        if moves is None:
            continue
        candidates = [moves]
        if gate == "H":
            # the semitransparent pair goes on the latest free step that fits
            candidates = [moves[:i] + "D" + moves[i + 1 :] for i in range(len(moves) - 1, -1, -1) if moves[i] == "F"]
        plan = None
        for cand in candidates:
            p = plan_path(start, cand)
            if p is not None and _exit_ok(p, 0) and in_footprint(p, LANE):
                plan = p
                break
        if plan is None:
            continue
        if gate == "T":
            spec = _with_ancilla(rng, plan)
            if spec is None:
                continue
        else:
            spec = tiles.TileSpec(
                name={"ID": "identity", "H": "hadamard"}[gate],
                width=LANE,
                barriers=frozenset(plan.barriers),
                ancillas=(),
                in_ports=(start,),
                out_ports=((PORT + 14, 14),),
                gate=gate,
            )
        if verify(spec) and verify_composed(spec):
            print(f"{gate}: moves {plan.moves}", file=sys.stderr)
            return spec
    raise RuntimeError(f"no layout found for {gate}")


def _ancilla_loop(cell, heading, lo, length=3):
    """End barriers of a segment along ``heading`` through ``cell``.

    The segment holds ``length`` cells starting ``lo`` steps from ``cell``;
    a lone signal bouncing between the ends has period ``2 * length``.
    """
    dx, dy = heading
    first = (cell[0] + lo * dx, cell[1] + lo * dy)
    return {
        (first[0] - dx, first[1] - dy),
        (first[0] + length * dx, first[1] + length * dy),
    }


def _with_ancilla(rng, plan: Plan) -> tiles.TileSpec | None:
    free_times = [t for t, m in enumerate(plan.moves) if m == "F"]
    rng.shuffle(free_times)
    for ts in free_times:
        x, y = plan.path[ts]
        dx, dy = direction((x, y), ts)
        # the two corners of the input's block adjacent to it
        for cell in ((x + dx, y), (x, y + dy)):
            heading = direction(cell, ts)
            for lo in (-2, -1, 0):
                ends = _ancilla_loop(cell, heading, lo)
                barriers = set(plan.barriers) | ends
                if set(plan.path) & barriers:
                    continue
                if not in_footprint(Plan(plan.path, barriers, ""), LANE):
                    continue
                pos = _ancilla_at_zero(cell, ts, barriers)
                if pos is None:
                    continue
                orbit = Plan(pos[1], set(), "")
                if not in_footprint(orbit, LANE, ancilla=True):
                    continue
                spec = tiles.TileSpec(
                    name="phase",
                    width=LANE,
                    barriers=frozenset(barriers),
                    ancillas=((pos[0], SIG1),),
                    in_ports=((PORT, 0),),
                    out_ports=((PORT + 14, 14),),
                    gate="T",
                )
                if verify(spec) and verify_composed(spec):
                    return spec
    return None


def _ancilla_at_zero(cell, ts, barriers):
    """Run the lone ancilla forward from (cell, ts) to the next multiple of 6."""
    from uqca.evolution import Superposition, run
    from uqca.lattice import Configuration

    cfg = Configuration({**{b: tiles.BARRIER for b in barriers}, cell: SIG1})
    psi = Superposition.basis(cfg, Parity(ts % 2), ts)
    k = (-ts) % 6
    orbit = [cell]

    def rec(s):
        (c, _), = s.branches.items()
        orbit.append(next(xy for xy, v in c.signal_items()))

    try:
        psi = run(psi, k, on_step=rec)
        psi6 = run(psi, 6, on_step=rec)
        (c0, _), = psi.branches.items()
        (c6, _), = psi6.branches.items()
    except ValueError:  # the ancilla split into branches
        return None
    if c0 != c6:
        return None
    start = next(xy for xy, v in c0.signal_items())
    return start, orbit


def search_double(rng, gate: str, tries: int = 200000) -> tiles.TileSpec:
    a0, b0 = (PORT, 0), (LANE + PORT, 0)
    if gate == "SWAP":
        losses = ((2, 10), (18, 10))
        exits = (1, 0)
        want_meet = 0
    else:
        losses = ((10, 10), (10, 10))
        exits = (0, 1)
        want_meet = 1
    for _ in range(tries):
        ma = random_moves(rng, *losses[0], max_k=8)
        mb = random_moves(rng, *losses[1], max_k=8)
        if ma is None or mb is None:
            continue
        pa, pb = plan_path(a0, ma), plan_path(b0, mb)
        if pa is None or pb is None:
            continue
        if not (_exit_ok(pa, exits[0]) and _exit_ok(pb, exits[1])):
            continue
        joint = Plan(pa.path + pb.path, pa.barriers | pb.barriers, "")
        if set(pa.path) & joint.barriers or set(pb.path) & joint.barriers:
            continue
        if not (in_footprint(Plan(pa.path, joint.barriers, ""), 2 * LANE) and in_footprint(Plan(pb.path, set(), ""), 2 * LANE)):
            continue
        meet = meetings(pa, pb)
        if len(meet) != want_meet:
            continue
        if meet and not (ma[meet[0]] == "F" and mb[meet[0]] == "F"):
            continue
        if meet:
            t = meet[0]
            (ax, ay), (bx, by) = pa.path[t], pb.path[t]
            if ax != bx and ay != by:
                continue  # opposite corners
        spec = tiles.TileSpec(
            name={"SWAP": "swap", "CP": "cphase"}[gate],
            width=2 * LANE,
            barriers=frozenset(joint.barriers),
            ancillas=(),
            in_ports=(a0, b0),
            out_ports=((PORT + 14, 14), (LANE + PORT + 14, 14)),
            gate=gate,
        )
        if verify(spec) and verify_composed(spec):
            print(f"{gate}: A {ma}  B {mb}", file=sys.stderr)
            return spec
    raise RuntimeError(f"no layout found for {gate}")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path(tiles.DATA_DIR))
    ap.add_argument("--only", nargs="*", default=None)
    args = ap.parse_args(argv)
    rng = random.Random(args.seed)
    jobs = [("ID", search_single), ("H", search_single), ("T", search_single), ("SWAP", search_double), ("CP", search_double)]
    for gate, fn in jobs:
        if args.only and gate not in args.only:
            continue
        spec = fn(rng, gate)
        path = args.out / f"{spec.name}.uqca"
        path.write_text(tiles.format_tile(spec))
        print(f"wrote {path}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
