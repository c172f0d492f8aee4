"""Command-line front end: generate, step, optimize, bounds, oracle, export.

Every command reads and writes the versioned JSON state schema (see
NetworkState.to_payload), all randomness flows through the seeded
SplitMix64 generator, and outputs are deterministic for a given argument
vector. Exit codes: 0 success, 1 malformed input or invocation, 2
infeasible instance (unsaturated where saturation is required, round
length at or below the rebalancing threshold, no certificate), 3 budget
exhausted (search caps, round caps).
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Any

from .conflict import enumerate_cycles, ring_cycle
from .dot import conflict_dot, torus_dot
from .errors import (
    BudgetExceeded,
    EmptyCycleSet,
    NoCycleFound,
    NonTermination,
    NotSaturated,
    SlackExceeded,
    ThresholdViolated,
)
from .oracle import (
    brute_force_optimum,
    lower_bound_saturated,
    saturated_optimum,
    threshold_construction,
)
from .rng import SplitMix64
from .saturated import minimize_saturated, optimize_single_round
from .torus import NetworkState, Orientation, TorusGeometry, generate_balanced, step
from .unsaturated import minimize_unsaturated

_INFEASIBLE = (NotSaturated, ThresholdViolated, EmptyCycleSet, SlackExceeded,
               NoCycleFound)
_BUDGET = (BudgetExceeded, NonTermination)


class _Parser(argparse.ArgumentParser):
    # Invocation defects share the malformed-input exit code.
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise SystemExit(self._fail(message))

    def _fail(self, message: str) -> int:
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        return 1


def _read_state(path: str) -> NetworkState:
    if path == "-":
        raw = sys.stdin.read()
        where = "<stdin>"
    else:
        try:
            with open(path, encoding="utf-8") as fh:
                raw = fh.read()
        except OSError as exc:
            raise ValueError(f"{path}: {exc.strerror or exc}") from exc
        where = path
    try:
        payload = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ValueError(
            f"{where}: line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    try:
        return NetworkState.from_payload(payload)
    except ValueError as exc:
        raise ValueError(f"{where}: {exc}") from exc


def _write_text(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _emit_json(obj: Any, out: str | None) -> None:
    _write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", out)


def _tracer(path: str | None):
    if path is None:
        return None, None
    fh = open(path, "w", encoding="utf-8")

    def emit(event: dict) -> None:
        fh.write(json.dumps(event, sort_keys=True) + "\n")

    return emit, fh


def _cmd_generate(args: argparse.Namespace) -> int:
    if args.dist == "balanced":
        if args.k is None:
            raise ValueError("--dist balanced requires --k")
        state = generate_balanced(args.n, args.psi, args.k, args.seed)
    elif args.dist == "lemma":
        if args.k is None:
            raise ValueError("--dist lemma requires --k")
        if args.n != 2:
            raise ValueError("the lemma construction is a 2x2 instance; use --n 2")
        state = threshold_construction(args.k, args.psi)
    else:
        if args.lo > args.hi:
            raise ValueError(f"empty queue range [{args.lo}, {args.hi}]")
        if args.lo < 0:
            raise ValueError("queue lower bound must be non-negative")
        geom = TorusGeometry(args.n)
        rng = SplitMix64(args.seed)
        w = [rng.randint(args.lo, args.hi) for _ in geom.links()]
        state = NetworkState(geom, args.psi, w, [0] * geom.num_links).validate()
    _emit_json(state.to_payload(), args.out)
    return 0


def _cmd_step(args: argparse.Namespace) -> int:
    state = _read_state(args.infile)
    if args.rounds < 0:
        raise ValueError("--rounds must be non-negative")
    w = list(state.w)
    for _ in range(args.rounds):
        w = step(state.geom, state.psi, w, state.s)
    out = NetworkState(state.geom, state.psi, w, list(state.s))
    _emit_json(out.to_payload(), args.out)
    return 0


def _cmd_optimize_saturated(args: argparse.Namespace) -> int:
    state = _read_state(args.infile)
    trace, fh = _tracer(args.trace)
    try:
        sol = minimize_saturated(state.geom, state.psi, state.w, trace=trace)
    finally:
        if fh:
            fh.close()
    report = {
        "initial_max": sol.initial_max,
        "phi": sol.phi,
        "bound": sol.bound,
        "binding": list(sol.binding.links) if sol.binding else None,
        "cycles": len(sol.cycles),
        "pinned": sorted(sol.pinned),
        "certified_optimal": not sol.pinned,
    }
    _emit_json(report, None)
    if args.out:
        planned = NetworkState(state.geom, state.psi, list(state.w), list(sol.shifts))
        _emit_json(planned.to_payload(), args.out)
    return 0


def _cmd_optimize_unsaturated(args: argparse.Namespace) -> int:
    state = _read_state(args.infile)
    geom = state.geom
    k = args.k
    if k is None:
        total = sum(state.w[e] for e in geom.ring_links(Orientation.HORIZONTAL, 0))
        if total % geom.n:
            raise ValueError(
                f"road total {total} is not a multiple of n={geom.n}; pass --k")
        k = total // geom.n
    trace, fh = _tracer(args.trace)
    try:
        res = minimize_unsaturated(geom, state.psi, state.w, k,
                                   round_cap=args.cap, trace=trace)
    finally:
        if fh:
            fh.close()
    events: dict[str, int] = {}
    for rec in res.rounds:
        events[rec.event.value] = events.get(rec.event.value, 0) + 1
    report = {
        "k": k,
        "rounds": res.num_rounds(),
        "initial_max": max(state.w),
        "final_max": max(res.final),
        "events": events,
    }
    _emit_json(report, None)
    if args.out:
        final = NetworkState(geom, state.psi, list(res.final), [0] * geom.num_links)
        _emit_json(final.to_payload(), args.out)
    return 0


def _cmd_bounds(args: argparse.Namespace) -> int:
    state = _read_state(args.infile)
    geom = state.geom
    rings = [ring_cycle(geom, o, i) for o in Orientation for i in range(geom.n)]
    report: dict[str, Any] = {
        "initial_max": max(state.w),
        "road_bound": max(-(-cyc.sum_queues(state.w) // len(cyc)) for cyc in rings),
        "saturated": all(q >= state.psi for q in state.w),
    }
    # Cycle enumeration is exhaustive only at small n; report the strongest
    # certificate that is affordable.
    if geom.n <= 4:
        cycles = enumerate_cycles(geom)
        report["saturated_cycle_bound"] = lower_bound_saturated(state.w, cycles)
        report["enumerated_cycles"] = len(cycles)
    else:
        report["saturated_cycle_bound"] = lower_bound_saturated(state.w, rings)
        report["enumerated_cycles"] = len(rings)
    _emit_json(report, args.out)
    return 0


def _cmd_oracle(args: argparse.Namespace) -> int:
    state = _read_state(args.infile)
    if args.brute:
        phi_star, shifts = brute_force_optimum(state.geom, state.psi, state.w)
        method = "exhaustive"
    else:
        phi_star, shifts = saturated_optimum(state.geom, state.psi, state.w)
        method = "difference-constraints"
    _emit_json({"phi_star": phi_star, "method": method, "witness": shifts},
               args.out)
    return 0


def _reproduce_once(seed: int) -> dict[str, Any]:
    geom = TorusGeometry(5)
    psi = 26
    rng = SplitMix64(seed)
    w = [rng.randint(10, 20) for _ in geom.links()]
    sol = optimize_single_round(geom, psi, w)
    return {
        "seed": seed,
        "initial_max": sol.initial_max,
        "final_max": sol.phi,
        "bound": sol.bound,
        "binding": list(sol.binding.links) if sol.binding else None,
    }


def _cmd_reproduce(args: argparse.Namespace) -> int:
    if args.sweep is not None:
        if args.sweep < 1:
            raise ValueError("--sweep must be positive")
        results = [_reproduce_once(s) for s in range(args.sweep)]
        report = {
            "seeds": args.sweep,
            "reduced": sum(r["final_max"] <= r["initial_max"] for r in results),
            "tight": sum(r["final_max"] == r["bound"] for r in results),
            "results": results,
        }
        _emit_json(report, args.out)
    else:
        _emit_json(_reproduce_once(args.seed), args.out)
    return 0


def _cmd_export_dot(args: argparse.Namespace) -> int:
    state = _read_state(args.infile)
    if args.format == "json":
        _emit_json(state.to_payload(), args.out)
        return 0
    cycles = ()
    queues = None
    if args.highlight:
        sol = optimize_single_round(state.geom, state.psi, state.w)
        cycles = sol.cycles
        queues = sol.queues
    if args.what == "conflict":
        text = conflict_dot(state.geom, cycles, queues)
    else:
        text = torus_dot(state, cycles)
    _write_text(text, args.out)
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="torusq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common_out(p: argparse.ArgumentParser) -> None:
        p.add_argument("--out", metavar="FILE", default=None,
                       help="write here instead of stdout")

    p = sub.add_parser("generate", help="emit a random or constructed state")
    p.add_argument("--n", type=int, required=True, help="grid dimension")
    p.add_argument("--psi", type=int, required=True, help="round length (even)")
    p.add_argument("--seed", type=int, default=0, help="64-bit RNG seed")
    p.add_argument("--dist", choices=("uniform", "balanced", "lemma"),
                   default="uniform", help="queue distribution")
    p.add_argument("--lo", type=int, default=10, help="uniform lower bound")
    p.add_argument("--hi", type=int, default=20, help="uniform upper bound")
    p.add_argument("--k", type=int, default=None,
                   help="road average (balanced) or target mean (lemma)")
    add_common_out(p)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("step", help="run rounds under the stored shifts")
    p.add_argument("--in", dest="infile", required=True, metavar="FILE")
    p.add_argument("--rounds", type=int, default=1)
    add_common_out(p)
    p.set_defaults(func=_cmd_step)

    p = sub.add_parser("optimize-saturated",
                       help="one-round optimal plan for a saturated state")
    p.add_argument("--in", dest="infile", required=True, metavar="FILE")
    p.add_argument("--trace", metavar="FILE", default=None,
                   help="JSON-lines engine trace")
    add_common_out(p)
    p.set_defaults(func=_cmd_optimize_saturated)

    p = sub.add_parser("optimize-unsaturated",
                       help="multi-round rebalancing to the road average")
    p.add_argument("--in", dest="infile", required=True, metavar="FILE")
    p.add_argument("--k", type=int, default=None,
                   help="road average (derived from the state when omitted)")
    p.add_argument("--cap", type=int, default=None, help="round cap")
    p.add_argument("--trace", metavar="FILE", default=None,
                   help="JSON-lines strategy trace")
    add_common_out(p)
    p.set_defaults(func=_cmd_optimize_unsaturated)

    p = sub.add_parser("bounds", help="report lower bounds for a state")
    p.add_argument("--in", dest="infile", required=True, metavar="FILE")
    add_common_out(p)
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("oracle", help="reference optimum (saturated states)")
    p.add_argument("--in", dest="infile", required=True, metavar="FILE")
    p.add_argument("--brute", action="store_true",
                   help="exhaustive search instead of difference constraints")
    add_common_out(p)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("reproduce-5x5",
                       help="5x5 benchmark: one optimized round, psi=26, U[10,20]")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sweep", type=int, default=None, metavar="N",
                   help="run seeds 0..N-1 and summarize")
    add_common_out(p)
    p.set_defaults(func=_cmd_reproduce)

    p = sub.add_parser("export-dot", help="render a state as Graphviz DOT")
    p.add_argument("--in", dest="infile", required=True, metavar="FILE")
    p.add_argument("--what", choices=("torus", "conflict"), default="torus")
    p.add_argument("--format", choices=("dot", "json"), default="dot",
                   help="json re-emits the parsed state (round-trip check)")
    p.add_argument("--highlight", action="store_true",
                   help="color the certificate cycles of an optimized round")
    add_common_out(p)
    p.set_defaults(func=_cmd_export_dot)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _INFEASIBLE as exc:
        # Checked before ValueError: the infeasibility family subclasses it.
        print(f"torusq: infeasible: {exc}", file=sys.stderr)
        return 2
    except _BUDGET as exc:
        print(f"torusq: budget exhausted: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"torusq: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
