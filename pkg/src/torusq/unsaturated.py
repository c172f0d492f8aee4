"""Multi-round strategy driving a balanced network to the uniform optimum.

One round is planned in three stages. First the single-round engine
computes shifts and the certificate cycles for the current deployment.
Then an entry link feeding a top-level cycle is drained below a full
round's worth of agents by repeatedly cutting its inflow (release). Last
comes the rotation sweep: at every junction the certified cycles pass
through, one green unit at a time is conceded to the entry's orientation.
Each certified link gains (or loses) the same amount at both of its road
endpoints, so certified queues are held flat, while the entry's own green
grows past its round-start queue; the entry then hands its cycle fewer
agents than the cycle passes on, and executing the round strictly drains
it. Links pushed over the top level by these edits are repaired by
flooding, and any repair that jams proves a new cycle, which joins the
certificate set instead.

Each executed round therefore either grows the certified subgraph or
removes agents from it, and the deployment converges to the uniform
optimum where every queue holds exactly its road average.

All queue values manipulated here are planned end-of-round queues in the
store-and-forward model; the deployment itself only changes when the
round executes.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .conflict import BACKWARD, FORWARD, ConflictCycle
from .errors import (
    InternalInvariantViolation,
    NoCycleFound,
    NonTermination,
    SlackExceeded,
    ThresholdViolated,
)
from .flooding import Trace, _apply_flow, _flood, compute_queues
from .saturated import _optimize, extract_phi_cycle
from .torus import (
    Orientation,
    TorusGeometry,
    step,
    validate_psi,
    validate_queues,
    validate_shifts,
)


class RoundEvent(Enum):
    CONVERGED = "converged"
    CYCLE_EXTENDED = "cycle-extended"
    AGENTS_REDUCED = "agents-reduced"


@dataclass
class RoundRecord:
    """One executed round: the plan, the deployment it produced, and which
    kind of progress the planning stage made."""

    shifts: list[int]
    deployment: list[int]
    event: RoundEvent
    phi: int


@dataclass
class StrategyResult:
    k: int
    rounds: list[RoundRecord]
    final: list[int]

    def num_rounds(self) -> int:
        return len(self.rounds)


def _cycle_links(cycles: list[ConflictCycle]) -> set[int]:
    out: set[int] = set()
    for cyc in cycles:
        out.update(cyc.links)
    return out


def _junctions(geom: TorusGeometry, cycles: list[ConflictCycle]) -> set[tuple[int, int]]:
    # Every vertex a cycle passes through: the exit junction of each link
    # under its traversal direction.
    out: set[tuple[int, int]] = set()
    for cyc in cycles:
        for e, d in zip(cyc.links, cyc.dirs):
            out.add(geom.head(e) if d > 0 else geom.tail(e))
    return out


def rotate(
    geom: TorusGeometry,
    psi: int,
    cycles: list[ConflictCycle],
    a: int,
    s: list[int],
) -> list[int]:
    """Rotate the cycle set by a without touching any of its queues.

    At every junction the cycles pass through, the link sharing the
    orientation of the first listed link gains a green and the crossing
    link loses a. Both road endpoints of every cycle link are such
    junctions, so along the cycles each link sends exactly as much more
    (or less) as it receives and their queues are unchanged. Links that
    merely feed or cross a rotated junction shift too, so out-of-cycle
    queues do change and must be re-checked by the caller. Raises
    SlackExceeded if any resulting shift leaves the half-round box; s is
    never modified in place.
    """
    if a < 0:
        raise ValueError(f"rotation amount must be nonnegative, got {a}")
    validate_psi(psi)
    half = psi // 2
    out = list(s)
    if not cycles:
        return out
    sign = 1 if geom.orientation(cycles[0].links[0]) is Orientation.HORIZONTAL else -1
    for row, col in _junctions(geom, cycles):
        h, v = geom.incoming(row, col)
        out[h] += sign * a
        out[v] -= sign * a
    for e in geom.links():
        if abs(out[e]) > half:
            raise SlackExceeded(
                f"rotating by {a} pushes shift of link {e} to {out[e]}, "
                f"outside +-{half}")
    return out


def _extract_band(geom, q, pool, root, levels):
    # Strongest certificate first; None when no level yields a cycle.
    for level in levels:
        try:
            return extract_phi_cycle(geom, q, pool, root, level)
        except NoCycleFound:
            continue
    return None


@dataclass
class ReleaseResult:
    ok: bool
    shifts: list[int]
    queues: list[int]
    added: tuple[ConflictCycle, ...]


def release(
    geom: TorusGeometry,
    psi: int,
    w: list[int],
    s: list[int],
    entry: int,
    phi: int,
    cycles: list[ConflictCycle],
    trace: Trace | None = None,
) -> ReleaseResult:
    """Drain the planned queue of an entry link below one full round.

    Each unit cut of the entry's inflow raises the planned queues of its
    road predecessor and of the crossing feeder, which are flooded back
    down to phi. When a repair flood jams, the original plan is restored
    and the blocking cycle (if one can be certified) is reported in
    added; ok is False either way. If the shift box binds first, the cuts
    already made are kept, with ok False because the target was missed.
    Pure: returns fresh shift and queue vectors.
    """
    validate_psi(psi)
    validate_queues(geom, w)
    validate_shifts(geom, psi, s)
    in_c = _cycle_links(cycles)
    if geom.succ[entry] not in in_c:
        raise ValueError(f"link {entry} does not feed the cycle set")
    s2 = list(s)
    q2 = compute_queues(geom, psi, w, s2, exact=True)
    found: list[ConflictCycle] = []

    def collect(cyc: ConflictCycle) -> bool:
        found.append(cyc)
        return True

    ok, _ = _release_inplace(geom, psi, w, s2, q2, entry, phi, cycles,
                             collect, trace)
    return ReleaseResult(ok, s2, q2, tuple(found))


def _release_inplace(
    geom: TorusGeometry,
    psi: int,
    w: list[int],
    s: list[int],
    q: list[int],
    entry: int,
    phi: int,
    cycles: list[ConflictCycle],
    record,
    trace: Trace | None,
) -> tuple[bool, bool]:
    """Returns (ok, grew). grew reports whether a blocking cycle was
    certified and accepted by record.

    A jammed repair flood restores the plan from the function entry. A
    shift box or starved predecessor merely stops cutting: the cuts made
    so far stay in the plan, lowering the entry's queue for the next
    round even though this one reports failure.
    """
    half = psi // 2
    s0, q0 = list(s), list(q)
    guard = q[entry] + psi + 4
    while q[entry] > psi - 1:
        guard -= 1
        if guard < 0:
            return False, False
        p = geom.pred[entry]
        if s[p] - 1 < -half or s[geom.conf[p]] + 1 > half:
            # Inflow cannot be cut further within the shift box.
            return False, False
        before = q[entry]
        s1, q1 = list(s), list(q)
        _apply_flow(geom, psi, w, s, q, p, -1, True)
        if q[entry] >= before:
            # Predecessor is starved; the entry receives nothing to cut.
            s[:], q[:] = s1, q1
            return False, False
        for root, direction in ((p, BACKWARD), (geom.bconf[entry], FORWARD)):
            if q[root] <= phi:
                continue
            ok, tree = _flood(geom, psi, w, s, q, root, direction, phi, True, trace)
            if ok:
                continue
            pool = set(tree) | _cycle_links(cycles) | {entry, root}
            s[:], q[:] = s0, q0
            cyc = _extract_band(geom, q, pool, root, (phi + 1, phi))
            return False, bool(cyc is not None and record(cyc))
    return True, False


def _pick_entry(
    geom: TorusGeometry,
    q: list[int],
    cycles: list[ConflictCycle],
    phi: int,
    dead: set[int],
    in_c: set[int],
) -> int | None:
    """Entry link whose fed road run inside a cycle reaches a top-level
    queue in the fewest hops.

    Entries outside the certified subgraph are preferred, but one sitting
    in a different cycle still works: the rotation holds every certified
    queue flat wherever the entry lives, so starving its road successor
    stays sound. Ties break by hop count, then link index.
    """
    best: tuple[int, int, int] | None = None
    for cyc in cycles:
        members = set(cyc.links)
        for x in cyc.links:
            if q[x] != phi:
                continue
            y, hops = x, 0
            # Walk the road upstream through the cycle's own links.
            while hops <= geom.n and geom.pred[y] in members:
                y = geom.pred[y]
                hops += 1
            if hops > geom.n:
                continue  # the whole ring belongs to the cycle
            entry = geom.pred[y]
            if entry in dead:
                continue
            key = (1 if entry in in_c else 0, hops, entry)
            if best is None or key < best:
                best = key
    if best is None:
        return None
    return best[2]


def _sweep_rotation(
    geom: TorusGeometry,
    psi: int,
    w: list[int],
    s: list[int],
    q: list[int],
    entry: int,
    cycles: list[ConflictCycle],
    phi: int,
    in_c: set[int],
    record,
    trace: Trace | None,
) -> bool:
    """Ramp the entry's green while the certified subgraph rotates along.

    Each step concedes one green unit at every junction of the subgraph
    to the entry's orientation, which raises the entry's green without
    moving any certified queue. Runs until the entry's green exceeds its
    round-start queue (so the subgraph is fed less than it forwards), the
    shift box binds, or a repair flood jams. Returns True when a jam
    certified a new cycle; the step that caused it is rolled back either
    way.
    """
    half = psi // 2
    d = 1 if geom.orientation(entry) is Orientation.HORIZONTAL else -1
    bumps = sorted(geom.incoming(row, col)[0]
                   for row, col in _junctions(geom, cycles))
    while half + s[entry] + 1 <= w[entry] + 1:
        if any(abs(s[h] + d) > half or abs(s[geom.conf[h]] - d) > half
               for h in bumps):
            break
        s_bak, q_bak = list(s), list(q)
        for h in bumps:
            _apply_flow(geom, psi, w, s, q, h, d, True)
        # Store-and-forward sends are capped by what a link holds, so a
        # green pushed past an in-cycle queue lets that link dump its whole
        # backlog downstream and lift a certified queue above the level.
        # Such a step cannot be repaired without undoing the certificate;
        # roll it back and stop ramping.
        if any(q[x] > phi for x in in_c):
            s[:], q[:] = s_bak, q_bak
            return False
        for x in geom.links():
            if x in in_c or q[x] <= phi:
                continue
            backward = geom.succ[x] in in_c or geom.conf[x] in in_c
            ok, tree = _flood(geom, psi, w, s, q, x,
                              BACKWARD if backward else FORWARD, phi, True, trace)
            if ok:
                continue
            pool = set(tree) | in_c | {x}
            found = _extract_band(geom, q, pool, x, (phi + 1, phi))
            s[:], q[:] = s_bak, q_bak
            if found is not None and record(found):
                return True
            return False
    return False


def minimize_unsaturated(
    geom: TorusGeometry,
    psi: int,
    w: list[int],
    k: int,
    round_cap: int | None = None,
    trace: Trace | None = None,
) -> StrategyResult:
    """Iterate rounds until every queue holds exactly the road average k.

    Requires every road to carry k*n agents and the round to be long
    enough (psi > k - n + 1) that a single link can never hide a full
    round's worth of the road's imbalance. Each round replans from zero
    shifts. Raises NonTermination if the cap (default 10*k*n^2) runs out.
    """
    validate_psi(psi)
    validate_queues(geom, w)
    if k < 1:
        raise ValueError(f"need k >= 1, got {k}")
    n = geom.n
    for orient in Orientation:
        for idx in range(n):
            total = sum(w[x] for x in geom.ring_links(orient, idx))
            if total != k * n:
                raise ThresholdViolated(
                    f"road {orient.value}/{idx} holds {total} agents, "
                    f"need {k * n}")
    if psi <= k - n + 1:
        raise ThresholdViolated(
            f"round length {psi} cannot rebalance k={k} on n={n} "
            f"(needs more than {k - n + 1})")
    cap = 10 * k * n * n if round_cap is None else round_cap

    w_cur = list(w)
    rounds: list[RoundRecord] = []
    for _ in range(cap):
        if max(w_cur) == k:
            rounds.append(RoundRecord(
                [0] * geom.num_links, list(w_cur), RoundEvent.CONVERGED, k))
            return StrategyResult(k, rounds, w_cur)

        sol = _optimize(geom, psi, w_cur, exact=True, trace=trace)
        s, q = list(sol.shifts), list(sol.queues)
        cycles = list(sol.cycles)
        seen = set(cycles)
        phi = max(q)
        extended = False

        def record(cyc: ConflictCycle) -> bool:
            nonlocal extended
            if cyc in seen:
                return False
            seen.add(cyc)
            cycles.append(cyc)
            extended = True
            if trace is not None:
                trace({"event": "cycle", "links": list(cyc.links), "level": phi})
            return True

        dead: set[int] = set()
        inner_guard = 4 * geom.num_links + 8
        while inner_guard:
            inner_guard -= 1
            in_c = _cycle_links(cycles)
            entry = _pick_entry(geom, q, cycles, phi, dead, in_c)
            if entry is None:
                break
            ok, grew = _release_inplace(
                geom, psi, w_cur, s, q, entry, phi, cycles, record, trace)
            if not ok:
                if not grew:
                    dead.add(entry)
                continue
            if _sweep_rotation(geom, psi, w_cur, s, q, entry, cycles, phi,
                               in_c, record, trace):
                continue
            break

        w_next = step(geom, psi, w_cur, s)
        if w_next != q:
            raise InternalInvariantViolation(
                "planned queues disagree with round simulation")
        event = RoundEvent.CYCLE_EXTENDED if extended else RoundEvent.AGENTS_REDUCED
        rounds.append(RoundRecord(list(s), list(w_next), event, phi))
        w_cur = w_next
    raise NonTermination(f"no convergence within {cap} rounds")
