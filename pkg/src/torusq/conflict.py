"""Conflict structure over torus links.

Two links interact when changing one queue can change the other: the next and
previous links on the same road (``succ``/``pred``), the crossing link at the
shared head vertex (``conf``), and the crossing link at the shared tail vertex
(``bconf``). Forward neighbors of a link are ``{succ, conf}``, backward
neighbors ``{pred, bconf}``.

A conflict path chains these moves with a direction discipline: after a
``succ`` or ``bconf`` move the walk is oriented forward (next move must be a
forward-neighbor move), after ``conf`` or ``pred`` it is oriented backward.
Equivalently, each link is traversed either along its road direction (+1) or
against it (-1), and the four moves are exactly the transitions that keep the
walk vertex-continuous. A conflict cycle is a closed conflict path whose
undirected projection is a simple cycle: all links distinct and all turning
vertices distinct. Closed cycles are gridlocks: under saturation no shift
assignment changes their total queue length.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .errors import BudgetExceeded, InternalInvariantViolation
from .torus import Orientation, TorusGeometry

FORWARD = 1
BACKWARD = -1


class StepKind(Enum):
    SUCC = "succ"
    CONF = "conf"
    PRED = "pred"
    BCONF = "bconf"


def neighbors_forward(geom: TorusGeometry, e: int) -> tuple[int, int]:
    return geom.succ[e], geom.conf[e]


def neighbors_backward(geom: TorusGeometry, e: int) -> tuple[int, int]:
    return geom.pred[e], geom.bconf[e]


def edge_kinds(geom: TorusGeometry, a: int, b: int) -> tuple[StepKind, ...]:
    """All relations making b a conflict-graph neighbor of a.

    At most one on n >= 3; on n = 2 the same link can be both succ and pred.
    """
    kinds = []
    if b == geom.succ[a]:
        kinds.append(StepKind.SUCC)
    if b == geom.conf[a]:
        kinds.append(StepKind.CONF)
    if b == geom.pred[a]:
        kinds.append(StepKind.PRED)
    if b == geom.bconf[a]:
        kinds.append(StepKind.BCONF)
    return tuple(kinds)


def advance(geom: TorusGeometry, e: int, d: int, nxt: int) -> int | None:
    """Traversal direction of nxt when e (traversed with direction d) moves
    to nxt, or None when the move is not allowed from that direction."""
    if d > 0:
        if nxt == geom.succ[e]:
            return FORWARD
        if nxt == geom.conf[e]:
            return BACKWARD
    else:
        if nxt == geom.pred[e]:
            return BACKWARD
        if nxt == geom.bconf[e]:
            return FORWARD
    return None


def _exit_vertex(geom: TorusGeometry, e: int, d: int) -> tuple[int, int]:
    return geom.head(e) if d > 0 else geom.tail(e)


def _trace(geom: TorusGeometry, seq: Sequence[int], d0: int, closed: bool) -> list[int] | None:
    """Per-link traversal directions under seed d0, or None if the chain
    breaks. Closed traces must return to the seed direction at the wrap."""
    dirs = [d0]
    d = d0
    for i in range(len(seq) - 1):
        d = advance(geom, seq[i], d, seq[i + 1])
        if d is None:
            return None
        dirs.append(d)
    if closed:
        d = advance(geom, seq[-1], d, seq[0])
        if d is None or d != d0:
            return None
    return dirs


def is_conflict_path(geom: TorusGeometry, seq: Sequence[int]) -> bool:
    """True for an open conflict path: more than two distinct links whose
    consecutive moves admit a consistent direction discipline."""
    links = list(seq)
    if len(links) <= 2 or len(set(links)) != len(links):
        return False
    return any(_trace(geom, links, d0, closed=False) is not None for d0 in (FORWARD, BACKWARD))


def _cycle_dirs(geom: TorusGeometry, links: list[int]) -> list[int] | None:
    """Directions certifying the closed sequence as a conflict cycle.

    Requires distinct links, a cyclically consistent direction chain and
    pairwise distinct turning vertices (the undirected projection must be a
    simple cycle).
    """
    if len(links) < 2 or len(set(links)) != len(links):
        return None
    for d0 in (FORWARD, BACKWARD):
        dirs = _trace(geom, links, d0, closed=True)
        if dirs is None:
            continue
        junctions = [_exit_vertex(geom, links[i], dirs[i]) for i in range(len(links))]
        if len(set(junctions)) == len(junctions):
            return dirs
    return None


def is_conflict_cycle(geom: TorusGeometry, seq: Sequence[int]) -> bool:
    links = list(seq)
    if len(links) > 1 and links[0] == links[-1]:
        links = links[:-1]
    return _cycle_dirs(geom, links) is not None


def classify_boundary(
    geom: TorusGeometry, links: Iterable[int]
) -> tuple[frozenset[int], frozenset[int], frozenset[tuple[int, int]], frozenset[tuple[int, int]]]:
    """Entry/exit links and entry/exit vertices of a cycle's link set.

    An exit link is in the set with its road successor outside; an entry link
    is outside with its road successor inside. A vertex is an entry (exit)
    vertex when both links entering it are entry (exit) links; these are
    exactly the cycle's tail-side and head-side turning vertices.
    """
    cset = set(links)
    entries = frozenset(geom.pred[c] for c in cset if geom.pred[c] not in cset)
    exits = frozenset(c for c in cset if geom.succ[c] not in cset)
    v_plus = frozenset(geom.head(e) for e in entries if geom.conf[e] in entries)
    v_minus = frozenset(geom.head(x) for x in exits if geom.conf[x] in exits)
    return entries, exits, v_plus, v_minus


@dataclass(frozen=True)
class ConflictCycle:
    """A validated conflict cycle in canonical orientation.

    ``links`` is the lexicographically smallest rotation over both traversal
    orders; ``dirs[i]`` is the road-relative traversal direction of
    ``links[i]``. ``segments`` lists the maximal same-road runs in traversal
    order starting with the run containing ``links[0]``.
    """

    links: tuple[int, ...]
    dirs: tuple[int, ...]
    segments: tuple[tuple[int, ...], ...]
    entries: frozenset[int]
    exits: frozenset[int]
    entry_vertices: frozenset[tuple[int, int]]
    exit_vertices: frozenset[tuple[int, int]]

    def __len__(self) -> int:
        return len(self.links)

    def sum_queues(self, w: Sequence[int]) -> int:
        return sum(w[e] for e in self.links)

    def direction_of(self, e: int) -> int:
        return self.dirs[self.links.index(e)]


def _canonical(links: list[int], dirs: list[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    l = len(links)
    rev_links = [links[0]] + links[:0:-1]
    rev_dirs = [-dirs[0]] + [-d for d in dirs[:0:-1]]
    best: tuple | None = None
    for cl, cd in ((links, dirs), (rev_links, rev_dirs)):
        for r in range(l):
            rl = tuple(cl[r:] + cl[:r])
            rd = tuple(cd[r:] + cd[:r])
            key = (rl, 0 if rd[0] == FORWARD else 1, rd)
            if best is None or key < best:
                best = key
    assert best is not None
    return best[0], best[2]


def _segments(geom: TorusGeometry, links: tuple[int, ...], dirs: tuple[int, ...]) -> tuple[tuple[int, ...], ...]:
    l = len(links)
    turns = [
        i
        for i in range(l)
        if geom.orientation(links[i]) is not geom.orientation(links[(i + 1) % l])
    ]
    if not turns:
        return (links,)
    runs: list[tuple[int, ...]] = []
    starts = [(i + 1) % l for i in turns]
    starts.sort()
    for idx, start in enumerate(starts):
        end = starts[(idx + 1) % len(starts)]
        if start < end:
            runs.append(links[start:end])
        else:
            runs.append(links[start:] + links[:end])
    # Rotate the run list so the run containing links[0] comes first.
    first = next(i for i, run in enumerate(runs) if links[0] in run)
    runs = runs[first:] + runs[:first]
    return tuple(runs)


def make_cycle(geom: TorusGeometry, seq: Sequence[int]) -> ConflictCycle:
    """Validate a closed link sequence and build its canonical cycle value.

    Raises ValueError when the sequence is not a conflict cycle.
    """
    links = list(seq)
    if len(links) > 1 and links[0] == links[-1]:
        links = links[:-1]
    dirs = _cycle_dirs(geom, links)
    if dirs is None:
        raise ValueError(f"not a conflict cycle: {links}")
    clinks, cdirs = _canonical(links, dirs)
    entries, exits, v_plus, v_minus = classify_boundary(geom, clinks)
    if len(v_plus) != len(v_minus):
        raise InternalInvariantViolation(
            f"entry/exit vertex imbalance on cycle {clinks}: {len(v_plus)} != {len(v_minus)}"
        )
    return ConflictCycle(
        links=clinks,
        dirs=cdirs,
        segments=_segments(geom, clinks, cdirs),
        entries=entries,
        exits=exits,
        entry_vertices=v_plus,
        exit_vertices=v_minus,
    )


def ring_cycle(geom: TorusGeometry, orientation: Orientation, k: int) -> ConflictCycle:
    """The full road ring as a conflict cycle (links in flow order)."""
    start = geom.ring_links(orientation, k)[0]
    seq = [start]
    cur = geom.succ[start]
    while cur != start:
        seq.append(cur)
        cur = geom.succ[cur]
    return make_cycle(geom, seq)


def enumerate_cycles(
    geom: TorusGeometry, max_len: int | None = None, cap: int = 10**6
) -> list[ConflictCycle]:
    """All conflict cycles of length <= max_len (default 4n), exhaustively.

    Exhaustive for n <= 4 under the default bound, since no cycle can repeat
    a turning vertex and the torus has n^2 of them. Each cycle is reported
    once: the search is anchored at the cycle's smallest link in the
    orientation that traverses it forward. Both the number of search states
    and the number of found cycles count against ``cap``; crossing it raises
    BudgetExceeded. Intended for small n; the state space grows exponentially.
    """
    if max_len is None:
        max_len = 4 * geom.n
    max_len = min(max_len, geom.n * geom.n)
    found: dict[tuple, ConflictCycle] = {}
    work = 0

    for m in geom.links():
        # Path state: links so far, their dirs, used link/junction sets.
        stack: list[tuple[list[int], list[int], set[int], set[tuple[int, int]]]] = [
            ([m], [FORWARD], {m}, set())
        ]
        while stack:
            links, dirs, used, junctions = stack.pop()
            work += 1
            if work > cap:
                raise BudgetExceeded(f"cycle search exceeded {cap} states")
            cur, d = links[-1], dirs[-1]
            junction = _exit_vertex(geom, cur, d)
            if junction in junctions:
                continue
            moves = (
                (geom.succ[cur], FORWARD), (geom.conf[cur], BACKWARD)
            ) if d > 0 else (
                (geom.pred[cur], BACKWARD), (geom.bconf[cur], FORWARD)
            )
            for nxt, nd in moves:
                if nxt == m:
                    if nd == FORWARD and len(links) >= 2:
                        cycle = make_cycle(geom, links)
                        found.setdefault((cycle.links, cycle.dirs), cycle)
                        if len(found) > cap:
                            raise BudgetExceeded(f"more than {cap} cycles")
                elif nxt > m and nxt not in used and len(links) < max_len:
                    stack.append(
                        (links + [nxt], dirs + [nd], used | {nxt}, junctions | {junction})
                    )
    out = sorted(found.values(), key=lambda c: (len(c.links), c.links))
    return out
