"""Oriented torus road networks and their per-round queue dynamics.

The network is an n-by-n grid with wrap-around: n horizontal rings (one per
row) and n vertical rings (one per column), each a one-way road of n directed
links. Directions alternate so neighbouring parallel roads run opposite ways:
horizontal ring i flows east when i is even and west when i is odd, vertical
ring j flows south (increasing row) when j is even and north when j is odd.

Every vertex has exactly two incoming links, one horizontal and one vertical,
so a directed link is named by its head vertex plus its orientation. Internally
links are dense integer indices: horizontal link into (r, c) is ``r*n + c``,
vertical link into (r, c) is ``n*n + r*n + c``. The whole index range flattens
as a 2n-by-n grid, which is also the wire layout of the JSON payload.

A round lasts ``psi`` time units (psi even). The light at the head of link e
is green for ``psi // 2 + s_e`` units, where the integer shift ``s_e`` must be
balanced against the crossing link at the same vertex (``s_e + s_conf = 0``)
and bounded by ``|s_e| <= psi // 2``. During one round a queue releases
``min(green, queue)`` vehicles to the next link downstream on its road.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator

from .errors import NotSaturated, SlackExceeded
from .rng import SplitMix64


class Orientation(Enum):
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"


class Direction(Enum):
    EAST = "east"
    WEST = "west"
    SOUTH = "south"
    NORTH = "north"


@dataclass(frozen=True)
class LinkRef:
    """A directed link, named by its head vertex and orientation."""

    row: int
    col: int
    orientation: Orientation

    def __str__(self) -> str:
        tag = "H" if self.orientation is Orientation.HORIZONTAL else "V"
        return f"{tag}({self.row},{self.col})"


class TorusGeometry:
    """Immutable navigation tables for an oriented n-by-n torus.

    Attributes ``succ``, ``pred``, ``conf`` and ``bconf`` are tuples indexed
    by link index:

    * ``succ[e]``  next link downstream on the same road (its tail is e's head)
    * ``pred[e]``  previous link on the same road; inverse of ``succ``
    * ``conf[e]``  the other incoming link at e's head vertex (an involution)
    * ``bconf[e]`` = ``succ[conf[pred[e]]]``, the other link leaving e's tail
      vertex region; also an involution and shares its tail vertex with e

    On n = 2 each ring has two links, so ``succ[e] == pred[e]``.
    """

    __slots__ = ("n", "num_links", "succ", "pred", "conf", "bconf")

    def __init__(self, n: int) -> None:
        if not isinstance(n, int) or n < 2:
            raise ValueError(f"torus side must be an integer >= 2, got {n!r}")
        self.n = n
        nn = n * n
        self.num_links = 2 * nn

        succ = [0] * self.num_links
        for r in range(n):
            base = r * n
            for c in range(n):
                nxt = (c + 1) % n if r % 2 == 0 else (c - 1) % n
                succ[base + c] = base + nxt
        for c in range(n):
            for r in range(n):
                nxt = (r + 1) % n if c % 2 == 0 else (r - 1) % n
                succ[nn + r * n + c] = nn + nxt * n + c

        pred = [0] * self.num_links
        for e, t in enumerate(succ):
            pred[t] = e
        conf = tuple((e + nn) % (2 * nn) for e in range(2 * nn))
        self.succ = tuple(succ)
        self.pred = tuple(pred)
        self.conf = conf
        self.bconf = tuple(self.succ[conf[pred[e]]] for e in range(2 * nn))

    # -- index <-> reference conversions -------------------------------------

    def link_index(self, link: LinkRef) -> int:
        n = self.n
        if not (0 <= link.row < n and 0 <= link.col < n):
            raise ValueError(f"link head {link} outside {n}x{n} torus")
        base = 0 if link.orientation is Orientation.HORIZONTAL else n * n
        return base + link.row * n + link.col

    def link_of(self, e: int) -> LinkRef:
        n, nn = self.n, self.n * self.n
        if not (0 <= e < 2 * nn):
            raise ValueError(f"link index {e} out of range")
        if e < nn:
            return LinkRef(e // n, e % n, Orientation.HORIZONTAL)
        e -= nn
        return LinkRef(e // n, e % n, Orientation.VERTICAL)

    # -- local queries --------------------------------------------------------

    def head(self, e: int) -> tuple[int, int]:
        """Head vertex of link e as (row, col)."""
        f = e if e < self.n * self.n else e - self.n * self.n
        return f // self.n, f % self.n

    def tail(self, e: int) -> tuple[int, int]:
        """Tail vertex of link e; equals the head of ``pred[e]``."""
        return self.head(self.pred[e])

    def orientation(self, e: int) -> Orientation:
        return Orientation.HORIZONTAL if e < self.n * self.n else Orientation.VERTICAL

    def direction(self, e: int) -> Direction:
        r, c = self.head(e)
        if e < self.n * self.n:
            return Direction.EAST if r % 2 == 0 else Direction.WEST
        return Direction.SOUTH if c % 2 == 0 else Direction.NORTH

    def ring(self, e: int) -> tuple[Orientation, int]:
        """The road that link e belongs to: row ring for horizontal links,
        column ring for vertical ones."""
        r, c = self.head(e)
        if e < self.n * self.n:
            return Orientation.HORIZONTAL, r
        return Orientation.VERTICAL, c

    def ring_links(self, orientation: Orientation, k: int) -> tuple[int, ...]:
        """All links of one road, in index order."""
        n, nn = self.n, self.n * self.n
        if not (0 <= k < n):
            raise ValueError(f"ring index {k} out of range")
        if orientation is Orientation.HORIZONTAL:
            return tuple(k * n + c for c in range(n))
        return tuple(nn + r * n + k for r in range(n))

    def incoming(self, row: int, col: int) -> tuple[int, int]:
        """The (horizontal, vertical) links entering a vertex."""
        n = self.n
        if not (0 <= row < n and 0 <= col < n):
            raise ValueError(f"vertex ({row},{col}) outside {n}x{n} torus")
        return row * n + col, n * n + row * n + col

    def links(self) -> range:
        return range(self.num_links)

    def vertices(self) -> Iterator[tuple[int, int]]:
        for r in range(self.n):
            for c in range(self.n):
                yield r, c

    def __repr__(self) -> str:
        return f"TorusGeometry(n={self.n})"


# -- round dynamics -----------------------------------------------------------


def green_time(psi: int, shift: int) -> int:
    """Green duration of a link's light within one round of length psi."""
    return psi // 2 + shift


def step(geom: TorusGeometry, psi: int, w: list[int], s: list[int]) -> list[int]:
    """Advance the queue vector by one round.

    Each link releases ``min(green, queue)`` vehicles downstream on its road,
    so every road's total queue length is conserved.
    """
    half = psi // 2
    out = [min(half + s[e], w[e]) for e in geom.links()]
    pred = geom.pred
    return [w[e] - out[e] + out[pred[e]] for e in geom.links()]


def is_saturated(psi: int, w: list[int]) -> bool:
    """True when every queue can fill any green phase of the round."""
    return all(x >= psi for x in w)


def require_saturated(psi: int, w: list[int]) -> None:
    for e, x in enumerate(w):
        if x < psi:
            raise NotSaturated(f"queue {x} on link {e} is below round length {psi}")


# -- validation ---------------------------------------------------------------


def validate_psi(psi: int) -> None:
    if not isinstance(psi, int) or psi < 2 or psi % 2 != 0:
        raise ValueError(f"round length must be an even integer >= 2, got {psi!r}")


def validate_shifts(geom: TorusGeometry, psi: int, s: list[int]) -> None:
    """Check integrality, the per-vertex balance and the slack bound."""
    if len(s) != geom.num_links:
        raise ValueError(f"expected {geom.num_links} shifts, got {len(s)}")
    half = psi // 2
    for e, x in enumerate(s):
        if not isinstance(x, int) or isinstance(x, bool):
            raise ValueError(f"shift on link {e} must be an integer, got {x!r}")
        if abs(x) > half:
            raise SlackExceeded(f"|shift| on link {e} is {abs(x)}, above {half}")
    for e in geom.links():
        c = geom.conf[e]
        if e < c and s[e] + s[c] != 0:
            raise ValueError(
                f"shifts on crossing links {e} and {c} sum to {s[e] + s[c]}, not 0"
            )


def validate_queues(geom: TorusGeometry, w: list[int]) -> None:
    if len(w) != geom.num_links:
        raise ValueError(f"expected {geom.num_links} queues, got {len(w)}")
    for e, x in enumerate(w):
        if not isinstance(x, int) or isinstance(x, bool) or x < 0:
            raise ValueError(f"queue on link {e} must be a non-negative integer, got {x!r}")


# -- network state value type ---------------------------------------------------


@dataclass
class NetworkState:
    """A torus network together with its round length, queues and shifts."""

    geom: TorusGeometry
    psi: int
    w: list[int] = field(repr=False)
    s: list[int] = field(repr=False)

    def validate(self) -> "NetworkState":
        validate_psi(self.psi)
        validate_queues(self.geom, self.w)
        validate_shifts(self.geom, self.psi, self.s)
        return self

    def copy(self) -> "NetworkState":
        return NetworkState(self.geom, self.psi, list(self.w), list(self.s))

    def stepped(self) -> "NetworkState":
        return NetworkState(self.geom, self.psi, step(self.geom, self.psi, self.w, self.s), list(self.s))

    def max_queue(self) -> int:
        return max(self.w)

    def to_payload(self) -> dict:
        n = self.geom.n
        return {
            "version": "v1",
            "n": n,
            "psi": self.psi,
            "w": [[self.w[r * n + c] for c in range(n)] for r in range(2 * n)],
            "s": [[self.s[r * n + c] for c in range(n)] for r in range(2 * n)],
        }

    @classmethod
    def from_payload(cls, payload: object) -> "NetworkState":
        """Parse and fully validate a v1 JSON payload.

        Raises ValueError with a field-level message on any defect, so the
        CLI can report malformed input precisely.
        """
        if not isinstance(payload, dict):
            raise ValueError(f"top level: expected an object, got {type(payload).__name__}")
        version = payload.get("version", "v1")
        if version != "v1":
            raise ValueError(f"version: unsupported value {version!r}")
        known = {"version", "n", "psi", "w", "s"}
        extra = sorted(set(payload) - known)
        if extra:
            raise ValueError(f"unknown keys: {', '.join(extra)}")
        for key in ("n", "psi", "w", "s"):
            if key not in payload:
                raise ValueError(f"{key}: missing")
        n = payload["n"]
        if not isinstance(n, int) or isinstance(n, bool) or n < 2:
            raise ValueError(f"n: expected an integer >= 2, got {n!r}")
        psi = payload["psi"]
        if not isinstance(psi, int) or isinstance(psi, bool) or psi < 2 or psi % 2:
            raise ValueError(f"psi: expected an even integer >= 2, got {psi!r}")

        def grid(key: str) -> list[int]:
            rows = payload[key]
            if not isinstance(rows, list) or len(rows) != 2 * n:
                raise ValueError(f"{key}: expected {2 * n} rows")
            flat: list[int] = []
            for r, row in enumerate(rows):
                if not isinstance(row, list) or len(row) != n:
                    raise ValueError(f"{key}[{r}]: expected a row of {n} integers")
                for c, x in enumerate(row):
                    if not isinstance(x, int) or isinstance(x, bool):
                        raise ValueError(f"{key}[{r}][{c}]: expected an integer, got {x!r}")
                    flat.append(x)
            return flat

        state = cls(TorusGeometry(n), psi, grid("w"), grid("s"))
        return state.validate()


# -- random instances -----------------------------------------------------------


def generate_saturated(n: int, psi: int, lo: int, hi: int, seed: int) -> NetworkState:
    """Queues drawn uniformly from [lo, hi] with all shifts zero.

    lo must be at least psi so the result is saturated.
    """
    validate_psi(psi)
    if lo < psi:
        raise NotSaturated(f"lower queue bound {lo} is below round length {psi}")
    if lo > hi:
        raise ValueError(f"empty queue range [{lo}, {hi}]")
    geom = TorusGeometry(n)
    rng = SplitMix64(seed)
    w = [rng.randint(lo, hi) for _ in geom.links()]
    return NetworkState(geom, psi, w, [0] * geom.num_links)


def generate_balanced(n: int, psi: int, k: int, seed: int) -> NetworkState:
    """Random queues whose total on every road is exactly k*n.

    Starts from the uniform vector (all queues k) and applies random
    unit moves within single roads, which preserves each road total.
    """
    validate_psi(psi)
    if k < 0:
        raise ValueError(f"mean queue k must be non-negative, got {k}")
    geom = TorusGeometry(n)
    rng = SplitMix64(seed)
    w = [k] * geom.num_links
    moves = 10 * n * n * max(k, 1)
    for _ in range(moves):
        orient = Orientation.HORIZONTAL if rng.randint(0, 1) == 0 else Orientation.VERTICAL
        ring = geom.ring_links(orient, rng.randint(0, n - 1))
        a = rng.choice(ring)
        b = rng.choice(ring)
        if a != b and w[a] > 0:
            w[a] -= 1
            w[b] += 1
    return NetworkState(geom, psi, w, [0] * geom.num_links)
