"""Shift flows and the flooding procedure.

A forward flow at link e moves green time toward e: ``s_e`` grows by x and the
crossing shift ``s_conf(e)`` shrinks by x, preserving the vertex balance. A
backward flow at e does the same one link upstream (at ``pred(e)``). Flooding
composes such flows to push one link's queue excess onto its conflict-graph
neighbors, chaining further while neighbors overflow a capacity ``phi``. It
either returns a tree of links whose planned queues all equal phi, or fails,
which certifies that a conflict cycle blocks the reduction.

Throughout, ``q`` denotes the planned next-round queue of each link under the
current shifts. In saturated networks queues depend linearly on shifts
(``q_e = w_e - s_e + s_pred(e)``); the exact mode recomputes the store-and-
forward minimum instead, which is what unsaturated rounds need.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .conflict import BACKWARD, FORWARD
from .torus import TorusGeometry

Trace = Callable[[dict], None]


def forward_flow(geom: TorusGeometry, e: int, x: int, s: list[int]) -> list[int]:
    """New shift vector with x moved onto e at its head vertex."""
    out = list(s)
    out[e] += x
    out[geom.conf[e]] -= x
    return out


def backward_flow(geom: TorusGeometry, e: int, x: int, s: list[int]) -> list[int]:
    """New shift vector with x moved onto pred(e) at e's tail vertex."""
    out = list(s)
    p = geom.pred[e]
    out[p] += x
    out[geom.conf[p]] -= x
    return out


def compute_queues(geom: TorusGeometry, psi: int, w: list[int], s: list[int], exact: bool) -> list[int]:
    """Planned next-round queues under shifts s.

    The linear form is exact whenever every queue covers any green time
    (saturation); the exact form evaluates the store-and-forward minimum.
    """
    if exact:
        half = psi // 2
        out = [min(half + s[e], w[e]) for e in geom.links()]
        return [w[e] - out[e] + out[geom.pred[e]] for e in geom.links()]
    return [w[e] - s[e] + s[geom.pred[e]] for e in geom.links()]


def _apply_flow(
    geom: TorusGeometry,
    psi: int,
    w: list[int],
    s: list[int],
    q: list[int],
    p: int,
    x: int,
    exact: bool,
) -> None:
    """Forward flow of x at link p, updating shifts and planned queues.

    Exactly four planned queues can change: p and conf(p) through their own
    shifts, and their road successors through the upstream shift.
    """
    c = geom.conf[p]
    s[p] += x
    s[c] -= x
    if exact:
        half = psi // 2
        for y in (p, geom.succ[p], c, geom.succ[c]):
            py = geom.pred[y]
            q[y] = w[y] - min(half + s[y], w[y]) + min(half + s[py], w[py])
    else:
        q[p] -= x
        q[geom.succ[p]] += x
        q[c] += x
        q[geom.succ[c]] -= x


def _flood(
    geom: TorusGeometry,
    psi: int,
    w: list[int],
    s: list[int],
    q: list[int],
    root: int,
    direction: int,
    phi: int,
    exact: bool,
    trace: Trace | None = None,
    root_phi: int | None = None,
) -> tuple[bool, dict[int, int]]:
    """Stack-driven excess propagation; mutates s and q in place.

    Each popped link is set to exactly its capacity by one flow: a forward
    flow at the link itself, or a backward flow that throttles its inflow (a
    negative amount at pred, since green time granted upstream feeds the
    link). The capacity is phi everywhere except the root, which may be held
    to a stricter root_phi so the root drops while the rest of the tree only
    has to stay at the current level. The branch is fixed when a link is
    pushed: children reached through succ or bconf shed forward, children
    reached through conf or pred shed backward, which also resolves the
    n = 2 case where succ and pred coincide. Failure means a link that must
    absorb excess was already processed, or a shift left the
    [-psi/2, psi/2] band.

    On failure the caller must restore s and q from its own backup.
    """
    cap_root = phi if root_phi is None else root_phi

    def cap(x: int) -> int:
        return cap_root if x == root else phi

    parent: dict[int, int] = {root: root}
    if q[root] <= cap_root:
        return True, parent
    half = psi // 2
    stack: list[tuple[int, int]] = [(root, direction)]
    while stack:
        e, branch = stack.pop()
        x = q[e] - cap(e)
        if branch == FORWARD:
            _apply_flow(geom, psi, w, s, q, e, x, exact)
            if trace is not None:
                trace({"event": "flood_pop", "link": e, "branch": "+", "flow": x, "shift": s[e]})
            sc, cf = geom.succ[e], geom.conf[e]
            if (sc in parent and q[sc] > cap(sc)) or (cf in parent and q[cf] > cap(cf)) or s[e] > half:
                return False, parent
            if q[sc] > cap(sc):
                parent[sc] = e
                stack.append((sc, FORWARD))
            if q[cf] > cap(cf):
                parent[cf] = e
                stack.append((cf, BACKWARD))
        else:
            p = geom.pred[e]
            _apply_flow(geom, psi, w, s, q, p, -x, exact)
            if trace is not None:
                trace({"event": "flood_pop", "link": e, "branch": "-", "flow": -x, "shift": s[p]})
            bc = geom.bconf[e]
            if (p in parent and q[p] > cap(p)) or (bc in parent and q[bc] > cap(bc)) or s[p] < -half:
                return False, parent
            if q[p] > cap(p):
                parent[p] = e
                stack.append((p, BACKWARD))
            if q[bc] > cap(bc):
                parent[bc] = e
                stack.append((bc, FORWARD))
    return True, parent


@dataclass
class FloodResult:
    """Outcome of one flooding call on private copies of the input vectors.

    When ok is false the shifts and queues fields hold the untouched inputs;
    parent still reports how far propagation got before failing.
    """

    ok: bool
    root: int
    phi: int
    parent: dict[int, int]
    shifts: list[int]
    queues: list[int]


def flooding(
    geom: TorusGeometry,
    psi: int,
    w: list[int],
    s: list[int],
    root: int,
    direction: int,
    phi: int,
    exact: bool = False,
    trace: Trace | None = None,
) -> FloodResult:
    """Try to cap root's planned queue at phi, spreading excess via flows.

    Pure wrapper over the mutating engine: inputs are never modified, and a
    failed attempt returns the original shift vector so callers need no
    rollback of their own.
    """
    if phi < 0:
        raise ValueError(f"capacity must be non-negative, got {phi}")
    if direction not in (FORWARD, BACKWARD):
        raise ValueError(f"direction must be +1 or -1, got {direction!r}")
    s2 = list(s)
    q2 = compute_queues(geom, psi, w, s2, exact)
    ok, parent = _flood(geom, psi, w, s2, q2, root, direction, phi, exact, trace)
    if not ok:
        return FloodResult(False, root, phi, parent, list(s), compute_queues(geom, psi, w, s, exact))
    return FloodResult(True, root, phi, parent, s2, q2)
