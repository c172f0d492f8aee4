"""Reference bounds and exhaustive solvers used to verify the optimizers.

Everything here favors being obviously correct over being fast. The
exhaustive search enumerates per-vertex shift scalars directly; the
difference-constraint solver reduces the saturated planning problem to
shortest paths, which is exact because saturated queues are linear in the
shifts. Both are independent of the flooding machinery on purpose: they
exist to catch its bugs.
"""

from __future__ import annotations

from collections.abc import Iterable

from .conflict import ConflictCycle
from .errors import BudgetExceeded, EmptyCycleSet, NotSaturated
from .torus import NetworkState, TorusGeometry, Orientation, step, validate_psi, validate_queues


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def lower_bound_saturated(w: list[int], cycles: Iterable[ConflictCycle]) -> int:
    """Largest ceiling-average queue total over the given conflict cycles.

    No shift assignment can end a round with a maximum queue below this
    value while every cycle stays saturated, since cycle totals are
    conserved and a cycle of length L holding S agents keeps some link at
    ceil(S / L) or more.
    """
    best: int | None = None
    for cyc in cycles:
        avg = _ceil_div(cyc.sum_queues(w), len(cyc))
        if best is None or avg > best:
            best = avg
    if best is None:
        raise EmptyCycleSet("need at least one conflict cycle")
    return best


def lower_bound_unsaturated(
    w: list[int],
    cycle: ConflictCycle,
    entries: Iterable[int] | None = None,
) -> int:
    """Cycle bound that also charges agents waiting on the entry links.

    Entry links can feed the cycle during the round, so the best any plan
    can do is spread the cycle's own agents plus everything poised to
    enter across the cycle's length. Defaults to the cycle's own entry
    set; pass entries explicitly to price a restricted feed.
    """
    entry_links = cycle.entries if entries is None else tuple(entries)
    total = cycle.sum_queues(w) + sum(w[e] for e in entry_links)
    return _ceil_div(total, len(cycle))


def psi_threshold_ok(n: int, k: int, psi: int) -> bool:
    """Whether rounds of length psi leave room to drain k agents per link.

    Below the threshold there are deployments (see threshold_construction)
    where every plan keeps some queue above k forever, because each road
    can hide almost a full round of agents on a single link.
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if k < 1:
        raise ValueError(f"need k >= 1, got {k}")
    validate_psi(psi)
    return psi > k - n + 1


def threshold_construction(k: int, psi: int) -> NetworkState:
    """Worst-case 2x2 deployment with k*n agents per road.

    One alternating cycle of four links carries k+1 agents each; the
    complementary link of every road carries k-1. Any plan must grant some
    link a green time above k-1 to unjam the heavy cycle, so rounds not
    longer than k-1 cannot reach the all-k optimum. Shifts start at zero.
    """
    if k < 2:
        raise ValueError(f"need k >= 2, got {k}")
    validate_psi(psi)
    geom = TorusGeometry(2)
    heavy = (0, 3, 4, 7)
    w = [k + 1 if e in heavy else k - 1 for e in geom.links()]
    return NetworkState(geom, psi, w, [0] * geom.num_links).validate()


def _vertex_shifts(geom: TorusGeometry, ts: list[int]) -> list[int]:
    # One scalar per vertex fixes both incoming links with opposite signs,
    # which is exactly the vertex-balanced shift space.
    s = [0] * geom.num_links
    for (r, c), t in zip(geom.vertices(), ts):
        h, v = geom.incoming(r, c)
        s[h] = t
        s[v] = -t
    return s


def brute_force_optimum(
    geom: TorusGeometry,
    psi: int,
    w: list[int],
    budget: int = 2_000_000,
) -> tuple[int, list[int]]:
    """Exhaustive minimum of the end-of-round maximum queue.

    Searches every per-vertex shift scalar in [-psi/2, psi/2] with
    branch-and-bound pruning on partially determined queues, then reruns
    the search to return the lexicographically smallest witness among the
    optima. Intended for tiny instances; raises BudgetExceeded when the
    scalar space alone is larger than budget.
    """
    validate_psi(psi)
    validate_queues(geom, w)
    half = psi // 2
    nv = geom.n * geom.n
    if (psi + 1) ** nv > budget:
        raise BudgetExceeded(
            f"{psi + 1}^{nv} shift assignments exceed budget {budget}")

    verts = list(geom.vertices())
    vid = {v: i for i, v in enumerate(verts)}
    # Queue of link e is determined once the scalars at head(e) and
    # head(pred(e)) are both fixed; group links by the later of the two.
    ready: list[list[int]] = [[] for _ in range(nv)]
    for e in geom.links():
        i = vid[geom.head(e)]
        j = vid[geom.head(geom.pred[e])]
        ready[max(i, j)].append(e)

    def outflow(e: int, t_head: int) -> int:
        g = half + (t_head if e < nv else -t_head)
        return min(g, w[e])

    def search(limit: int, stop_at: int | None) -> tuple[int, list[int] | None]:
        # Depth-first over vertices in row-major order, scalars ascending,
        # so the first full assignment within limit is the lex-smallest.
        best = limit
        witness: list[int] | None = None
        ts: list[int] = []

        def rec(depth: int, cur_max: int) -> bool:
            nonlocal best, witness
            if depth == nv:
                if stop_at is None:
                    if cur_max < best:
                        best, witness = cur_max, ts.copy()
                    return False
                best, witness = cur_max, ts.copy()
                return True
            for t in range(-half, half + 1):
                ts.append(t)
                m = cur_max
                for e in ready[depth]:
                    th = ts[vid[geom.head(e)]]
                    tp = ts[vid[geom.head(geom.pred[e])]]
                    val = w[e] - outflow(e, th) + outflow(geom.pred[e], tp)
                    if val > m:
                        m = val
                bound = best if stop_at is None else stop_at + 1
                if m < bound and rec(depth + 1, m):
                    return True
                ts.pop()
            return False

        rec(0, 0)
        return best, witness

    # Unsaturated queues can end above max(w) when inflow beats outflow,
    # but never by more than a full round.
    phi_star, _ = search(max(w) + psi + 1, None)
    _, ts = search(phi_star + 1, phi_star)
    assert ts is not None
    return phi_star, _vertex_shifts(geom, ts)


def saturated_optimum(
    geom: TorusGeometry,
    psi: int,
    w: list[int],
) -> tuple[int, list[int]]:
    """Exact saturated optimum via difference constraints.

    With every queue covering the round, the end-of-round queue of a link
    is linear in the two scalars at its endpoints, so "max queue <= phi"
    is a system of pairwise differences plus the +-psi/2 box. Feasibility
    is a negative-cycle check; binary search over phi and the shortest
    path distances themselves give the optimum and a witness.
    """
    validate_psi(psi)
    validate_queues(geom, w)
    for e in geom.links():
        if w[e] < psi:
            raise NotSaturated(f"link {e} holds {w[e]} < round length {psi}")
    half = psi // 2
    nv = geom.n * geom.n
    zero = nv
    vid = {v: i for i, v in enumerate(geom.vertices())}

    def solve(phi: int) -> list[int] | None:
        # Edge x -> y of weight c encodes t_y - t_x <= c.
        edges: list[tuple[int, int, int]] = []
        for i in range(nv):
            edges.append((zero, i, half))
            edges.append((i, zero, half))
        for e in geom.links():
            i = vid[geom.head(e)]
            j = vid[geom.head(geom.pred[e])]
            c = phi - w[e]
            if geom.ring(e)[0] is Orientation.HORIZONTAL:
                edges.append((i, j, c))
            else:
                edges.append((j, i, c))
        dist = [0] * (nv + 1)
        for _ in range(nv + 1):
            changed = False
            for x, y, c in edges:
                if dist[x] + c < dist[y]:
                    dist[y] = dist[x] + c
                    changed = True
            if not changed:
                return dist
        return None

    lo, hi = 0, max(w)
    while lo < hi:
        mid = (lo + hi) // 2
        if solve(mid) is None:
            lo = mid + 1
        else:
            hi = mid
    dist = solve(lo)
    assert dist is not None
    ts = [dist[i] - dist[zero] for i in range(nv)]
    return lo, _vertex_shifts(geom, ts)
