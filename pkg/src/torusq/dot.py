"""Graphviz DOT rendering of network states and their conflict graphs.

Two views: the torus itself (junction grid, one arrow per link, line
thickness scaled by queue length) and the conflict graph on links (road
edges solid, shared-head edges dashed, shared-tail edges dotted). In both
views the links of a highlighted cycle set are drawn red.

Output is deterministic: nodes and edges are emitted in index order, so
identical inputs produce byte-identical documents.
"""

from __future__ import annotations

from collections.abc import Sequence

from .conflict import ConflictCycle
from .torus import NetworkState, Orientation, TorusGeometry

_RED = "#cc0000"


def _cycle_link_set(cycles: Sequence[ConflictCycle]) -> set[int]:
    out: set[int] = set()
    for cyc in cycles:
        out.update(cyc.links)
    return out


def _link_name(geom: TorusGeometry, e: int) -> str:
    r, c = geom.head(e)
    tag = "H" if geom.orientation(e) is Orientation.HORIZONTAL else "V"
    return f"{tag}({r},{c})"


def torus_dot(
    state: NetworkState,
    cycles: Sequence[ConflictCycle] = (),
    name: str = "torus",
) -> str:
    """Junction-grid digraph with one edge per link.

    Edge thickness grows with the link's queue, the label shows the queue
    and (when nonzero) the shift, and links belonging to cycles are red.
    Node positions are pinned to the grid, so neato renders the actual
    layout; wrap-around links simply curve across.
    """
    geom = state.geom
    red = _cycle_link_set(cycles)
    qmax = max(max(state.w), 1)
    lines = [
        f"digraph {name} {{",
        '  layout=neato;',
        '  node [shape=circle, fixedsize=true, width=0.42, fontsize=10];',
        '  edge [fontsize=9];',
    ]
    for r in range(geom.n):
        for c in range(geom.n):
            lines.append(f'  v{r}_{c} [label="{r},{c}", pos="{c},{-r}!"];')
    for e in geom.links():
        tr, tc = geom.tail(e)
        hr, hc = geom.head(e)
        width = 1.0 + 2.5 * state.w[e] / qmax
        label = str(state.w[e])
        if state.s[e]:
            label += f" ({state.s[e]:+d})"
        color = _RED if e in red else "black"
        lines.append(
            f'  v{tr}_{tc} -> v{hr}_{hc} '
            f'[label="{label}", penwidth={width:.2f}, color="{color}"];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def conflict_dot(
    geom: TorusGeometry,
    cycles: Sequence[ConflictCycle] = (),
    queues: Sequence[int] | None = None,
    name: str = "conflict",
) -> str:
    """Conflict graph on links, with a highlighted cycle set.

    One node per link; edges join a link to its road successor (solid),
    to the other link entering its head (dashed), and to the other link
    leaving its tail (dotted). Nodes on highlighted cycles are red, as is
    every edge between consecutive links of one cycle.
    """
    red = _cycle_link_set(cycles)
    red_pairs: set[frozenset[int]] = set()
    for cyc in cycles:
        m = len(cyc.links)
        for i in range(m):
            red_pairs.add(frozenset((cyc.links[i], cyc.links[(i + 1) % m])))
    lines = [
        f"graph {name} {{",
        '  node [shape=box, fontsize=10];',
    ]
    for e in geom.links():
        label = f"{e}: {_link_name(geom, e)}"
        if queues is not None:
            label += f"\\nq={queues[e]}"
        style = f', color="{_RED}", fontcolor="{_RED}"' if e in red else ""
        lines.append(f'  e{e} [label="{label}"{style}];')
    seen: set[frozenset[int]] = set()
    for e in geom.links():
        for other, style in (
            (geom.succ[e], "solid"),
            (geom.conf[e], "dashed"),
            (geom.bconf[e], "dotted"),
        ):
            pair = frozenset((e, other))
            if pair in seen:
                continue
            seen.add(pair)
            color = f', color="{_RED}"' if pair in red_pairs else ""
            lines.append(f"  e{min(pair)} -- e{max(pair)} [style={style}{color}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
