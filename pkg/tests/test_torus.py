"""Geometry conventions, navigation identities and round dynamics."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torusq.errors import NotSaturated, SlackExceeded
from torusq.torus import (
    Direction,
    LinkRef,
    NetworkState,
    Orientation,
    TorusGeometry,
    generate_balanced,
    generate_saturated,
    green_time,
    is_saturated,
    step,
)

H = Orientation.HORIZONTAL
V = Orientation.VERTICAL


def href(geom: TorusGeometry, r: int, c: int) -> int:
    return geom.link_index(LinkRef(r, c, H))


def vref(geom: TorusGeometry, r: int, c: int) -> int:
    return geom.link_index(LinkRef(r, c, V))


# -- direction convention -------------------------------------------------------


def test_alternating_directions() -> None:
    geom = TorusGeometry(4)
    assert geom.direction(href(geom, 0, 2)) is Direction.EAST
    assert geom.direction(href(geom, 1, 2)) is Direction.WEST
    assert geom.direction(href(geom, 3, 0)) is Direction.WEST
    assert geom.direction(vref(geom, 2, 0)) is Direction.SOUTH
    assert geom.direction(vref(geom, 2, 1)) is Direction.NORTH
    assert geom.direction(vref(geom, 0, 3)) is Direction.NORTH


def test_tail_formulas() -> None:
    geom = TorusGeometry(3)
    # Eastbound row 0: link into (0,1) comes from (0,0); wraps at column 0.
    assert geom.tail(href(geom, 0, 1)) == (0, 0)
    assert geom.tail(href(geom, 0, 0)) == (0, 2)
    # Westbound row 1: link into (1,1) comes from (1,2).
    assert geom.tail(href(geom, 1, 1)) == (1, 2)
    # Southbound column 0, northbound column 1.
    assert geom.tail(vref(geom, 1, 0)) == (0, 0)
    assert geom.tail(vref(geom, 1, 1)) == (2, 1)


def test_succ_follows_flow() -> None:
    geom = TorusGeometry(4)
    assert geom.succ[href(geom, 0, 0)] == href(geom, 0, 1)
    assert geom.succ[href(geom, 1, 0)] == href(geom, 1, 3)
    assert geom.succ[vref(geom, 0, 0)] == vref(geom, 1, 0)
    assert geom.succ[vref(geom, 0, 1)] == vref(geom, 3, 1)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_navigation_identities(n: int) -> None:
    geom = TorusGeometry(n)
    for e in geom.links():
        assert geom.pred[geom.succ[e]] == e
        assert geom.succ[geom.pred[e]] == e
        # succ stays on the same road, conf crosses orientations at the head.
        assert geom.ring(geom.succ[e]) == geom.ring(e)
        c = geom.conf[e]
        assert c != e
        assert geom.head(c) == geom.head(e)
        assert geom.orientation(c) is not geom.orientation(e)
        assert geom.conf[c] == e
        # bconf is the other link leaving e's tail vertex.
        b = geom.bconf[e]
        assert b == geom.succ[geom.conf[geom.pred[e]]]
        assert b != e
        assert geom.tail(b) == geom.tail(e)
        assert geom.orientation(b) is not geom.orientation(e)
        assert geom.bconf[b] == e


def test_two_ring_degeneracy() -> None:
    geom = TorusGeometry(2)
    for e in geom.links():
        assert geom.succ[e] == geom.pred[e]


@pytest.mark.parametrize("n", [2, 3, 5])
def test_rings_partition_links(n: int) -> None:
    geom = TorusGeometry(n)
    seen: set[int] = set()
    for orient in (H, V):
        for k in range(n):
            links = geom.ring_links(orient, k)
            assert len(links) == n
            for e in links:
                assert geom.ring(e) == (orient, k)
            seen.update(links)
    assert seen == set(geom.links())


def test_incoming_pair() -> None:
    geom = TorusGeometry(3)
    for r, c in geom.vertices():
        h, v = geom.incoming(r, c)
        assert geom.head(h) == (r, c) == geom.head(v)
        assert geom.orientation(h) is H and geom.orientation(v) is V
        assert geom.conf[h] == v


def test_link_ref_round_trip() -> None:
    geom = TorusGeometry(4)
    for e in geom.links():
        assert geom.link_index(geom.link_of(e)) == e


def test_invalid_geometry() -> None:
    with pytest.raises(ValueError):
        TorusGeometry(1)
    geom = TorusGeometry(2)
    with pytest.raises(ValueError):
        geom.link_index(LinkRef(2, 0, H))
    with pytest.raises(ValueError):
        geom.link_of(8)


# -- round dynamics -------------------------------------------------------------


def test_green_time() -> None:
    assert green_time(4, 0) == 2
    assert green_time(4, 1) == 3
    assert green_time(4, -2) == 0
    assert green_time(10, 5) == 10


def test_step_conserves_each_road() -> None:
    state = generate_saturated(4, 6, 6, 14, seed=7)
    geom = state.geom
    before = {
        (o, k): sum(state.w[e] for e in geom.ring_links(o, k))
        for o in (H, V)
        for k in range(geom.n)
    }
    w = state.w
    for _ in range(5):
        w = step(geom, state.psi, w, state.s)
    after = {
        (o, k): sum(w[e] for e in geom.ring_links(o, k))
        for o in (H, V)
        for k in range(geom.n)
    }
    assert before == after


def test_uniform_zero_shift_fixed_point() -> None:
    geom = TorusGeometry(3)
    w = [9] * geom.num_links
    assert step(geom, 4, w, [0] * geom.num_links) == w


def test_saturated_step_is_linear() -> None:
    state = generate_saturated(3, 4, 4, 9, seed=11)
    geom, psi = state.geom, state.psi
    s = [0] * geom.num_links
    # A valid balanced shift pattern: +1 on every horizontal link, -1 crossing.
    for e in geom.links():
        s[e] = 1 if geom.orientation(e) is H else -1
    got = step(geom, psi, state.w, s)
    want = [
        state.w[e] - green_time(psi, s[e]) + green_time(psi, s[geom.pred[e]])
        for e in geom.links()
    ]
    assert got == want


def test_step_starves_short_queue() -> None:
    geom = TorusGeometry(2)
    w = [0] * geom.num_links
    e = 0
    w[e] = 1
    got = step(geom, 4, w, [0] * geom.num_links)
    assert got[e] == 0
    assert got[geom.succ[e]] == 1
    assert sum(got) == 1


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 6), seed=st.integers(0, 2**32))
def test_step_conservation_property(n: int, seed: int) -> None:
    state = generate_saturated(n, 4, 4, 12, seed=seed)
    after = step(state.geom, state.psi, state.w, state.s)
    assert sum(after) == sum(state.w)
    assert all(x >= 0 for x in after)


# -- saturation -----------------------------------------------------------------


def test_is_saturated() -> None:
    assert is_saturated(4, [4, 5, 6])
    assert not is_saturated(4, [4, 3, 6])


# -- serialization ----------------------------------------------------------------


def test_payload_round_trip() -> None:
    state = generate_saturated(3, 6, 6, 20, seed=3)
    payload = state.to_payload()
    again = NetworkState.from_payload(payload)
    assert again.w == state.w
    assert again.s == state.s
    assert again.psi == state.psi
    assert again.geom.n == state.geom.n
    assert again.to_payload() == payload


def test_payload_layout() -> None:
    geom = TorusGeometry(2)
    w = list(range(8))
    state = NetworkState(geom, 2, w, [0] * 8)
    payload = state.to_payload()
    # Rows 0..n-1 hold horizontal links by head vertex, rows n..2n-1 vertical.
    assert payload["w"][0] == [w[href(geom, 0, 0)], w[href(geom, 0, 1)]]
    assert payload["w"][2] == [w[vref(geom, 0, 0)], w[vref(geom, 0, 1)]]


@pytest.mark.parametrize(
    "mutate, fragment",
    [
        (lambda p: p.update(version="v2"), "version"),
        (lambda p: p.pop("psi"), "psi"),
        (lambda p: p.update(psi=5), "psi"),
        (lambda p: p.update(n=1), "n"),
        (lambda p: p["w"].pop(), "w"),
        (lambda p: p["w"][0].__setitem__(0, -1), "queue"),
        (lambda p: p["w"][1].__setitem__(1, "x"), r"w\[1\]\[1\]"),
        (lambda p: p.update(extra=1), "extra"),
        (lambda p: p["s"][0].__setitem__(0, 1), "crossing"),
    ],
)
def test_payload_rejects_malformed(mutate, fragment) -> None:
    payload = generate_saturated(2, 4, 4, 8, seed=0).to_payload()
    mutate(payload)
    with pytest.raises(ValueError, match=fragment):
        NetworkState.from_payload(payload)


def test_payload_shift_bound() -> None:
    payload = generate_saturated(2, 4, 4, 8, seed=0).to_payload()
    payload["s"][0][0] = 3
    payload["s"][2][0] = -3
    with pytest.raises(SlackExceeded):
        NetworkState.from_payload(payload)


# -- generators -------------------------------------------------------------------


def test_generate_saturated_is_deterministic() -> None:
    a = generate_saturated(4, 6, 6, 18, seed=42)
    b = generate_saturated(4, 6, 6, 18, seed=42)
    assert a.w == b.w
    assert is_saturated(6, a.w)
    assert all(6 <= x <= 18 for x in a.w)
    assert generate_saturated(4, 6, 6, 18, seed=43).w != a.w


def test_generate_saturated_rejects_low_bound() -> None:
    with pytest.raises(NotSaturated):
        generate_saturated(3, 6, 5, 9, seed=0)


@pytest.mark.parametrize("n,k", [(2, 3), (3, 2), (4, 5)])
def test_generate_balanced_road_totals(n: int, k: int) -> None:
    state = generate_balanced(n, 4, k, seed=9)
    geom = state.geom
    for orient in (H, V):
        for idx in range(n):
            assert sum(state.w[e] for e in geom.ring_links(orient, idx)) == k * n
    assert all(x >= 0 for x in state.w)
