"""Single-round optimizer: optimality, certificates, pins, regressions."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torusq.errors import NotSaturated
from torusq.oracle import brute_force_optimum, saturated_optimum
from torusq.rng import SplitMix64
from torusq.saturated import (
    cycle_average,
    extract_phi_cycle,
    minimize_saturated,
    optimize_single_round,
)
from torusq.torus import Orientation, TorusGeometry, step, validate_shifts

# Counterexample instances found by randomized search against the oracles,
# frozen verbatim. The first two sit in the regime where the half-round
# shift box binds before any conflict cycle does.
W_PIN_N4 = [7, 5, 4, 6, 6, 5, 4, 5, 9, 4, 5, 6, 7, 11, 10, 4,
            4, 7, 4, 5, 4, 5, 8, 7, 8, 4, 6, 6, 4, 7, 9, 4]
W_OFFROOT_N2 = [8, 4, 7, 4, 6, 6, 9, 9]
W_RESCUE_A = [6, 9, 9, 4, 6, 8, 5, 4]
W_RESCUE_B = [8, 8, 11, 7, 11, 9, 8, 6]


def saturated_instance(n, psi, seed, spread=5):
    geom = TorusGeometry(n)
    rng = SplitMix64(seed)
    w = [rng.randint(psi, psi + spread) for _ in geom.links()]
    return geom, w


def check_solution(geom, psi, w, sol):
    assert step(geom, psi, w, sol.shifts) == sol.queues
    assert max(sol.queues) == sol.phi
    assert sol.initial_max == max(w)
    validate_shifts(geom, psi, sol.shifts)
    assert sol.bound <= sol.phi
    if sol.pinned:
        assert sol.pinned <= sol.covered | sol.pinned
    else:
        assert sol.phi == sol.bound
    if sol.binding is not None:
        assert cycle_average(w, sol.binding) == sol.bound
    # every link left at the top is explained by a cycle averaging the
    # top or by an explicit pin
    explained = set(sol.pinned)
    for cyc in sol.cycles:
        if cycle_average(w, cyc) == sol.phi:
            explained.update(cyc.links)
    for e in geom.links():
        if sol.queues[e] == sol.phi:
            assert e in explained, f"link {e} at {sol.phi} unexplained"
    for cyc in sol.cycles:
        # cycle totals are conserved by every shift operation, and no
        # total can exceed the final ceiling
        assert cyc.sum_queues(w) == cyc.sum_queues(sol.queues)
        assert cyc.sum_queues(sol.queues) <= len(cyc) * sol.phi


class TestOptimality:
    def test_uniform_is_already_optimal(self):
        geom = TorusGeometry(3)
        w = [6] * geom.num_links
        sol = minimize_saturated(geom, 4, w)
        assert sol.phi == 6
        assert sol.shifts == [0] * geom.num_links
        assert sol.covered == frozenset(geom.links())
        check_solution(geom, 4, w, sol)

    def test_single_heavy_link(self):
        geom = TorusGeometry(2)
        w = [5, 5, 5, 7, 5, 5, 5, 5]
        sol = minimize_saturated(geom, 4, w)
        assert sol.phi == 6
        check_solution(geom, 4, w, sol)

    def test_matches_exhaustive_n2(self):
        geom = TorusGeometry(2)
        for seed in range(40):
            rng = SplitMix64(seed)
            psi = 4 if rng.randint(0, 1) else 6
            w = [rng.randint(psi, psi + 5) for _ in geom.links()]
            sol = minimize_saturated(geom, psi, w)
            phi_star, _ = brute_force_optimum(geom, psi, w)
            assert sol.phi == phi_star, (seed, w)
            check_solution(geom, psi, w, sol)

    def test_matches_reference_n3_to_n5(self):
        for seed in range(30):
            rng = SplitMix64(1000 + seed)
            n = rng.randint(3, 5)
            psi = (4, 6, 8)[rng.randint(0, 2)]
            geom, w = saturated_instance(n, psi, 2000 + seed)
            sol = minimize_saturated(geom, psi, w)
            phi_star, _ = saturated_optimum(geom, psi, w)
            assert sol.phi == phi_star, (seed, n, psi, w)
            check_solution(geom, psi, w, sol)

    def test_never_worse_than_start(self):
        geom, w = saturated_instance(4, 6, 77)
        sol = minimize_saturated(geom, 6, w)
        assert sol.phi <= max(w)


class TestTightSlack:
    # Spread close to twice the round length: the shift box, not a jammed
    # cycle, is what stops flooding on these.

    def test_pin_above_cycle_bound(self):
        geom = TorusGeometry(4)
        sol = minimize_saturated(geom, 4, W_PIN_N4)
        assert sol.phi == 9  # exhaustively verified optimum
        assert sol.bound == 8  # best cycle average sits below it
        assert sol.pinned
        check_solution(geom, 4, W_PIN_N4, sol)

    def test_blocking_cycle_misses_the_root(self):
        # The jammed cycles avoid the link being reduced; the rescue flood
        # must let neighbors ride at the optimum to free it.
        geom = TorusGeometry(2)
        sol = minimize_saturated(geom, 4, W_OFFROOT_N2)
        assert sol.phi == 8
        assert sol.bound == 8
        assert not sol.pinned
        check_solution(geom, 4, W_OFFROOT_N2, sol)

    def test_rescue_regressions(self):
        geom = TorusGeometry(2)
        for psi, w, want in ((4, W_RESCUE_A, 8), (6, W_RESCUE_B, 10)):
            sol = minimize_saturated(geom, psi, w)
            assert sol.phi == want
            check_solution(geom, psi, w, sol)

    def test_randomized_wide_spread(self):
        for seed in range(40):
            rng = SplitMix64(134_000 + seed)
            n = rng.randint(3, 4)
            geom, w = saturated_instance(n, 4, 3000 + seed, spread=8)
            sol = minimize_saturated(geom, 4, w)
            phi_star, _ = saturated_optimum(geom, 4, w)
            assert sol.phi == phi_star, (seed, n, w)
            check_solution(geom, 4, w, sol)


class TestCertificates:
    def test_binding_cycle_attains_bound(self):
        geom, w = saturated_instance(3, 4, 9)
        sol = minimize_saturated(geom, 4, w)
        assert sol.binding in sol.cycles
        assert cycle_average(w, sol.binding) == sol.bound

    def test_extracts_overfull_ring(self):
        geom = TorusGeometry(3)
        q = [4] * geom.num_links
        ring = geom.ring_links(Orientation.HORIZONTAL, 1)
        for e in ring:
            q[e] = 7
        cyc = extract_phi_cycle(geom, q, set(ring), ring[0], 7)
        assert set(cyc.links) == set(ring)

    def test_trace_reports_work(self):
        events = []
        geom, w = saturated_instance(3, 4, 21)
        minimize_saturated(geom, 4, w, trace=events.append)
        kinds = {ev["event"] for ev in events}
        assert "flood_pop" in kinds
        assert "cycle" in kinds


class TestGates:
    def test_rejects_unsaturated(self):
        geom = TorusGeometry(2)
        w = [5, 5, 5, 3, 5, 5, 5, 5]
        with pytest.raises(NotSaturated):
            minimize_saturated(geom, 4, w)

    def test_single_round_handles_unsaturated(self):
        geom = TorusGeometry(2)
        w = [5, 5, 5, 3, 5, 5, 5, 5]
        sol = optimize_single_round(geom, 4, w)
        assert max(step(geom, 4, w, sol.shifts)) == sol.phi
        assert sol.phi <= max(w)

    def test_rejects_odd_round(self):
        geom = TorusGeometry(2)
        with pytest.raises(ValueError):
            minimize_saturated(geom, 5, [6] * geom.num_links)

    def test_rejects_wrong_length(self):
        geom = TorusGeometry(2)
        with pytest.raises(ValueError):
            minimize_saturated(geom, 4, [6] * 7)


class TestDeterminism:
    def test_repeat_runs_identical(self):
        geom, w = saturated_instance(3, 6, 11)
        a = minimize_saturated(geom, 6, w)
        b = minimize_saturated(geom, 6, w)
        assert a.shifts == b.shifts
        assert a.queues == b.queues
        assert a.cycles == b.cycles
        assert a.pinned == b.pinned


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(min_value=2, max_value=3),
    psi=st.sampled_from((4, 6)),
    data=st.data(),
)
def test_optimum_matches_reference(n, psi, data):
    geom = TorusGeometry(n)
    w = data.draw(
        st.lists(
            st.integers(min_value=psi, max_value=psi + 6),
            min_size=geom.num_links,
            max_size=geom.num_links,
        )
    )
    sol = minimize_saturated(geom, psi, w)
    phi_star, witness = saturated_optimum(geom, psi, w)
    assert sol.phi == phi_star
    assert max(step(geom, psi, w, witness)) == phi_star
    check_solution(geom, psi, w, sol)
