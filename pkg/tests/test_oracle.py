"""Reference solvers and bounds: they must agree with each other."""

import pytest

from torusq.conflict import enumerate_cycles, make_cycle
from torusq.errors import BudgetExceeded, EmptyCycleSet, NotSaturated
from torusq.oracle import (
    brute_force_optimum,
    lower_bound_saturated,
    lower_bound_unsaturated,
    psi_threshold_ok,
    saturated_optimum,
    threshold_construction,
)
from torusq.rng import SplitMix64
from torusq.torus import TorusGeometry, step, validate_shifts


class TestCycleBounds:
    def test_uniform_average(self):
        geom = TorusGeometry(2)
        w = [6] * geom.num_links
        assert lower_bound_saturated(w, enumerate_cycles(geom)) == 6

    def test_ceiling_arithmetic(self):
        geom = TorusGeometry(3)
        ring = make_cycle(geom, [0, 1, 2])
        w = [0] * geom.num_links
        w[0], w[1], w[2] = 5, 5, 6
        assert lower_bound_saturated(w, [ring]) == 6  # ceil(16/3)

    def test_empty_set_rejected(self):
        with pytest.raises(EmptyCycleSet):
            lower_bound_saturated([1, 2, 3], [])

    def test_bound_never_exceeds_optimum(self):
        geom = TorusGeometry(2)
        cycles = enumerate_cycles(geom)
        for seed in range(25):
            rng = SplitMix64(seed)
            w = [rng.randint(4, 9) for _ in geom.links()]
            phi_star, _ = brute_force_optimum(geom, 4, w)
            assert lower_bound_saturated(w, cycles) <= phi_star

    def test_entry_charge_reduces_to_plain_bound(self):
        geom = TorusGeometry(2)
        cyc = enumerate_cycles(geom)[0]
        w = [3] * geom.num_links
        for e in cyc.entries:
            w[e] = 0
        assert lower_bound_unsaturated(w, cyc) == lower_bound_saturated(w, [cyc])

    def test_entry_charge_counts_waiting_agents(self):
        geom = TorusGeometry(2)
        cyc = next(c for c in enumerate_cycles(geom) if c.entries)
        w = [2] * geom.num_links
        plain = lower_bound_saturated(w, [cyc])
        assert lower_bound_unsaturated(w, cyc) == plain + -(-2 * len(cyc.entries) // len(cyc))


class TestThreshold:
    def test_boundary_cases(self):
        assert not psi_threshold_ok(2, 10, 8)
        assert psi_threshold_ok(2, 10, 10)
        assert psi_threshold_ok(5, 3, 2)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            psi_threshold_ok(1, 5, 4)
        with pytest.raises(ValueError):
            psi_threshold_ok(2, 0, 4)
        with pytest.raises(ValueError):
            psi_threshold_ok(2, 5, 3)

    def test_construction_shape(self):
        st_ = threshold_construction(10, 8)
        assert sorted(st_.w) == [9, 9, 9, 9, 11, 11, 11, 11]
        for orient, k in {st_.geom.ring(e) for e in st_.geom.links()}:
            assert sum(st_.w[e] for e in st_.geom.ring_links(orient, k)) == 20

    def test_construction_blocks_short_rounds(self):
        # With psi at the threshold boundary the single-round optimum stays
        # above the uniform value k.
        st_ = threshold_construction(10, 8)
        phi_star, _ = brute_force_optimum(st_.geom, 8, st_.w)
        assert phi_star > 10

    def test_construction_rejects_tiny_k(self):
        with pytest.raises(ValueError):
            threshold_construction(1, 4)


class TestExhaustive:
    def test_uniform_optimum_is_current_max(self):
        geom = TorusGeometry(2)
        w = [7] * geom.num_links
        phi_star, shifts = brute_force_optimum(geom, 4, w)
        assert phi_star == 7
        # zero shifts are among the witnesses; the returned one is the
        # lexicographically smallest, which is not the zero vector
        assert max(step(geom, 4, w, [0] * geom.num_links)) == phi_star
        assert max(step(geom, 4, w, shifts)) == phi_star

    def test_witness_achieves_the_optimum(self):
        geom = TorusGeometry(2)
        rng = SplitMix64(3)
        w = [rng.randint(4, 11) for _ in geom.links()]
        phi_star, shifts = brute_force_optimum(geom, 4, w)
        validate_shifts(geom, 4, shifts)
        assert max(step(geom, 4, w, shifts)) == phi_star

    def test_deterministic_witness(self):
        geom = TorusGeometry(2)
        w = [5, 5, 5, 7, 5, 5, 5, 5]
        assert brute_force_optimum(geom, 4, w) == brute_force_optimum(geom, 4, w)

    def test_budget_guard(self):
        geom = TorusGeometry(3)
        with pytest.raises(BudgetExceeded):
            brute_force_optimum(geom, 6, [6] * geom.num_links)

    def test_handles_unsaturated_queues(self):
        geom = TorusGeometry(2)
        w = [1, 0, 2, 7, 0, 1, 3, 0]
        phi_star, shifts = brute_force_optimum(geom, 4, w)
        assert max(step(geom, 4, w, shifts)) == phi_star


class TestDifferenceConstraints:
    def test_agrees_with_exhaustive_n2(self):
        geom = TorusGeometry(2)
        for seed in range(40):
            rng = SplitMix64(seed)
            psi = 4 if rng.randint(0, 1) else 6
            w = [rng.randint(psi, psi + 7) for _ in geom.links()]
            assert saturated_optimum(geom, psi, w)[0] == brute_force_optimum(geom, psi, w)[0]

    def test_agrees_with_exhaustive_n3(self):
        geom = TorusGeometry(3)
        rng = SplitMix64(8)
        w = [rng.randint(4, 8) for _ in geom.links()]
        assert saturated_optimum(geom, 4, w)[0] == brute_force_optimum(geom, 4, w)[0]

    def test_witness_is_valid_and_tight(self):
        geom = TorusGeometry(4)
        rng = SplitMix64(12)
        w = [rng.randint(6, 13) for _ in geom.links()]
        phi_star, shifts = saturated_optimum(geom, 6, w)
        validate_shifts(geom, 6, shifts)
        assert max(step(geom, 6, w, shifts)) == phi_star

    def test_requires_saturation(self):
        geom = TorusGeometry(2)
        with pytest.raises(NotSaturated):
            saturated_optimum(geom, 4, [5, 5, 3, 5, 5, 5, 5, 5])
