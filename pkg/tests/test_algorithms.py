import itertools
import math

import numpy as np
import pytest

from divopt import (
    COLD_START,
    ZERO_START,
    DistanceMatrix,
    Formulation,
    Instance,
    ModularQuality,
    PartitionConstraint,
    Population,
    RngStream,
    RunConfig,
    Subset,
    UniformConstraint,
    WarmStart,
    brute_force_opt,
    default_gsemo_iterations,
    diversity_phase_iterations,
    greedy_min,
    greedy_mst,
    greedy_scan_evaluations,
    greedy_sum,
    gsemo,
    gsemo_min_pipeline,
    local_search,
    make_individual,
    objective,
    quality_phase_iterations,
)
from divopt.algorithms import initial_population

from conftest import random_instance


def assert_trace_monotone(trace):
    for (e0, o0), (e1, o1) in zip(trace, trace[1:]):
        assert e1 >= e0
        assert o1 >= o0 - 1e-12


class TestGreedySum:
    def test_hand_trace(self, tiny_instance):
        res = greedy_sum(tiny_instance)
        assert res.best.members().tolist() == [0, 2]
        assert res.objective == pytest.approx(1.8)
        assert res.evaluations == 3 + 2

    def test_zero_tradeoff_reduces_to_quality_greedy(self):
        inst = random_instance(1, 10, 4, lam=0.0)
        res = greedy_sum(inst)
        top = np.argsort(-inst.quality.weights)[:4]
        assert set(res.best.members().tolist()) == set(top.tolist())

    def test_k_equals_n_selects_everything(self):
        inst = random_instance(2, 6, 6)
        assert len(greedy_sum(inst).best) == 6

    def test_evaluation_accounting_closed_form(self):
        for seed, n, k in [(3, 9, 3), (4, 12, 5), (5, 7, 7)]:
            inst = random_instance(seed, n, k)
            assert greedy_sum(inst).evaluations == greedy_scan_evaluations(n, k)

    def test_trace_monotone(self):
        res = greedy_sum(random_instance(6, 12, 5))
        assert_trace_monotone(res.trace)
        assert len(res.trace) == 5

    def test_half_opt_guarantee_on_random_metric_instances(self):
        for seed in range(15):
            inst = random_instance(100 + seed, 9, 3)
            res = greedy_sum(inst)
            opt = brute_force_opt(inst).opt_value
            assert res.objective >= 0.5 * opt - 1e-9


class TestGreedyMin:
    def test_zero_tradeoff_returns_quality_chain(self):
        inst = random_instance(7, 9, 3, lam=0.0, diversity="min")
        res = greedy_min(inst)
        top = np.argsort(-inst.quality.weights)[:3]
        assert set(res.best.members().tolist()) == set(top.tolist())

    def test_zero_quality_uses_farthest_chain_from_item_zero(self):
        rng = RngStream(8).generator()
        from conftest import random_metric_values

        d = DistanceMatrix(random_metric_values(rng, 7))
        inst = Instance(7, ModularQuality(np.zeros(7)), d, 1.0, UniformConstraint(2, exact=True), "min")
        res = greedy_min(inst)
        farthest = int(np.argmax(d.values[0]))
        assert set(res.best.members().tolist()) == {0, farthest}
        assert res.objective == pytest.approx(d.values[0, farthest])

    def test_identical_distances_tie_goes_to_quality_chain(self):
        values = np.ones((6, 6)) - np.eye(6)
        inst = Instance(
            6,
            ModularQuality(np.array([0.1, 0.9, 0.2, 0.8, 0.3, 0.7])),
            DistanceMatrix(values),
            1.0,
            UniformConstraint(3, exact=True),
            "min",
        )
        res = greedy_min(inst)
        assert set(res.best.members().tolist()) == {1, 3, 5}

    def test_evaluation_accounting(self):
        inst = random_instance(9, 10, 4, diversity="min")
        assert greedy_min(inst).evaluations == 2 * greedy_scan_evaluations(10, 4) + 2


class TestGreedyMst:
    def test_first_pick_maximizes_quality_gain(self):
        inst = random_instance(10, 8, 3, diversity="mst")
        res = greedy_mst(inst)
        assert int(np.argmax(inst.quality.weights)) in res.best.members().tolist()

    def test_zero_quality_second_pick_is_farthest(self):
        rng = RngStream(11).generator()
        from conftest import random_metric_values

        d = DistanceMatrix(random_metric_values(rng, 6))
        inst = Instance(6, ModularQuality(np.zeros(6)), d, 1.0, UniformConstraint(2, exact=True), "mst")
        res = greedy_mst(inst)
        assert set(res.best.members().tolist()) == {0, int(np.argmax(d.values[0]))}

    def test_matches_independent_step_simulation(self):
        inst = random_instance(12, 6, 3, diversity="mst")
        picked = []
        for _ in range(3):
            best, best_gain = None, -math.inf
            for u in range(6):
                if u in picked:
                    continue
                gain = inst.quality.weights[u]
                if picked:
                    gain += inst.lam * min(inst.distance.values[u, v] for v in picked)
                if gain > best_gain:
                    best, best_gain = u, gain
            picked.append(best)
        assert greedy_mst(inst).best.members().tolist() == sorted(picked)

    def test_objective_reports_true_tree_weight(self):
        from divopt import mst_diversity

        inst = random_instance(13, 9, 4, diversity="mst")
        res = greedy_mst(inst)
        expected = inst.quality.value(res.best) + inst.lam * mst_diversity(res.best, inst.distance)
        assert res.objective == pytest.approx(expected)


class TestLocalSearch:
    def test_cold_start_reaches_one_swap_local_optimum(self):
        for seed in range(10):
            inst = random_instance(200 + seed, 8, 3)
            res = local_search(inst)
            cur = objective(res.best, inst)
            assert res.objective == pytest.approx(cur)
            members = res.best.members().tolist()
            for v in members:
                for u in range(8):
                    if u in members:
                        continue
                    trial = res.best.copy()
                    trial.discard(v)
                    trial.add(u)
                    assert objective(trial, inst) <= cur * (1 + 1e-12) + 1e-12

    def test_warm_start_from_greedy_never_loses(self):
        for seed in range(10):
            inst = random_instance(300 + seed, 12, 4)
            g = greedy_sum(inst)
            res = local_search(inst, WarmStart(g.best))
            assert res.objective >= g.objective - 1e-12

    def test_warm_start_at_optimum_stops_after_one_sweep(self):
        inst = random_instance(14, 8, 3)
        opt = brute_force_opt(inst)
        res = local_search(inst, WarmStart(opt.opt_subset))
        assert res.objective == pytest.approx(opt.opt_value)
        # one full sweep plus the initial evaluation, no accepted moves
        assert res.evaluations == 1 + 3 * 5

    def test_budget_respected(self):
        inst = random_instance(15, 20, 6)
        res = local_search(inst, evaluations=50)
        assert res.evaluations <= 50

    def test_two_swap_neighborhood_at_least_as_good(self):
        for seed in range(5):
            inst = random_instance(400 + seed, 9, 3)
            one = local_search(inst, max_swaps=1)
            two = local_search(inst, max_swaps=2)
            assert two.objective >= one.objective - 1e-9

    def test_partition_matroid_local_optimum(self):
        base = random_instance(16, 8, 3)
        c = PartitionConstraint(((0, 1, 2, 3), (4, 5, 6, 7)), (2, 1))
        inst = Instance(8, base.quality, base.distance, 1.0, c, "sum")
        res = local_search(inst)
        assert len(res.best) == 3
        from divopt import feasible_swaps

        cur = objective(res.best, inst)
        for v, u in feasible_swaps(res.best, c):
            trial = res.best.copy()
            trial.discard(v)
            trial.add(u)
            assert objective(trial, inst) <= cur * (1 + 1e-12) + 1e-12

    def test_epsilon_blocks_small_improvements(self):
        inst = random_instance(17, 10, 3)
        strict = local_search(inst, epsilon=0.0)
        lax = local_search(inst, epsilon=10.0)  # nothing improves by 10x
        assert lax.evaluations < strict.evaluations or lax.objective <= strict.objective

    def test_infeasible_warm_start_rejected(self):
        from divopt import InstanceError

        inst = random_instance(18, 6, 2)
        with pytest.raises(InstanceError):
            local_search(inst, WarmStart(Subset.from_items(6, [0, 1, 2])))


class TestPopulation:
    def test_update_keeps_incomparable_only(self):
        inst = random_instance(19, 6, 3)
        pop = Population()
        rng = np.random.default_rng(4)
        for _ in range(300):
            s = Subset.from_bits(rng.random(6) < 0.4)
            if len(s) <= 3:
                pop.update(make_individual(Formulation.SCALED_CARDINALITY_SUM, s, inst))
            pop.check_invariants(Formulation.SCALED_CARDINALITY_SUM, inst)
        assert 1 <= len(pop) <= 4

    def test_clone_replaces_twin(self):
        inst = random_instance(20, 5, 2)
        pop = Population()
        ind = make_individual(Formulation.SCALED_CARDINALITY_SUM, Subset.from_items(5, [1]), inst)
        assert pop.update(ind)
        clone = make_individual(Formulation.SCALED_CARDINALITY_SUM, Subset.from_items(5, [1]), inst)
        assert pop.update(clone)
        assert len(pop) == 1


class TestGsemo:
    def test_single_item_ground_set(self):
        inst = Instance(
            1,
            ModularQuality(np.array([0.7])),
            DistanceMatrix(np.zeros((1, 1))),
            0.0,
            UniformConstraint(1),
            "sum",
        )
        cfg = RunConfig(rng=RngStream(0), iterations=50)
        res = gsemo(inst, Formulation.SCALED_CARDINALITY_SUM, cfg)
        assert res.best.members().tolist() == [0]
        assert res.objective == pytest.approx(0.7)

    def test_exhausts_iteration_budget(self):
        inst = random_instance(21, 8, 3)
        cfg = RunConfig(rng=RngStream(1), iterations=777)
        assert gsemo(inst, Formulation.SCALED_CARDINALITY_SUM, cfg).evaluations == 777

    def test_budget_validation(self):
        inst = random_instance(22, 8, 3)
        with pytest.raises(ValueError):
            gsemo(inst, Formulation.SCALED_CARDINALITY_SUM, RunConfig(rng=RngStream(0))).budget
        with pytest.raises(ValueError):
            gsemo(
                inst,
                Formulation.SCALED_CARDINALITY_SUM,
                RunConfig(rng=RngStream(0), iterations=5, evaluations=5),
            )

    def test_population_invariants_hold_throughout(self):
        inst = random_instance(23, 10, 3)
        cfg = RunConfig(rng=RngStream(2), iterations=2000, validate_population=True)
        gsemo(inst, Formulation.SCALED_CARDINALITY_SUM, cfg)

    def test_matroid_population_invariants(self):
        base = random_instance(24, 8, 3)
        c = PartitionConstraint(((0, 1, 2, 3), (4, 5, 6, 7)), (2, 2))
        inst = Instance(8, base.quality, base.distance, 1.0, c, "sum")
        cfg = RunConfig(rng=RngStream(3), iterations=2000, validate_population=True)
        res = gsemo(inst, Formulation.MATROID_SUM, cfg)
        assert res.feasible

    def test_trace_monotone_and_stride(self):
        inst = random_instance(25, 10, 4)
        cfg = RunConfig(rng=RngStream(4), iterations=1000, trace_stride=100)
        res = gsemo(inst, Formulation.SCALED_CARDINALITY_SUM, cfg)
        assert_trace_monotone(res.trace)
        assert [e for e, _ in res.trace] == [0, 100, 200, 300, 400, 500, 600, 700, 800, 900, 1000]

    def test_determinism_byte_for_byte(self):
        inst = random_instance(26, 12, 4)
        cfg = lambda: RunConfig(rng=RngStream(55), iterations=3000, trace_stride=50)
        a = gsemo(inst, Formulation.SCALED_CARDINALITY_SUM, cfg())
        b = gsemo(inst, Formulation.SCALED_CARDINALITY_SUM, cfg())
        assert a.best == b.best
        assert a.objective == b.objective
        assert a.trace == b.trace

    def test_visits_optimum_with_generous_budget(self):
        inst = random_instance(27, 8, 3)
        opt = brute_force_opt(inst)
        cfg = RunConfig(rng=RngStream(5), iterations=60000)
        res = gsemo(inst, Formulation.SCALED_CARDINALITY_SUM, cfg)
        assert res.objective == pytest.approx(opt.opt_value)

    def test_half_opt_at_guarantee_budget(self):
        for seed in range(10):
            inst = random_instance(500 + seed, 10, 3)
            cfg = RunConfig(rng=RngStream(seed), iterations=default_gsemo_iterations(10, 3))
            res = gsemo(inst, Formulation.SCALED_CARDINALITY_SUM, cfg)
            opt = brute_force_opt(inst).opt_value
            assert res.objective >= 0.5 * opt - 1e-9

    def test_warm_start_population_is_exactly_the_seed(self):
        inst = random_instance(28, 8, 3)
        seed = Subset.from_items(8, [1, 5])
        pop = initial_population(Formulation.SCALED_CARDINALITY_SUM, inst, WarmStart(seed))
        assert len(pop) == 1
        assert pop.members()[0].subset == seed

    def test_zero_start_population_is_empty_set(self):
        inst = random_instance(29, 8, 3)
        pop = initial_population(Formulation.SCALED_CARDINALITY_SUM, inst, ZERO_START)
        assert len(pop) == 1
        assert len(pop.members()[0].subset) == 0

    def test_stop_objective_ends_run_early(self):
        inst = random_instance(30, 10, 3)
        opt = brute_force_opt(inst).opt_value
        cfg = RunConfig(
            rng=RngStream(6),
            iterations=10**6,
            trace_stride=200,
            stop_objective=0.5 * opt,
        )
        res = gsemo(inst, Formulation.SCALED_CARDINALITY_SUM, cfg)
        assert res.objective >= 0.5 * opt
        assert res.evaluations < 10**6


class TestGsemoMinPipeline:
    def test_zero_tradeoff_returns_quality_phase_value(self):
        inst = random_instance(31, 9, 3, lam=0.0, diversity="min")
        res = gsemo_min_pipeline(inst, RngStream(7))
        best_quality = sorted(inst.quality.weights)[-3:]
        assert res.objective <= sum(best_quality) + 1e-12

    def test_default_budgets(self):
        inst = random_instance(32, 8, 3, diversity="min")
        res = gsemo_min_pipeline(inst, RngStream(8))
        assert res.evaluations == quality_phase_iterations(8, 3) + diversity_phase_iterations(8, 3)

    def test_quarter_opt_guarantee(self):
        for seed in range(10):
            inst = random_instance(600 + seed, 10, 3, diversity="min")
            res = gsemo_min_pipeline(inst, RngStream(seed))
            opt = brute_force_opt(inst).opt_value
            assert res.feasible
            assert len(res.best) == 3
            assert res.objective >= 0.25 * opt - 1e-9

    def test_trace_monotone(self):
        inst = random_instance(33, 9, 3, diversity="min")
        res = gsemo_min_pipeline(inst, RngStream(9), trace_stride=50)
        assert_trace_monotone(res.trace)
