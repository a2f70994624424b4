"""The exhaustive dynamic-programming oracle."""

from __future__ import annotations

import pytest

from gmk.core import check_feasible, evaluate_objective
from gmk.errors import BudgetExceededError
from gmk.generators import GenParams, gen_random
from gmk.oracle import brute_force_gmk

from util import build_instance, enumerate_optimum, knapsack_dp, single_bin_stage


def test_empty_instance_value_zero():
    inst = gen_random(GenParams(items=0, horizon=2), 0)
    sol = brute_force_gmk(inst)
    assert evaluate_objective(inst, sol.sets) == 0


def test_single_stage_is_classic_knapsack():
    for seed in range(15):
        inst = gen_random(
            GenParams(
                items=4, horizon=1, capacity_range=(3, 9), profit_range=(0, 6),
                cost_range=(0, 2),
            ),
            seed,
        )
        sol = brute_force_gmk(inst)
        weights = inst.stage(1).mkcs[0].weights
        capacity = inst.stage(1).mkcs[0].capacities["b1"]
        # at T=1 entry and exit costs both bite, so they fold into the profit
        folded = [
            (inst.item_profit(1, i) - inst.cost_plus[i, 1] - inst.cost_minus[i, 1], weights[i])
            for i in inst.items
        ]
        keepers = [(p, w) for p, w in folded if p > 0]
        expected = knapsack_dp([p for p, _ in keepers], [w for _, w in keepers], capacity)
        assert evaluate_objective(inst, sol.sets) == expected


def test_matches_literal_sequence_enumeration():
    for seed in range(25):
        inst = gen_random(
            GenParams(items=2, horizon=3, dimension=2, bins_per_mkc=2, cost_range=(0, 3)), seed
        )
        sol = brute_force_gmk(inst)
        best_value, _ = enumerate_optimum(inst)
        assert evaluate_objective(inst, sol.sets) == best_value
        assert check_feasible(inst, sol).ok


def test_submodular_instances_supported():
    for seed in range(8):
        inst = gen_random(GenParams(items=3, horizon=3, variant="submodular"), seed)
        sol = brute_force_gmk(inst)
        best_value, _ = enumerate_optimum(inst)
        assert evaluate_objective(inst, sol.sets) == best_value


def test_budget_refusal():
    inst = gen_random(GenParams(items=3, horizon=3), 0)
    with pytest.raises(BudgetExceededError):
        brute_force_gmk(inst, work_budget=10)


def test_respects_stage_packability():
    items = ["i"]
    # item never fits stage 2, so staying packed both stages is impossible
    stages = [
        single_bin_stage(items, {"i": 1}, 1, {"i": 9}),
        single_bin_stage(items, {"i": 5}, 1, {"i": 9}),
    ]
    inst = build_instance(items, stages)
    sol = brute_force_gmk(inst)
    assert sol.sets[1] == frozenset()
    assert evaluate_objective(inst, sol.sets) == 9


def test_witness_deterministic():
    inst = gen_random(GenParams(items=3, horizon=3, dimension=2), 9)
    a = brute_force_gmk(inst)
    b = brute_force_gmk(inst)
    assert a == b
