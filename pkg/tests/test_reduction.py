"""Element values, the reduced instance, and both solution mappings."""

from __future__ import annotations

import random

import numpy as np
import pytest

from gmk.core import evaluate_objective, MultistageSolution
from gmk.errors import BudgetExceededError, ContractViolationError, InputError
from gmk.generators import GenParams, gen_random
from gmk.intervals import IntervalElement, element_value
from gmk.mkcp import solve_mkcp_exact
from gmk.oracle import brute_force_gmk
from gmk.reduction import (
    ReducedElement,
    ReducedSolution,
    element_fixed_value,
    lift_solution,
    lower_solution,
    reduce_modular,
    reduce_submodular,
    verify_reduced_solution,
    _bit_columns,
    _schedule_value_array,
)

from gmk.core import McpStage
from util import (
    build_instance,
    dense_table,
    random_feasible_solution,
    single_bin_stage,
    sweep_instances,
    two_stage_single_item,
)


def test_fixed_value_empty_schedule_collects_gain_minus():
    items = ["i"]
    stages = [single_bin_stage(items, {"i": 1}, 1, {"i": 9}) for _ in range(3)]
    inst = build_instance(items, stages, gain_minus=dense_table(items, 2, 3, default=4))
    assert element_fixed_value(inst, "i", ()) == 8


def test_fixed_value_full_schedule_equals_interval_value():
    rng = random.Random(2)
    for seed in range(20):
        inst = gen_random(GenParams(items=3, horizon=4, cost_range=(0, 3)), seed)
        item = inst.items[rng.randrange(3)]
        full = range(1, inst.horizon + 1)
        assert element_fixed_value(inst, item, full) == element_value(
            inst, IntervalElement(item, 1, inst.horizon)
        )


def test_fixed_value_formula_walk():
    items = ["i"]
    stages = [single_bin_stage(items, {"i": 1}, 1, {"i": 5}) for _ in range(3)]
    inst = build_instance(
        items,
        stages,
        gain_plus=dense_table(items, 2, 3, default=1),
        gain_minus=dense_table(items, 2, 3, default=1),
        cost_plus=dense_table(items, 1, 3, default=2),
        cost_minus=dense_table(items, 1, 3, default=2),
    )
    assert element_fixed_value(inst, "i", (1, 3)) == 10 - 4 - 4


def test_vectorized_schedule_values_match_scalar():
    for seed in range(10):
        inst = gen_random(GenParams(items=2, horizon=5, cost_range=(0, 4)), seed)
        bits = _bit_columns(inst.horizon)
        for item in inst.items:
            arr = _schedule_value_array(inst, item, bits)
            for mask in range(1 << inst.horizon):
                assert arr[mask] == element_fixed_value(inst, item, mask)


def test_reduce_counts_and_partition():
    items = ["a", "b"]
    stages = [single_bin_stage(items, {"a": 1, "b": 1}, 2, {"a": 1, "b": 1})] * 2
    inst = build_instance(items, stages)
    reduced = reduce_modular(inst)
    assert len(reduced.elements) == 8  # zero costs, nothing dropped
    assert len(reduced.constraints) == 2
    assert set(reduced.groups) == {"a", "b"}
    assert all(len(g) == 4 for g in reduced.groups.values())


def test_reduce_drops_negative_values_but_keeps_empty():
    items = ["a"]
    stages = [single_bin_stage(items, {"a": 1}, 1, {"a": 1}) for _ in range(2)]
    inst = build_instance(
        items,
        stages,
        cost_plus=dense_table(items, 1, 2, default=5),
        cost_minus=dense_table(items, 1, 2, default=5),
    )
    reduced = reduce_modular(inst)
    masks = {e.mask for e in reduced.elements}
    assert 0 in masks
    assert 0b01 not in masks  # 1 - 10 < 0
    assert reduced.values[ReducedElement("a", 0)] == 0


def test_weight_rule_audit():
    for seed in range(5):
        inst = gen_random(GenParams(items=3, horizon=3, dimension=2, bins_per_mkc=2), seed)
        reduced = reduce_modular(inst)
        for rc in reduced.constraints:
            for e in reduced.elements:
                expected = 0
                if not rc.padding and e.active_at(rc.stage):
                    expected = inst.stage(rc.stage).mkcs[rc.index - 1].weights[e.item]
                assert rc.weight_of(e) == expected


def test_padding_constraints_take_everything_at_zero_weight():
    items = ["a", "b"]
    mkc = {"a": 1, "b": 2}
    wide = single_bin_stage(items, mkc, 3, {"a": 1, "b": 1})
    two_mkcs = McpStage(mkcs=wide.mkcs * 2, profit=dict(wide.profit))
    inst = build_instance(items, [wide, two_mkcs])
    reduced = reduce_modular(inst)
    pads = [rc for rc in reduced.constraints if rc.padding]
    assert [(rc.stage, rc.index) for rc in pads] == [(1, 2)]
    for rc in pads:
        assert rc.capacities == {"pad": 0}
        assert all(rc.weight_of(e) == 0 for e in reduced.elements)


def test_horizon_cap_refusal():
    inst = gen_random(GenParams(items=1, horizon=4), 0)
    with pytest.raises(BudgetExceededError):
        reduce_modular(inst, horizon_cap=3)


def test_lower_empty_solution_collects_gain_minus_mass():
    inst = gen_random(GenParams(items=3, horizon=3, cost_range=(0, 2)), 4)
    reduced = reduce_modular(inst)
    empty = MultistageSolution.from_raw(
        [set()] * 3,
        [
            [{b: set() for b in mkc.bins} for mkc in inst.stage(t).mkcs]
            for t in range(1, 4)
        ],
    )
    rsol = lower_solution(inst, empty, reduced)
    assert rsol.chosen == frozenset(ReducedElement(i, 0) for i in inst.items)
    mass = sum(inst.gain_minus[i, t] for i in inst.items for t in range(2, 4))
    assert reduced.value_of(rsol.chosen) == mass == evaluate_objective(inst, empty.sets)


def test_lower_value_preservation_on_spec_example():
    inst = two_stage_single_item()
    sol = MultistageSolution.from_raw([{"i"}, {"i"}], [[{"b": {"i"}}], [{"b": {"i"}}]])
    reduced = reduce_modular(inst)
    rsol = lower_solution(inst, sol, reduced)
    assert reduced.value_of(rsol.chosen) == 10


def test_lower_value_preservation_random():
    rng = random.Random(6)
    checked = 0
    for seed in range(90):
        inst = gen_random(GenParams(items=3, horizon=3, dimension=2, cost_range=(0, 2)), seed)
        reduced = reduce_modular(inst)
        for _ in range(10):
            sol = random_feasible_solution(rng, inst)
            rsol = lower_solution(inst, sol, reduced)
            if rsol.substituted_items:
                assert reduced.value_of(rsol.chosen) > evaluate_objective(inst, sol.sets)
                continue
            assert reduced.value_of(rsol.chosen) == evaluate_objective(inst, sol.sets)
            assert not verify_reduced_solution(reduced, rsol)
            checked += 1
    assert checked >= 500


def test_lower_substitutes_dropped_schedules():
    items = ["a"]
    stages = [single_bin_stage(items, {"a": 1}, 1, {"a": 1}) for _ in range(2)]
    inst = build_instance(
        items,
        stages,
        cost_plus=dense_table(items, 1, 2, default=5),
        cost_minus=dense_table(items, 1, 2, default=5),
        gain_minus=dense_table(items, 2, 2, default=1),
    )
    reduced = reduce_modular(inst)
    sol = MultistageSolution.from_raw([{"a"}, set()], [[{"b": {"a"}}], [{"b": set()}]])
    rsol = lower_solution(inst, sol, reduced)
    assert rsol.substituted_items == ("a",)
    assert rsol.chosen == frozenset({ReducedElement("a", 0)})
    assert reduced.value_of(rsol.chosen) > evaluate_objective(inst, sol.sets)


def test_lower_rejects_infeasible_solution():
    inst = two_stage_single_item()
    bad = MultistageSolution.from_raw([{"i"}, set()], [[{"b": set()}], [{"b": set()}]])
    with pytest.raises(InputError):
        lower_solution(inst, bad)


def test_lift_empty_schedule_only():
    inst = gen_random(GenParams(items=1, horizon=3, cost_range=(0, 1)), 8)
    reduced = reduce_modular(inst)
    chosen = frozenset({ReducedElement(inst.items[0], 0)})
    assignments = {}
    for rc in reduced.constraints:
        bins = {b: frozenset() for b in rc.bins}
        bins[min(rc.bins)] = chosen
        assignments[(rc.stage, rc.index)] = bins
    sol = lift_solution(inst, ReducedSolution(chosen=chosen, assignments=assignments), reduced)
    assert all(not s for s in sol.sets)
    mass = sum(inst.gain_minus[inst.items[0], t] for t in range(2, 4))
    assert evaluate_objective(inst, sol.sets) == mass


def test_lift_lower_round_trip():
    rng = random.Random(14)
    for seed in range(30):
        inst = gen_random(GenParams(items=3, horizon=3, dimension=2, cost_range=(0, 2)), seed)
        reduced = reduce_modular(inst)
        for _ in range(5):
            sol = random_feasible_solution(rng, inst)
            rsol = lower_solution(inst, sol, reduced)
            if rsol.substituted_items:
                continue
            lifted = lift_solution(inst, rsol, reduced)
            assert lifted.sets == sol.sets
            assert evaluate_objective(inst, lifted.sets) == evaluate_objective(inst, sol.sets)
            again = lower_solution(inst, lifted, reduced)
            assert again.chosen == rsol.chosen


def test_lift_rejects_infeasible_reduced_solution():
    inst = two_stage_single_item()
    reduced = reduce_modular(inst)
    both = frozenset({ReducedElement("i", 0), ReducedElement("i", 3)})
    assignments = {
        (rc.stage, rc.index): {b: both if b == min(rc.bins) else frozenset() for b in rc.bins}
        for rc in reduced.constraints
    }
    with pytest.raises(InputError):
        lift_solution(inst, ReducedSolution(chosen=both, assignments=assignments), reduced)


def test_verifier_catches_violations():
    inst = two_stage_single_item()
    reduced = reduce_modular(inst)
    chosen = frozenset({ReducedElement("i", 3)})
    good = {
        (rc.stage, rc.index): {min(rc.bins): chosen, **{b: frozenset() for b in rc.bins if b != min(rc.bins)}}
        for rc in reduced.constraints
    }
    assert not verify_reduced_solution(reduced, ReducedSolution(chosen=chosen, assignments=good))

    missing = dict(good)
    missing.pop((1, 1))
    out = verify_reduced_solution(reduced, ReducedSolution(chosen=chosen, assignments=missing))
    assert any("missing assignment" in v for v in out)

    uncovered = {key: {b: frozenset() for b in bins} for key, bins in good.items()}
    out = verify_reduced_solution(reduced, ReducedSolution(chosen=chosen, assignments=uncovered))
    assert any("does not cover" in v for v in out)

    ghost = frozenset({ReducedElement("i", 3), ReducedElement("zz", 0)})
    out = verify_reduced_solution(reduced, ReducedSolution(chosen=ghost, assignments=good))
    assert any("not part of the reduced instance" in v for v in out)


def test_matroid_violation_detected():
    inst = two_stage_single_item()
    reduced = reduce_modular(inst)
    pair = frozenset({ReducedElement("i", 1), ReducedElement("i", 2)})
    assignments = {
        (rc.stage, rc.index): {min(rc.bins): pair, **{b: frozenset() for b in rc.bins if b != min(rc.bins)}}
        for rc in reduced.constraints
    }
    out = verify_reduced_solution(reduced, ReducedSolution(chosen=pair, assignments=assignments))
    assert any("matroid violation" in v for v in out)


def test_optimum_preserved_small_sweep():
    """Reduced optimum equals the multistage optimum on a shape sweep."""
    count = 0
    for inst in sweep_instances(fillings=1):
        reduced = reduce_modular(inst)
        rsol = solve_mkcp_exact(reduced)
        opt = evaluate_objective(inst, brute_force_gmk(inst).sets)
        assert reduced.value_of(rsol.chosen) == opt
        lifted = lift_solution(inst, rsol, reduced)
        assert evaluate_objective(inst, lifted.sets) == opt
        count += 1
    assert count == 36


def test_submodular_reduction_keeps_everything():
    inst = gen_random(GenParams(items=2, horizon=3, variant="submodular"), 5)
    reduced = reduce_submodular(inst)
    assert len(reduced.elements) == 2 * 8
    assert reduced.values is None and reduced.objective is not None
