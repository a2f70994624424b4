"""JSON round trips, scaling, rejection rules, hashing."""

from __future__ import annotations

import json
import pathlib

import pytest

from gmk.core import ensure_valid, evaluate_objective, validate_instance
from gmk.errors import InputError
from gmk.generators import GenParams, gen_random
from gmk.mkcp import solve_mkcp_exact, solve_mkcp_greedy
from gmk.oracle import brute_force_gmk
from gmk.reduction import reduce_instance
from gmk.serialize import (
    canonical_dumps,
    instance_from_dict,
    instance_hash,
    instance_to_dict,
    reduced_from_dict,
    reduced_solution_from_dict,
    reduced_solution_to_dict,
    reduced_to_dict,
    solution_from_dict,
    solution_to_dict,
)

DOCS = pathlib.Path(__file__).resolve().parent.parent / "docs" / "examples"


def test_instance_round_trip_modular():
    for seed in range(8):
        inst = gen_random(GenParams(items=3, horizon=3, dimension=2, bins_per_mkc=2), seed)
        again = instance_from_dict(instance_to_dict(inst))
        assert again == inst
        assert instance_hash(again) == instance_hash(inst)


def test_instance_round_trip_submodular():
    for seed in range(5):
        inst = gen_random(GenParams(items=3, horizon=2, variant="submodular"), seed)
        again = instance_from_dict(instance_to_dict(inst))
        assert again == inst


def test_docs_micro_instances_parse_and_validate():
    for name in ("modular_micro.json", "submodular_micro.json"):
        raw = json.loads((DOCS / name).read_text())
        inst = instance_from_dict(raw)
        assert validate_instance(inst).ok
        again = instance_from_dict(instance_to_dict(inst))
        assert again == inst


def test_denominator_scaling():
    raw = json.loads((DOCS / "modular_micro.json").read_text())
    raw["denominator"] = 2
    raw["stages"][0]["profit"]["cam"] = 2.5
    inst = instance_from_dict(raw)
    assert inst.item_profit(1, "cam") == 5
    # everything else was doubled
    assert inst.item_profit(1, "log") == 4


def test_denominator_must_make_values_integral():
    raw = json.loads((DOCS / "modular_micro.json").read_text())
    raw["stages"][0]["profit"]["cam"] = 0.3
    with pytest.raises(InputError):
        instance_from_dict(raw)
    raw["denominator"] = 10
    assert instance_from_dict(raw).item_profit(1, "cam") == 3


def test_negative_values_rejected_at_parse():
    raw = json.loads((DOCS / "modular_micro.json").read_text())
    raw["stages"][0]["profit"]["cam"] = -1
    with pytest.raises(InputError, match="negative"):
        instance_from_dict(raw)
    raw = json.loads((DOCS / "modular_micro.json").read_text())
    raw["cost_plus"]["cam"]["1"] = -3
    with pytest.raises(InputError, match="negative"):
        instance_from_dict(raw)


def test_missing_keys_rejected():
    with pytest.raises(InputError):
        instance_from_dict({"variant": "modular"})
    with pytest.raises(InputError):
        instance_from_dict([1, 2, 3])


def test_solution_round_trip():
    inst = gen_random(GenParams(items=3, horizon=3, dimension=2), 2)
    sol = brute_force_gmk(inst)
    again = solution_from_dict(solution_to_dict(sol))
    assert again == sol
    assert evaluate_objective(inst, again.sets) == evaluate_objective(inst, sol.sets)


def test_reduced_round_trip_modular():
    inst = gen_random(GenParams(items=2, horizon=3, dimension=2), 4)
    reduced = reduce_instance(inst)
    again = reduced_from_dict(reduced_to_dict(reduced))
    assert again.elements == reduced.elements
    assert again.values == reduced.values
    assert again.constraints == reduced.constraints
    rsol = solve_mkcp_exact(again)
    assert reduced.value_of(rsol.chosen) == again.value_of(rsol.chosen)


def test_reduced_round_trip_submodular():
    inst = gen_random(GenParams(items=2, horizon=2, variant="submodular"), 1)
    reduced = reduce_instance(inst)
    again = reduced_from_dict(reduced_to_dict(reduced))
    assert again.elements == reduced.elements
    chosen = frozenset(list(reduced.elements)[:2])
    # one element per item: take each item's full schedule
    chosen = frozenset(reduced.groups[i][-1] for i in reduced.items)
    assert again.value_of(chosen) == reduced.value_of(chosen)


def test_reduced_solution_round_trip():
    inst = gen_random(GenParams(items=3, horizon=2, dimension=2), 6)
    reduced = reduce_instance(inst)
    rsol = solve_mkcp_greedy(reduced)
    again = reduced_solution_from_dict(reduced_solution_to_dict(rsol))
    assert again.chosen == rsol.chosen
    assert again.assignments == dict(rsol.assignments)


def test_canonical_dumps_stable():
    payload = {"b": [3, 1], "a": {"y": 1, "x": 2}}
    assert canonical_dumps(payload) == canonical_dumps(json.loads(canonical_dumps(payload)))
