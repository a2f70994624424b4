"""Canonical JSON formats for instances, solutions and reduced artifacts.

Stage indices are 1-based everywhere. Gain tables are dense over
items x [2, T] and cost tables over items x [1, T]; missing entries are
rejected downstream by validation rather than silently zeroed. A top-level
``denominator`` scales decimal inputs into exact integers at parse time;
files written by this module always use denominator 1.

Negative profits, gains, costs, weights or capacities are rejected while
parsing.
"""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from typing import Any, Mapping

from .core import (
    GmkInstance,
    Mkc,
    McpStage,
    MultistageSolution,
    MODULAR,
    SUBMODULAR,
)
from .errors import InputError
from .reduction import (
    ReducedConstraint,
    ReducedElement,
    ReducedInstance,
    ReducedObjective,
    ReducedSolution,
)
from .submodular import (
    CoverageFunction,
    ModularFunction,
    SetFunctionOracle,
    SumFunction,
    extend_function,
)


def canonical_dumps(payload: Any) -> str:
    """Stable compact encoding used for hashing and byte-equality tests."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def dumps(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _scaled_int(raw: Any, denominator: int, where: str) -> int:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise InputError(f"{where}: expected a number, got {raw!r}")
    value = Fraction(raw if isinstance(raw, int) else str(raw)) * denominator
    if value.denominator != 1:
        raise InputError(f"{where}: {raw} is not integral under denominator {denominator}")
    number = int(value)
    if number < 0:
        raise InputError(f"{where}: negative values are rejected at parse time, got {raw}")
    return number


def _table_from_json(raw: Any, denominator: int, where: str) -> dict[tuple[str, int], int]:
    if not isinstance(raw, Mapping):
        raise InputError(f"{where}: expected an object keyed by item")
    table: dict[tuple[str, int], int] = {}
    for item, stages in raw.items():
        if not isinstance(stages, Mapping):
            raise InputError(f"{where}[{item}]: expected an object keyed by stage")
        for key, value in stages.items():
            try:
                t = int(key)
            except (TypeError, ValueError):
                raise InputError(f"{where}[{item}]: bad stage key {key!r}")
            table[item, t] = _scaled_int(value, denominator, f"{where}[{item}][{key}]")
    return table


def _table_to_json(table: Mapping[tuple[str, int], int]) -> dict[str, dict[str, int]]:
    out: dict[str, dict[str, int]] = {}
    for (item, t), value in table.items():
        out.setdefault(item, {})[str(t)] = value
    return out


def oracle_to_dict(oracle: SetFunctionOracle) -> dict:
    if isinstance(oracle, CoverageFunction):
        return {
            "kind": "coverage",
            "universe": dict(oracle.universe),
            "covers": {item: sorted(cover) for item, cover in oracle.covers.items()},
        }
    if isinstance(oracle, ModularFunction):
        return {"kind": "modular", "values": dict(oracle.values)}
    if isinstance(oracle, SumFunction):
        return {"kind": "sum", "parts": [oracle_to_dict(p) for p in oracle.parts]}
    raise InputError(f"oracle kind {oracle.kind!r} has no file form")


def oracle_from_dict(raw: Any, denominator: int, where: str) -> SetFunctionOracle:
    if not isinstance(raw, Mapping) or "kind" not in raw:
        raise InputError(f"{where}: expected an oracle object with a 'kind'")
    kind = raw["kind"]
    if kind == "coverage":
        universe = {
            str(u): _scaled_int(w, denominator, f"{where}.universe[{u}]")
            for u, w in raw.get("universe", {}).items()
        }
        covers = {}
        for item, cover in raw.get("covers", {}).items():
            unknown = set(cover) - set(universe)
            if unknown:
                raise InputError(f"{where}.covers[{item}]: unknown universe elements {sorted(unknown)}")
            covers[str(item)] = frozenset(str(u) for u in cover)
        return CoverageFunction(universe=universe, covers=covers)
    if kind == "modular":
        return ModularFunction(
            values={
                str(i): _scaled_int(v, denominator, f"{where}.values[{i}]")
                for i, v in raw.get("values", {}).items()
            }
        )
    if kind == "sum":
        return SumFunction(
            parts=tuple(
                oracle_from_dict(p, denominator, f"{where}.parts[{k}]")
                for k, p in enumerate(raw.get("parts", []))
            )
        )
    raise InputError(f"{where}: unknown oracle kind {kind!r}")


def instance_to_dict(inst: GmkInstance) -> dict:
    stages = []
    for stage in inst.stages:
        profit = (
            oracle_to_dict(stage.profit)
            if isinstance(stage.profit, SetFunctionOracle)
            else dict(stage.profit)
        )
        stages.append(
            {
                "mkcs": [
                    {
                        "weights": dict(mkc.weights),
                        "bins": list(mkc.bins),
                        "capacities": dict(mkc.capacities),
                    }
                    for mkc in stage.mkcs
                ],
                "profit": profit,
            }
        )
    payload = {
        "variant": inst.variant,
        "items": list(inst.items),
        "horizon": inst.horizon,
        "stages": stages,
        "gain_plus": _table_to_json(inst.gain_plus),
        "gain_minus": _table_to_json(inst.gain_minus),
        "cost_plus": _table_to_json(inst.cost_plus),
        "cost_minus": _table_to_json(inst.cost_minus),
    }
    if inst.metadata:
        payload["metadata"] = dict(inst.metadata)
    return payload


def instance_from_dict(raw: Any) -> GmkInstance:
    if not isinstance(raw, Mapping):
        raise InputError("instance file must hold a JSON object")
    for key in ("variant", "items", "horizon", "stages", "gain_plus", "gain_minus", "cost_plus", "cost_minus"):
        if key not in raw:
            raise InputError(f"instance file missing required key {key!r}")
    denominator = raw.get("denominator", 1)
    if not isinstance(denominator, int) or denominator < 1:
        raise InputError(f"denominator must be a positive integer, got {denominator!r}")
    variant = raw["variant"]
    if variant not in (MODULAR, SUBMODULAR):
        raise InputError(f"unknown variant {variant!r}")
    items = tuple(str(i) for i in raw["items"])
    horizon = raw["horizon"]
    if not isinstance(horizon, int) or horizon < 1:
        raise InputError(f"horizon must be a positive integer, got {horizon!r}")

    stages = []
    if not isinstance(raw["stages"], list):
        raise InputError("stages must be a list")
    for t, stage_raw in enumerate(raw["stages"], start=1):
        mkcs = []
        for j, mkc_raw in enumerate(stage_raw.get("mkcs", []), start=1):
            where = f"stage {t} constraint {j}"
            weights = {
                str(i): _scaled_int(w, denominator, f"{where} weight of {i}")
                for i, w in mkc_raw.get("weights", {}).items()
            }
            bins = tuple(str(b) for b in mkc_raw.get("bins", []))
            capacities = {
                str(b): _scaled_int(c, denominator, f"{where} capacity of {b}")
                for b, c in mkc_raw.get("capacities", {}).items()
            }
            mkcs.append(Mkc(weights=weights, bins=bins, capacities=capacities))
        profit_raw = stage_raw.get("profit", {})
        if variant == SUBMODULAR:
            profit: Any = oracle_from_dict(profit_raw, denominator, f"stage {t} profit")
        else:
            if not isinstance(profit_raw, Mapping) or "kind" in profit_raw:
                raise InputError(f"stage {t} profit must be a per-item table in the modular variant")
            profit = {
                str(i): _scaled_int(p, denominator, f"stage {t} profit of {i}")
                for i, p in profit_raw.items()
            }
        stages.append(McpStage(mkcs=tuple(mkcs), profit=profit))

    return GmkInstance(
        items=items,
        horizon=horizon,
        stages=tuple(stages),
        gain_plus=_table_from_json(raw["gain_plus"], denominator, "gain_plus"),
        gain_minus=_table_from_json(raw["gain_minus"], denominator, "gain_minus"),
        cost_plus=_table_from_json(raw["cost_plus"], denominator, "cost_plus"),
        cost_minus=_table_from_json(raw["cost_minus"], denominator, "cost_minus"),
        variant=variant,
        metadata=dict(raw.get("metadata", {})),
    )


def solution_to_dict(sol: MultistageSolution) -> dict:
    return {
        "sets": [sorted(s) for s in sol.sets],
        "assignments": [
            [{b: sorted(assigned) for b, assigned in a.items()} for a in per_stage]
            for per_stage in sol.assignments
        ],
    }


def solution_from_dict(raw: Any) -> MultistageSolution:
    if not isinstance(raw, Mapping) or "sets" not in raw or "assignments" not in raw:
        raise InputError("solution file must hold an object with 'sets' and 'assignments'")
    return MultistageSolution.from_raw(raw["sets"], raw["assignments"])


def _element_id(e: ReducedElement) -> str:
    return e.id


def _element_from_id(eid: str) -> ReducedElement:
    item, sep, mask = eid.rpartition("@")
    if not sep or not mask.isdigit():
        raise InputError(f"bad reduced element id {eid!r}")
    return ReducedElement(item=item, mask=int(mask))


def reduced_to_dict(reduced: ReducedInstance) -> dict:
    payload: dict[str, Any] = {
        "variant": reduced.variant,
        "items": list(reduced.items),
        "horizon": reduced.horizon,
        "dimension": reduced.dimension,
        "elements": [
            {"id": e.id, "item": e.item, "stages": list(e.stages())} for e in reduced.elements
        ],
        "partition": {item: [e.id for e in group] for item, group in reduced.groups.items()},
        "constraints": [
            {
                "stage": rc.stage,
                "index": rc.index,
                "padding": rc.padding,
                "bins": list(rc.bins),
                "capacities": dict(rc.capacities),
                "item_weights": dict(rc.item_weights),
            }
            for rc in reduced.constraints
        ],
    }
    if reduced.values is not None:
        payload["values"] = {e.id: v for e, v in reduced.values.items()}
    if reduced.objective is not None:
        payload["objective"] = {
            "stage_profits": [oracle_to_dict(f.base) for f in reduced.objective.stage_functions],
            "gain_values": {e.id: v for e, v in reduced.objective.gain_values.items()},
        }
    return payload


def reduced_from_dict(raw: Any) -> ReducedInstance:
    if not isinstance(raw, Mapping):
        raise InputError("reduced instance file must hold a JSON object")
    try:
        variant = raw["variant"]
        items = tuple(str(i) for i in raw["items"])
        horizon = int(raw["horizon"])
        dimension = int(raw["dimension"])
        element_ids = [e["id"] for e in raw["elements"]]
    except (KeyError, TypeError) as exc:
        raise InputError(f"reduced instance file malformed: {exc}")
    elements = tuple(_element_from_id(eid) for eid in element_ids)
    groups = {
        item: tuple(_element_from_id(eid) for eid in group)
        for item, group in raw.get("partition", {}).items()
    }
    constraints = tuple(
        ReducedConstraint(
            stage=rc["stage"],
            index=rc["index"],
            padding=rc["padding"],
            bins=tuple(rc["bins"]),
            capacities={str(b): int(c) for b, c in rc["capacities"].items()},
            item_weights={str(i): int(w) for i, w in rc["item_weights"].items()},
        )
        for rc in raw.get("constraints", [])
    )
    values = None
    objective = None
    if "values" in raw:
        values = {_element_from_id(eid): int(v) for eid, v in raw["values"].items()}
    if "objective" in raw:
        obj_raw = raw["objective"]
        all_elements = frozenset(elements)
        stage_functions = tuple(
            extend_function(
                oracle_from_dict(p, 1, f"objective stage {t}"), t, all_elements
            )
            for t, p in enumerate(obj_raw.get("stage_profits", []), start=1)
        )
        gain_values = {
            _element_from_id(eid): int(v) for eid, v in obj_raw.get("gain_values", {}).items()
        }
        objective = ReducedObjective(stage_functions=stage_functions, gain_values=gain_values)
    if values is None and objective is None:
        raise InputError("reduced instance file needs either 'values' or 'objective'")
    return ReducedInstance(
        variant=variant,
        items=items,
        horizon=horizon,
        dimension=dimension,
        elements=elements,
        groups=groups,
        constraints=constraints,
        values=values,
        objective=objective,
    )


def reduced_solution_to_dict(rsol: ReducedSolution) -> dict:
    payload: dict[str, Any] = {
        "chosen": sorted(e.id for e in rsol.chosen),
        "assignments": [
            {
                "stage": t,
                "index": j,
                "bins": {b: sorted(e.id for e in assigned) for b, assigned in assignment.items()},
            }
            for (t, j), assignment in sorted(rsol.assignments.items())
        ],
    }
    if rsol.substituted_items:
        payload["substituted_items"] = list(rsol.substituted_items)
    return payload


def reduced_solution_from_dict(raw: Any) -> ReducedSolution:
    if not isinstance(raw, Mapping) or "chosen" not in raw or "assignments" not in raw:
        raise InputError("reduced solution file must hold 'chosen' and 'assignments'")
    chosen = frozenset(_element_from_id(eid) for eid in raw["chosen"])
    assignments = {}
    for entry in raw["assignments"]:
        key = (int(entry["stage"]), int(entry["index"]))
        assignments[key] = {
            str(b): frozenset(_element_from_id(eid) for eid in assigned)
            for b, assigned in entry["bins"].items()
        }
    return ReducedSolution(
        chosen=chosen,
        assignments=assignments,
        substituted_items=tuple(raw.get("substituted_items", ())),
    )


def interval_set_to_list(iv) -> list[list]:
    """Debug form of an interval set: [item, start, end] triples."""
    return [[e.item, e.start, e.end] for e in iv]


def instance_hash(inst: GmkInstance) -> str:
    return hashlib.sha256(canonical_dumps(instance_to_dict(inst)).encode()).hexdigest()


def load_json(path) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except FileNotFoundError:
        raise InputError(f"no such file: {path}")
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}")


def write_json(path, payload: Any) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(dumps(payload))
