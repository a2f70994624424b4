"""Reduction of a multistage instance to a single-shot packing problem.

Every reduced element pairs an item with a schedule, the exact set of
stages in which the item is packed, stored as a bitmask with bit ``t-1``
for stage ``t``. Choosing at most one schedule per item is a partition
matroid constraint, kept implicit as per-item element groups. Each original
constraint (t, j) carries over with the weight rule "full weight if the
schedule contains t, zero otherwise", and stages with fewer than d
constraints are padded with a trivial zero-capacity, zero-weight constraint
so the reduced instance always has d*T of them.

The reduction blows up as ``|I| * 2**T`` by design, so a configurable
horizon cap refuses long instances.

Both directions of the solution mapping preserve the objective exactly:
``lower_solution`` mirrors assignments bin by bin, parking inactive
elements in the designated bin of each constraint, while ``lift_solution``
projects schedules back onto stages.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import AbstractSet, Iterable, Mapping

import numpy as np

from .core import (
    MODULAR,
    SUBMODULAR,
    GmkInstance,
    MultistageSolution,
    check_feasible,
    evaluate_objective,
)
from .errors import BudgetExceededError, ContractViolationError, InputError, UnsupportedVariantError
from .submodular import ExtendedStageFunction, SetFunctionOracle, extend_function

log = logging.getLogger(__name__)

DEFAULT_HORIZON_CAP = 12
PAD_BIN = "pad"


def mask_of(stages: Iterable[int] | int, horizon: int) -> int:
    """Normalize a stage collection (or a ready-made bitmask) to a bitmask."""
    if isinstance(stages, int):
        mask = stages
        if mask < 0 or mask >> horizon:
            raise InputError(f"schedule mask {mask} out of range for horizon {horizon}")
        return mask
    mask = 0
    for t in stages:
        if not 1 <= t <= horizon:
            raise InputError(f"schedule stage {t} out of range [1, {horizon}]")
        mask |= 1 << (t - 1)
    return mask


@dataclass(frozen=True, order=True)
class ReducedElement:
    """Item plus schedule bitmask; the empty schedule is a legal element."""

    item: str
    mask: int

    def active_at(self, t: int) -> bool:
        return bool((self.mask >> (t - 1)) & 1)

    def stages(self) -> tuple[int, ...]:
        out, mask, t = [], self.mask, 1
        while mask:
            if mask & 1:
                out.append(t)
            mask >>= 1
            t += 1
        return tuple(out)

    @property
    def id(self) -> str:
        return f"{self.item}@{self.mask}"


@dataclass(frozen=True)
class ReducedConstraint:
    """One of the d*T reduced MKCs.

    Real constraints mirror the bins of the original stage constraint;
    padding constraints hold a single zero-capacity bin and give every
    element weight zero.
    """

    stage: int
    index: int
    padding: bool
    bins: tuple[str, ...]
    capacities: Mapping[str, int]
    item_weights: Mapping[str, int]

    def weight_of(self, e: ReducedElement) -> int:
        if self.padding or not e.active_at(self.stage):
            return 0
        return self.item_weights[e.item]


@dataclass(frozen=True)
class ReducedObjective:
    """Submodular reduced objective: per-stage lifted oracles plus gains."""

    stage_functions: tuple[ExtendedStageFunction, ...]
    gain_values: Mapping[ReducedElement, int]

    def evaluate(self, chosen: AbstractSet[ReducedElement]) -> int:
        subset = frozenset(chosen)
        total = sum(f.evaluate(subset) for f in self.stage_functions)
        return total + sum(self.gain_values[e] for e in subset)


@dataclass(frozen=True)
class ReducedInstance:
    variant: str
    items: tuple[str, ...]
    horizon: int
    dimension: int
    elements: tuple[ReducedElement, ...]
    groups: Mapping[str, tuple[ReducedElement, ...]]
    constraints: tuple[ReducedConstraint, ...]
    values: Mapping[ReducedElement, int] | None = None
    objective: ReducedObjective | None = None

    @cached_property
    def element_set(self) -> frozenset[ReducedElement]:
        return frozenset(self.elements)

    def value_of(self, chosen: AbstractSet[ReducedElement]) -> int:
        if self.variant == MODULAR:
            assert self.values is not None
            return sum(self.values[e] for e in chosen)
        assert self.objective is not None
        return self.objective.evaluate(chosen)


@dataclass(frozen=True)
class ReducedSolution:
    """Chosen elements plus one bin assignment per reduced constraint."""

    chosen: frozenset[ReducedElement]
    assignments: Mapping[tuple[int, int], Mapping[str, frozenset[ReducedElement]]]
    substituted_items: tuple[str, ...] = ()


def element_fixed_value(inst: GmkInstance, item: str, schedule: Iterable[int] | int) -> int:
    """Fixed value of element (item, schedule) in the reduced objective.

    Profits and interior gains accrue on scheduled stages, leftover g- on
    unscheduled transitions, and a change cost pair is charged per run;
    stage 1 always pays the entry cost and stage T the exit cost when
    scheduled.
    """
    if inst.variant != MODULAR:
        raise UnsupportedVariantError("fixed element values require the modular variant")
    mask = mask_of(schedule, inst.horizon)
    value = 0
    for t in range(1, inst.horizon + 1):
        in_t = bool((mask >> (t - 1)) & 1)
        in_prev = t > 1 and bool((mask >> (t - 2)) & 1)
        in_next = t < inst.horizon and bool((mask >> t) & 1)
        if in_t:
            value += inst.item_profit(t, item)
            if in_prev:
                value += inst.gain_plus[item, t]
            else:
                value -= inst.cost_plus[item, t]
            if not in_next:
                value -= inst.cost_minus[item, t]
        elif t > 1 and not in_prev:
            value += inst.gain_minus[item, t]
    return value


def _bit_columns(horizon: int) -> np.ndarray:
    """bits[t-1, m] = 1 iff mask m contains stage t; shape (T, 2**T)."""
    masks = np.arange(1 << horizon, dtype=np.int64)
    return np.stack([(masks >> t) & 1 for t in range(horizon)])


def _schedule_value_array(inst: GmkInstance, item: str, bits: np.ndarray) -> np.ndarray:
    """Fixed values of all 2**T schedules of one item."""
    horizon = inst.horizon
    values = np.zeros(1 << horizon, dtype=np.int64)
    for t in range(1, horizon + 1):
        in_t = bits[t - 1]
        in_prev = bits[t - 2] if t > 1 else 0
        in_next = bits[t] if t < horizon else 0
        values += inst.item_profit(t, item) * in_t
        if t > 1:
            values += inst.gain_plus[item, t] * (in_t & in_prev)
            values += inst.gain_minus[item, t] * ((1 - in_t) & (1 - in_prev))
        values -= inst.cost_plus[item, t] * (in_t & (1 - in_prev))
        values -= inst.cost_minus[item, t] * (in_t & (1 - in_next))
    return values


def _schedule_gain_array(inst: GmkInstance, item: str, bits: np.ndarray) -> np.ndarray:
    """Gain-only part of the schedule values (submodular reduction)."""
    horizon = inst.horizon
    values = np.zeros(1 << horizon, dtype=np.int64)
    for t in range(2, horizon + 1):
        in_t, in_prev = bits[t - 1], bits[t - 2]
        values += inst.gain_plus[item, t] * (in_t & in_prev)
        values += inst.gain_minus[item, t] * ((1 - in_t) & (1 - in_prev))
    return values


def _reduced_constraints(inst: GmkInstance) -> tuple[ReducedConstraint, ...]:
    out: list[ReducedConstraint] = []
    d = inst.dimension
    for t, stage in enumerate(inst.stages, start=1):
        for j in range(1, d + 1):
            if j <= stage.dimension:
                mkc = stage.mkcs[j - 1]
                out.append(
                    ReducedConstraint(
                        stage=t,
                        index=j,
                        padding=False,
                        bins=tuple(mkc.bins),
                        capacities=dict(mkc.capacities),
                        item_weights=dict(mkc.weights),
                    )
                )
            else:
                out.append(
                    ReducedConstraint(
                        stage=t,
                        index=j,
                        padding=True,
                        bins=(PAD_BIN,),
                        capacities={PAD_BIN: 0},
                        item_weights={},
                    )
                )
    return tuple(out)


def _check_horizon(inst: GmkInstance, horizon_cap: int) -> None:
    if inst.horizon > horizon_cap:
        raise BudgetExceededError(
            f"reduction refused: horizon {inst.horizon} exceeds the cap {horizon_cap} "
            f"(the element set grows as |I| * 2**T; raise the cap explicitly if intended)"
        )


def reduce_modular(inst: GmkInstance, *, horizon_cap: int = DEFAULT_HORIZON_CAP) -> ReducedInstance:
    """Materialize the reduced packing instance of a modular instance.

    Candidate elements with negative fixed value are dropped; the empty
    schedule has value equal to the item's g- mass and is always retained.
    """
    if inst.variant != MODULAR:
        raise UnsupportedVariantError("reduce_modular requires the modular variant")
    _check_horizon(inst, horizon_cap)
    bits = _bit_columns(inst.horizon)
    elements: list[ReducedElement] = []
    groups: dict[str, tuple[ReducedElement, ...]] = {}
    values: dict[ReducedElement, int] = {}
    for item in inst.items:
        arr = _schedule_value_array(inst, item, bits)
        assert arr[0] >= 0, "empty schedule value is a nonnegative gain sum"
        group = []
        for mask in range(arr.shape[0]):
            if arr[mask] < 0:
                continue
            e = ReducedElement(item, mask)
            group.append(e)
            values[e] = int(arr[mask])
        groups[item] = tuple(group)
        elements.extend(group)
    return ReducedInstance(
        variant=MODULAR,
        items=inst.items,
        horizon=inst.horizon,
        dimension=inst.dimension,
        elements=tuple(elements),
        groups=groups,
        constraints=_reduced_constraints(inst),
        values=values,
    )


def reduce_submodular(inst: GmkInstance, *, horizon_cap: int = DEFAULT_HORIZON_CAP) -> ReducedInstance:
    """Materialize the reduced instance of a submodular instance.

    Same combinatorial skeleton as the modular reduction, but the objective
    stays an oracle: per-stage lifted profit functions plus modular gain
    terms. No elements are dropped.
    """
    if inst.variant != SUBMODULAR:
        raise UnsupportedVariantError("reduce_submodular requires the submodular variant")
    _check_horizon(inst, horizon_cap)
    bits = _bit_columns(inst.horizon)
    elements: list[ReducedElement] = []
    groups: dict[str, tuple[ReducedElement, ...]] = {}
    gain_values: dict[ReducedElement, int] = {}
    for item in inst.items:
        arr = _schedule_gain_array(inst, item, bits)
        group = tuple(ReducedElement(item, mask) for mask in range(arr.shape[0]))
        for e in group:
            gain_values[e] = int(arr[e.mask])
        groups[item] = group
        elements.extend(group)
    all_elements = frozenset(elements)
    stage_functions = tuple(
        extend_function(inst.stage(t).profit, t, all_elements) for t in range(1, inst.horizon + 1)
    )
    return ReducedInstance(
        variant=SUBMODULAR,
        items=inst.items,
        horizon=inst.horizon,
        dimension=inst.dimension,
        elements=tuple(elements),
        groups=groups,
        constraints=_reduced_constraints(inst),
        objective=ReducedObjective(stage_functions=stage_functions, gain_values=gain_values),
    )


def reduce_instance(inst: GmkInstance, *, horizon_cap: int = DEFAULT_HORIZON_CAP) -> ReducedInstance:
    if inst.variant == MODULAR:
        return reduce_modular(inst, horizon_cap=horizon_cap)
    return reduce_submodular(inst, horizon_cap=horizon_cap)


def verify_reduced_solution(reduced: ReducedInstance, rsol: ReducedSolution) -> tuple[str, ...]:
    """Independent check of the reduced-solution invariants.

    Deliberately separate from the solvers' own bookkeeping: matroid
    membership, element existence, exact cover per constraint, capacities.
    """
    violations: list[str] = []
    per_item: dict[str, int] = {}
    for e in rsol.chosen:
        if e not in reduced.element_set:
            violations.append(f"element {e.id} is not part of the reduced instance")
        per_item[e.item] = per_item.get(e.item, 0) + 1
    for item, count in per_item.items():
        if count > 1:
            violations.append(f"matroid violation: {count} elements chosen for item {item}")

    for rc in reduced.constraints:
        key = (rc.stage, rc.index)
        assignment = rsol.assignments.get(key)
        if assignment is None:
            violations.append(f"missing assignment for constraint (t={rc.stage}, j={rc.index})")
            continue
        covered: set[ReducedElement] = set()
        for b, assigned in assignment.items():
            if b not in rc.capacities:
                violations.append(f"unknown bin {b} at (t={rc.stage}, j={rc.index})")
                continue
            covered.update(assigned)
            load = sum(rc.weight_of(e) for e in assigned)
            if load > rc.capacities[b]:
                violations.append(
                    f"bin {b} over capacity at (t={rc.stage}, j={rc.index}): "
                    f"load {load} > {rc.capacities[b]}"
                )
        if covered != set(rsol.chosen):
            violations.append(
                f"assignment does not cover the chosen set at (t={rc.stage}, j={rc.index})"
            )
    return tuple(violations)


def lower_solution(
    inst: GmkInstance,
    sol: MultistageSolution,
    reduced: ReducedInstance | None = None,
    *,
    horizon_cap: int = DEFAULT_HORIZON_CAP,
) -> ReducedSolution:
    """Map a feasible multistage solution onto the reduced instance.

    Picks for every item the element whose schedule is its packed-stage
    set, mirrors the per-bin assignments, and parks elements inactive at a
    stage in the designated bin (the lexicographically smallest one, where
    they weigh nothing). Preserves the value exactly.

    When a schedule was dropped at reduction time (negative fixed value),
    the empty-schedule element substitutes for it; the reduced value then
    strictly exceeds the multistage value, and the affected items are
    reported on the result.
    """
    report = check_feasible(inst, sol)
    if not report.ok:
        raise InputError("solution is infeasible: " + "; ".join(report.violations))
    if reduced is None:
        reduced = reduce_instance(inst, horizon_cap=horizon_cap)

    chosen: dict[str, ReducedElement] = {}
    substituted: list[str] = []
    for item in inst.items:
        mask = 0
        for t in range(1, inst.horizon + 1):
            if item in sol.sets[t - 1]:
                mask |= 1 << (t - 1)
        e = ReducedElement(item, mask)
        if e not in reduced.element_set:
            substituted.append(item)
            e = ReducedElement(item, 0)
        chosen[item] = e
    chosen_set = frozenset(chosen.values())

    assignments: dict[tuple[int, int], dict[str, frozenset[ReducedElement]]] = {}
    for rc in reduced.constraints:
        if rc.padding:
            assignments[(rc.stage, rc.index)] = {PAD_BIN: chosen_set}
            continue
        designated = min(rc.bins)
        original = sol.assignments[rc.stage - 1][rc.index - 1]
        placed: dict[str, set[ReducedElement]] = {b: set() for b in rc.bins}
        for item, e in chosen.items():
            if e.active_at(rc.stage):
                home = next(b for b in rc.bins if item in original.get(b, frozenset()))
                placed[home].add(e)
            else:
                placed[designated].add(e)
        assignments[(rc.stage, rc.index)] = {b: frozenset(s) for b, s in placed.items()}

    result = ReducedSolution(
        chosen=chosen_set, assignments=assignments, substituted_items=tuple(substituted)
    )
    reduced_value = reduced.value_of(chosen_set)
    original_value = evaluate_objective(inst, sol.sets)
    if substituted:
        if reduced_value <= original_value:
            raise ContractViolationError(
                "substituting dropped schedules must strictly increase the value"
            )
        log.info(
            "substituted empty schedules for %s; reduced value %d exceeds %d",
            substituted,
            reduced_value,
            original_value,
        )
    elif reduced_value != original_value:
        raise ContractViolationError(
            f"lowering broke value preservation: {reduced_value} != {original_value}"
        )
    return result


def lift_solution(
    inst: GmkInstance,
    rsol: ReducedSolution,
    reduced: ReducedInstance | None = None,
    *,
    horizon_cap: int = DEFAULT_HORIZON_CAP,
) -> MultistageSolution:
    """Project a feasible reduced solution back onto the stages.

    S_t collects the items whose chosen schedule contains t, and each bin
    keeps the items of the elements it held. The result is feasible and has
    the same value; if some item has no chosen element at all, the lifted
    value may exceed the reduced one by that item's g- mass.
    """
    if reduced is None:
        reduced = reduce_instance(inst, horizon_cap=horizon_cap)
    violations = verify_reduced_solution(reduced, rsol)
    if violations:
        raise InputError("reduced solution is infeasible: " + "; ".join(violations))

    sets = tuple(
        frozenset(e.item for e in rsol.chosen if e.active_at(t))
        for t in range(1, inst.horizon + 1)
    )
    assignments = []
    for t, stage in enumerate(inst.stages, start=1):
        per_stage = []
        for j, mkc in enumerate(stage.mkcs, start=1):
            reduced_assignment = rsol.assignments[(t, j)]
            per_stage.append(
                {
                    b: frozenset(
                        e.item for e in reduced_assignment.get(b, frozenset()) if e.active_at(t)
                    )
                    for b in mkc.bins
                }
            )
        assignments.append(tuple(per_stage))
    sol = MultistageSolution(sets=sets, assignments=tuple(assignments))

    feasibility = check_feasible(inst, sol)
    if not feasibility.ok:
        raise ContractViolationError(
            "lifted solution is infeasible: " + "; ".join(feasibility.violations)
        )
    lifted_value = evaluate_objective(inst, sol.sets)
    reduced_value = reduced.value_of(rsol.chosen)
    covered_items = {e.item for e in rsol.chosen}
    if covered_items == set(inst.items):
        if lifted_value != reduced_value:
            raise ContractViolationError(
                f"lifting broke value preservation: {lifted_value} != {reduced_value}"
            )
    elif lifted_value < reduced_value:
        raise ContractViolationError(
            f"lifted value {lifted_value} below reduced value {reduced_value}"
        )
    return sol
