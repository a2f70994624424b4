"""Data model and objective for the generalized multistage d-knapsack problem.

An instance spans ``T`` stages over a shared item set. Every stage carries
``d_t`` multiple-knapsack constraints plus a profit function, and stages are
coupled through four tables: gains ``g+`` and ``g-`` reward an item for being
packed, respectively unpacked, in two consecutive stages, while change costs
``c+`` and ``c-`` charge the start, respectively the end, of a packed run.
Nothing is packed before stage 1 or after stage ``T``.

Two variants exist. The modular variant prices items individually and admits
change costs. The submodular variant replaces every stage profit with a
monotone submodular oracle and must carry all-zero cost tables.

All numeric data are exact integers (``serialize`` scales decimal input at
parse time), so every identity in this package is testable with tolerance
zero. Instances and views are immutable after construction and safe to share
across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import AbstractSet, Mapping, Sequence

from .errors import InputError, UnsupportedVariantError
from .submodular import SetFunctionOracle

MODULAR = "modular"
SUBMODULAR = "submodular"

# Tables are dense maps keyed by (item, stage): gains over [2, T], costs
# over [1, T]. Missing entries are a validation error, never implicit zeros.
Table = Mapping[tuple[str, int], int]


def _is_amount(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool) and x >= 0


@dataclass(frozen=True)
class Mkc:
    """A multiple knapsack constraint: item weights and capacitated bins."""

    weights: Mapping[str, int]
    bins: tuple[str, ...]
    capacities: Mapping[str, int]


@dataclass(frozen=True)
class McpStage:
    """One stage: an ordered tuple of MKCs plus the stage profit.

    ``profit`` is a plain item-to-integer mapping in the modular variant and
    a ``SetFunctionOracle`` in the submodular variant.
    """

    mkcs: tuple[Mkc, ...]
    profit: Mapping[str, int] | SetFunctionOracle

    @property
    def dimension(self) -> int:
        return len(self.mkcs)


@dataclass(frozen=True)
class GmkInstance:
    """A full multistage instance.

    ``gain_plus``/``gain_minus`` are defined exactly on items x [2, T] and
    ``cost_plus``/``cost_minus`` exactly on items x [1, T].
    """

    items: tuple[str, ...]
    horizon: int
    stages: tuple[McpStage, ...]
    gain_plus: Table
    gain_minus: Table
    cost_plus: Table
    cost_minus: Table
    variant: str = MODULAR
    metadata: Mapping[str, object] = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        """Instance-level dimension bound (largest per-stage constraint count)."""
        return max((s.dimension for s in self.stages), default=1)

    def stage(self, t: int) -> McpStage:
        if not 1 <= t <= self.horizon:
            raise InputError(f"stage {t} out of range [1, {self.horizon}]")
        return self.stages[t - 1]

    def item_profit(self, t: int, item: str) -> int:
        profit = self.stage(t).profit
        if isinstance(profit, SetFunctionOracle):
            raise UnsupportedVariantError("per-item profit is undefined in the submodular variant")
        return profit[item]

    def stage_profit(self, t: int, subset: AbstractSet[str]) -> int:
        profit = self.stage(t).profit
        if isinstance(profit, SetFunctionOracle):
            return profit.evaluate(frozenset(subset))
        return sum(profit[i] for i in subset)


@dataclass(frozen=True)
class MultistageSolution:
    """Per-stage item sets plus per-stage, per-constraint bin assignments.

    ``assignments[t-1][j-1]`` maps every bin of constraint j at stage t to
    the items it holds.
    """

    sets: tuple[frozenset[str], ...]
    assignments: tuple[tuple[Mapping[str, frozenset[str]], ...], ...]

    @classmethod
    def from_raw(cls, sets, assignments) -> "MultistageSolution":
        return cls(
            sets=tuple(frozenset(s) for s in sets),
            assignments=tuple(
                tuple({b: frozenset(v) for b, v in a.items()} for a in per_stage)
                for per_stage in assignments
            ),
        )

    @property
    def horizon(self) -> int:
        return len(self.sets)


@dataclass(frozen=True)
class ExtendedRatio:
    """Nonnegative rational with a distinguished infinite value (``None``)."""

    value: Fraction | None

    @classmethod
    def infinite(cls) -> "ExtendedRatio":
        return cls(None)

    @property
    def is_infinite(self) -> bool:
        return self.value is None

    def at_most(self, bound: int | Fraction) -> bool:
        return self.value is not None and self.value <= bound

    def __str__(self) -> str:
        return "inf" if self.value is None else str(self.value)


@dataclass(frozen=True)
class ValidationReport:
    entries: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.entries


@dataclass(frozen=True)
class FeasibilityReport:
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def _check_table(entries: list[str], name: str, table: Table, items, lo: int, hi: int) -> None:
    expected = {(i, t) for i in items for t in range(lo, hi + 1)}
    for key in expected:
        if key not in table:
            entries.append(f"{name} incomplete: missing entry for item {key[0]} stage {key[1]}")
    for key, value in table.items():
        if key not in expected:
            entries.append(f"{name} has an extra entry {key}")
        elif not _is_amount(value):
            entries.append(f"{name}[{key}] = {value!r} is not a nonnegative integer")


def validate_instance(inst: GmkInstance) -> ValidationReport:
    """Collect every violated structural invariant of ``inst``.

    All failures are report entries; an empty report means the instance is
    well formed. Operations other than this one assume a valid instance.
    """
    entries: list[str] = []
    if inst.variant not in (MODULAR, SUBMODULAR):
        entries.append(f"unknown variant {inst.variant!r}")
    if inst.horizon < 1:
        entries.append(f"horizon must be at least 1, got {inst.horizon}")
    if len(inst.stages) != inst.horizon:
        entries.append(f"expected {inst.horizon} stages, got {len(inst.stages)}")

    seen: set[str] = set()
    for item in inst.items:
        if not item:
            entries.append("empty item id")
        if item in seen:
            entries.append(f"duplicate item id {item}")
        seen.add(item)

    item_set = set(inst.items)
    for t, stage in enumerate(inst.stages, start=1):
        if stage.dimension < 1:
            entries.append(f"stage {t} has no knapsack constraints")
        for j, mkc in enumerate(stage.mkcs, start=1):
            where = f"stage {t} constraint {j}"
            for item in item_set:
                if item not in mkc.weights:
                    entries.append(f"weights incomplete: {where} missing item {item}")
            for item, w in mkc.weights.items():
                if item not in item_set:
                    entries.append(f"{where} weighs unknown item {item}")
                elif not _is_amount(w):
                    entries.append(f"{where} weight of {item} is {w!r}, not a nonnegative integer")
            if len(set(mkc.bins)) != len(mkc.bins):
                entries.append(f"{where} has duplicate bin ids")
            if set(mkc.capacities) != set(mkc.bins):
                entries.append(f"{where} capacities do not match its bin list")
            for b, cap in mkc.capacities.items():
                if not _is_amount(cap):
                    entries.append(f"{where} capacity of bin {b} is {cap!r}, not a nonnegative integer")

        profit = stage.profit
        if inst.variant == SUBMODULAR:
            if not isinstance(profit, SetFunctionOracle):
                entries.append(f"stage {t} profit must be a set-function oracle in the submodular variant")
            else:
                missing = item_set - profit.ground
                if missing:
                    entries.append(f"stage {t} profit oracle missing items {sorted(missing)}")
        else:
            if isinstance(profit, SetFunctionOracle):
                entries.append(f"stage {t} profit must be a per-item table in the modular variant")
            else:
                for item in item_set:
                    if item not in profit:
                        entries.append(f"profit incomplete: stage {t} missing item {item}")
                for item, p in profit.items():
                    if item in item_set and not _is_amount(p):
                        entries.append(f"stage {t} profit of {item} is {p!r}, not a nonnegative integer")

    _check_table(entries, "gain_plus", inst.gain_plus, inst.items, 2, inst.horizon)
    _check_table(entries, "gain_minus", inst.gain_minus, inst.items, 2, inst.horizon)
    _check_table(entries, "cost_plus", inst.cost_plus, inst.items, 1, inst.horizon)
    _check_table(entries, "cost_minus", inst.cost_minus, inst.items, 1, inst.horizon)

    if inst.variant == SUBMODULAR:
        for name, table in (("cost_plus", inst.cost_plus), ("cost_minus", inst.cost_minus)):
            for key, value in table.items():
                if value != 0:
                    entries.append(
                        f"submodular variant must have zero change costs: {name}[{key}] = {value}"
                    )
    return ValidationReport(tuple(entries))


def ensure_valid(inst: GmkInstance) -> GmkInstance:
    """Raise ``InputError`` unless ``inst`` passes validation."""
    report = validate_instance(inst)
    if not report.ok:
        raise InputError("invalid instance: " + "; ".join(report.entries))
    return inst


def check_feasible(inst: GmkInstance, sol: MultistageSolution) -> FeasibilityReport:
    """Check that every assignment covers exactly S_t within all capacities."""
    violations: list[str] = []
    if len(sol.sets) != inst.horizon:
        violations.append(f"solution has {len(sol.sets)} stages, instance has {inst.horizon}")
        return FeasibilityReport(tuple(violations))
    if len(sol.assignments) != inst.horizon:
        violations.append(f"solution has assignments for {len(sol.assignments)} stages")
        return FeasibilityReport(tuple(violations))

    item_set = set(inst.items)
    for t, stage in enumerate(inst.stages, start=1):
        selected = sol.sets[t - 1]
        unknown = selected - item_set
        if unknown:
            violations.append(f"S_{t} contains unknown items {sorted(unknown)}")
        per_stage = sol.assignments[t - 1]
        if len(per_stage) != stage.dimension:
            violations.append(
                f"stage {t} needs {stage.dimension} assignments, got {len(per_stage)}"
            )
            continue
        for j, (mkc, assignment) in enumerate(zip(stage.mkcs, per_stage), start=1):
            bin_set = set(mkc.bins)
            covered: set[str] = set()
            for b, assigned in assignment.items():
                if b not in bin_set:
                    violations.append(f"unknown bin {b} at (t={t}, j={j})")
                    continue
                covered.update(assigned)
                load = sum(mkc.weights[i] for i in assigned if i in mkc.weights)
                if load > mkc.capacities[b]:
                    violations.append(
                        f"bin {b} over capacity at (t={t}, j={j}): load {load} > {mkc.capacities[b]}"
                    )
            if covered != set(selected):
                violations.append(f"assignment does not cover S_{t} at (t={t}, j={j})")
    return FeasibilityReport(tuple(violations))


def _check_sets(inst: GmkInstance, sets: Sequence[AbstractSet[str]], expected: int) -> None:
    if len(sets) != expected:
        raise InputError(f"expected {expected} stage sets, got {len(sets)}")
    known = set(inst.items)
    for k, subset in enumerate(sets):
        unknown = set(subset) - known
        if unknown:
            raise InputError(f"stage set {k + 1} references unknown items {sorted(unknown)}")


def _evaluate_range(inst: GmkInstance, t1: int, t2: int, sets: Sequence[AbstractSet[str]]) -> int:
    """Objective over stages [t1, t2] with empty boundary sets.

    Gains and costs are read at their global stage indices; gains accrue
    only at transitions strictly inside the range.
    """
    _check_sets(inst, sets, t2 - t1 + 1)
    total = 0
    for k, t in enumerate(range(t1, t2 + 1)):
        total += inst.stage_profit(t, sets[k])
    for k, t in enumerate(range(t1 + 1, t2 + 1), start=1):
        prev, cur = sets[k - 1], sets[k]
        for i in inst.items:
            if i in prev:
                if i in cur:
                    total += inst.gain_plus[i, t]
            elif i not in cur:
                total += inst.gain_minus[i, t]
    if inst.variant == MODULAR:
        empty: frozenset[str] = frozenset()
        for k, t in enumerate(range(t1, t2 + 1)):
            prev = sets[k - 1] if k > 0 else empty
            nxt = sets[k + 1] if k + 1 < len(sets) else empty
            for i in sets[k]:
                if i not in prev:
                    total -= inst.cost_plus[i, t]
                if i not in nxt:
                    total -= inst.cost_minus[i, t]
    return total


def evaluate_objective(inst: GmkInstance, sets: Sequence[AbstractSet[str]]) -> int:
    """Exact objective value of the stage sets (assignments do not matter)."""
    return _evaluate_range(inst, 1, inst.horizon, sets)


@dataclass(frozen=True)
class SubInstanceView:
    """Read-only window [start, end] of an instance.

    The window is evaluated under the empty-boundary convention: nothing is
    packed just before ``start`` or just after ``end``. The view shares the
    parent tables; nothing is copied until ``materialize`` is called.
    """

    instance: GmkInstance
    start: int
    end: int

    @property
    def horizon(self) -> int:
        return self.end - self.start + 1

    def materialize(self) -> GmkInstance:
        """Standalone instance over local stages 1..horizon, same semantics."""
        inst = self.instance
        offset = self.start - 1
        length = self.horizon

        def shift(table: Table, lo: int) -> dict[tuple[str, int], int]:
            return {
                (i, t): table[i, t + offset]
                for i in inst.items
                for t in range(lo, length + 1)
            }

        return GmkInstance(
            items=inst.items,
            horizon=length,
            stages=inst.stages[offset : self.end],
            gain_plus=shift(inst.gain_plus, 2),
            gain_minus=shift(inst.gain_minus, 2),
            cost_plus=shift(inst.cost_plus, 1),
            cost_minus=shift(inst.cost_minus, 1),
            variant=inst.variant,
            metadata={"window": [self.start, self.end]},
        )


def sub_instance(inst: GmkInstance, t1: int, t2: int) -> SubInstanceView:
    """View of stages t1..t2 without shifting or truncating the tables."""
    if not (1 <= t1 <= t2 <= inst.horizon):
        raise InputError(f"invalid stage range [{t1}, {t2}] for horizon {inst.horizon}")
    return SubInstanceView(instance=inst, start=t1, end=t2)


def evaluate_sub_objective(view: SubInstanceView, sets: Sequence[AbstractSet[str]]) -> int:
    """Objective of the window under the empty-boundary convention."""
    return _evaluate_range(view.instance, view.start, view.end, sets)


def profit_cost_ratio(inst: GmkInstance) -> ExtendedRatio:
    """Least r with every change cost at most r times every stage profit.

    Items with some positive change cost and some zero stage profit force
    the infinite ratio; items with zero costs everywhere contribute 0 even
    when all their profits are 0.
    """
    if inst.variant != MODULAR:
        raise UnsupportedVariantError("profit_cost_ratio requires the modular variant")
    worst = Fraction(0)
    for i in inst.items:
        max_cost = max(
            max(inst.cost_plus[i, t], inst.cost_minus[i, t]) for t in range(1, inst.horizon + 1)
        )
        if max_cost == 0:
            continue
        min_profit = min(inst.item_profit(t, i) for t in range(1, inst.horizon + 1))
        if min_profit == 0:
            return ExtendedRatio.infinite()
        worst = max(worst, Fraction(max_cost, min_profit))
    return ExtendedRatio(worst)


def ratio_violation(inst: GmkInstance, bound: int | Fraction):
    """First witness that the profit-cost ratio exceeds ``bound``, or None.

    Returns (item, cost stage, cost, profit stage, profit) where
    cost > bound * profit.
    """
    for i in inst.items:
        cost_stage = max(
            range(1, inst.horizon + 1),
            key=lambda t: max(inst.cost_plus[i, t], inst.cost_minus[i, t]),
        )
        max_cost = max(inst.cost_plus[i, cost_stage], inst.cost_minus[i, cost_stage])
        if max_cost == 0:
            continue
        profit_stage = min(range(1, inst.horizon + 1), key=lambda t: inst.item_profit(t, i))
        min_profit = inst.item_profit(profit_stage, i)
        if max_cost > bound * min_profit:
            return (i, cost_stage, max_cost, profit_stage, min_profit)
    return None
