"""Solvers for reduced packing instances.

``pack_assignment`` decides exactly whether a fixed element set fits a
multiple knapsack constraint, by first-fit-decreasing and then exhaustive
backtracking with symmetry breaking on equal remaining capacities.

``solve_mkcp_exact`` finds a maximum-value selection of one schedule per
item. For modular values it prunes schedules dominated by a cheaper subset
(safe: weights shrink coordinatewise with the schedule) and runs two
branch-and-bound passes, one for the optimal value and one to reconstruct
the lexicographically smallest optimum. Submodular objectives are searched
in lexicographic order under a monotonicity upper bound. Both are exact and
deterministic; an enumeration budget refuses oversized candidate spaces.

``solve_mkcp_greedy`` fixes items one by one, always keeping every
constraint packable within a node budget, and never fails: the empty
schedule weighs nothing everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

import numpy as np

from .core import MODULAR, Mkc
from .errors import BudgetExceededError, ContractViolationError
from .reduction import (
    PAD_BIN,
    ReducedElement,
    ReducedInstance,
    ReducedSolution,
    verify_reduced_solution,
)

PACKED = "packed"
INFEASIBLE = "infeasible"
UNKNOWN = "unknown"

DEFAULT_ENUM_BUDGET = 10**6
DEFAULT_PACK_BUDGET = 10**5


class _BudgetHit(Exception):
    pass


@dataclass(frozen=True)
class PackingResult:
    """Outcome of a packing attempt; a witness assignment when packed.

    ``unknown`` only occurs under a finite node budget and is treated as
    infeasible by the greedy solver; the exact solver packs unbudgeted.
    """

    status: str
    assignment: Mapping[str, frozenset] | None = None

    @property
    def packed(self) -> bool:
        return self.status == PACKED


def pack_assignment(
    bins: Sequence[str],
    capacities: Mapping[str, int],
    weights: Mapping[Hashable, int],
    *,
    node_budget: int | None = None,
) -> PackingResult:
    """Exact multiple-knapsack packability of a fixed element set.

    Zero-weight elements always fit and are parked in the first bin of the
    canonical order (capacity descending, then bin id).
    """
    entries = sorted(weights.items(), key=lambda kv: (-kv[1], kv[0]))
    if not bins:
        if entries:
            return PackingResult(INFEASIBLE)
        return PackingResult(PACKED, {})
    order = sorted(bins, key=lambda b: (-capacities[b], b))
    heavy = [(e, w) for e, w in entries if w > 0]

    placed: dict[Hashable, str] = {}
    if heavy:
        if sum(w for _, w in heavy) > sum(capacities.values()):
            return PackingResult(INFEASIBLE)
        if heavy[0][1] > capacities[order[0]]:
            return PackingResult(INFEASIBLE)

        remaining = {b: capacities[b] for b in order}
        complete = True
        for e, w in heavy:
            for b in order:
                if remaining[b] >= w:
                    remaining[b] -= w
                    placed[e] = b
                    break
            else:
                complete = False
                break

        if not complete:
            remaining = {b: capacities[b] for b in order}
            placed = {}
            nodes = 0

            def dfs(k: int) -> bool:
                nonlocal nodes
                if k == len(heavy):
                    return True
                nodes += 1
                if node_budget is not None and nodes > node_budget:
                    raise _BudgetHit
                e, w = heavy[k]
                tried: set[int] = set()
                for b in order:
                    r = remaining[b]
                    if r < w or r in tried:
                        continue
                    tried.add(r)
                    remaining[b] = r - w
                    placed[e] = b
                    if dfs(k + 1):
                        return True
                    remaining[b] = r
                    del placed[e]
                return False

            try:
                if not dfs(0):
                    return PackingResult(INFEASIBLE)
            except _BudgetHit:
                return PackingResult(UNKNOWN)

    assignment: dict[str, set] = {b: set() for b in bins}
    for e, b in placed.items():
        assignment[b].add(e)
    for e, w in entries:
        if w == 0:
            assignment[order[0]].add(e)
    return PackingResult(PACKED, {b: frozenset(s) for b, s in assignment.items()})


def pack_mkc(mkc: Mkc, chosen: Sequence[str] | frozenset[str], *, node_budget: int | None = None) -> PackingResult:
    """Packability of an item set under one original constraint."""
    return pack_assignment(
        mkc.bins, mkc.capacities, {i: mkc.weights[i] for i in chosen}, node_budget=node_budget
    )


class _PartialPacking:
    """Incremental packability of a growing chosen set.

    Tracks the weighted elements per constraint; pushing an element
    re-checks only the constraints where it weighs anything. Single-bin
    constraints are decided additively without a search; multi-bin ones go
    through cheap necessary conditions before the exact packer runs.
    """

    def __init__(self, reduced: ReducedInstance, node_budget: int | None = None):
        self.reduced = reduced
        self.node_budget = node_budget
        self.single_cap: list[int | None] = []
        self.total_cap: list[int] = []
        self.max_cap: list[int] = []
        for rc in reduced.constraints:
            caps = list(rc.capacities.values())
            self.single_cap.append(caps[0] if len(caps) == 1 else None)
            self.total_cap.append(sum(caps))
            self.max_cap.append(max(caps, default=0))
        self.loads: list[dict[ReducedElement, int]] = [{} for _ in reduced.constraints]
        self.load_sums: list[int] = [0] * len(reduced.constraints)
        self._touch: dict[ReducedElement, list[tuple[int, int]]] = {}

    def _touched(self, e: ReducedElement) -> list[tuple[int, int]]:
        cached = self._touch.get(e)
        if cached is None:
            cached = []
            for ci, rc in enumerate(self.reduced.constraints):
                w = rc.weight_of(e)
                if w > 0:
                    cached.append((ci, w))
            self._touch[e] = cached
        return cached

    def can_push(self, e: ReducedElement) -> bool:
        for ci, w in self._touched(e):
            loaded = self.load_sums[ci] + w
            cap = self.single_cap[ci]
            if cap is not None:
                if loaded > cap:
                    return False
                continue
            if loaded > self.total_cap[ci] or w > self.max_cap[ci]:
                return False
            rc = self.reduced.constraints[ci]
            weights = dict(self.loads[ci])
            weights[e] = w
            result = pack_assignment(rc.bins, rc.capacities, weights, node_budget=self.node_budget)
            if not result.packed:
                return False
        return True

    def push(self, e: ReducedElement) -> None:
        for ci, w in self._touched(e):
            self.loads[ci][e] = w
            self.load_sums[ci] += w

    def pop(self, e: ReducedElement) -> None:
        for ci, w in self._touched(e):
            del self.loads[ci][e]
            self.load_sums[ci] -= w

    def single_bin_weights(self, item: str) -> tuple[tuple[int, int, int], ...]:
        """(constraint index, stage, weight) for weighted single-bin constraints."""
        out = []
        for ci, rc in enumerate(self.reduced.constraints):
            if rc.padding or self.single_cap[ci] is None:
                continue
            w = rc.item_weights.get(item, 0)
            if w > 0:
                out.append((ci, rc.stage, w))
        return tuple(out)


def _build_assignments(reduced: ReducedInstance, chosen: frozenset[ReducedElement]):
    assignments = {}
    for rc in reduced.constraints:
        weights = {e: rc.weight_of(e) for e in chosen}
        result = pack_assignment(rc.bins, rc.capacities, weights)
        if not result.packed:
            raise ContractViolationError(
                f"chosen set does not pack constraint (t={rc.stage}, j={rc.index})"
            )
        assignments[(rc.stage, rc.index)] = dict(result.assignment)
    return assignments


def _finish(reduced: ReducedInstance, chosen: Sequence[ReducedElement]) -> ReducedSolution:
    chosen_set = frozenset(chosen)
    rsol = ReducedSolution(chosen=chosen_set, assignments=_build_assignments(reduced, chosen_set))
    violations = verify_reduced_solution(reduced, rsol)
    if violations:
        raise ContractViolationError("solver produced an invalid solution: " + "; ".join(violations))
    return rsol


def _dominance_prune(reduced: ReducedInstance, group) -> list[ReducedElement]:
    """Drop schedules valued no higher than one of their retained subsets.

    A subset schedule weighs less in every constraint, so any optimum using
    the superset can swap down at equal or better value; the swap also
    lowers the schedule mask, preserving the lexicographic tie-break.
    """
    values = reduced.values
    assert values is not None
    size = 1 << reduced.horizon
    floor = -(1 << 62)
    arr = np.full(size, floor, dtype=np.int64)
    for e in group:
        arr[e.mask] = values[e]
    best = arr.copy()
    masks = np.arange(size)
    for t in range(reduced.horizon):
        bit = 1 << t
        idx = masks[(masks & bit) != 0]
        best[idx] = np.maximum(best[idx], best[idx ^ bit])
    keep = []
    for e in group:
        if e.mask == 0:
            keep.append(e)
            continue
        proper = max(
            int(best[e.mask ^ (1 << t)]) for t in range(reduced.horizon) if e.mask >> t & 1
        )
        if values[e] > proper:
            keep.append(e)
    return keep


def solve_mkcp_exact(reduced: ReducedInstance, *, enum_budget: int | None = None) -> ReducedSolution:
    """Maximum-value feasible selection, ties broken lexicographically.

    The tie-break is over the tuple of chosen schedule masks in item order.
    Refuses candidate spaces larger than the enumeration budget.
    """
    budget = DEFAULT_ENUM_BUDGET if enum_budget is None else enum_budget
    space = 1
    for item in reduced.items:
        space *= len(reduced.groups[item]) + 1
        if space > budget:
            raise BudgetExceededError(
                f"exact solve refused: candidate space exceeds budget {budget}; "
                f"use solve_mkcp_greedy or raise the budget"
            )
    if reduced.variant == MODULAR:
        return _exact_modular(reduced)
    return _exact_submodular(reduced)


def _subset_max_table(horizon: int, elems, vals) -> list[int]:
    """best[c] = max value over candidates whose mask is a subset of c."""
    size = 1 << horizon
    floor = -(1 << 62)
    best = np.full(size, floor, dtype=np.int64)
    for e, v in zip(elems, vals):
        best[e.mask] = max(best[e.mask], v)
    masks = np.arange(size)
    for t in range(horizon):
        bit = 1 << t
        idx = masks[(masks & bit) != 0]
        best[idx] = np.maximum(best[idx], best[idx ^ bit])
    return best.tolist()


def _exact_modular(reduced: ReducedInstance) -> ReducedSolution:
    values = reduced.values
    assert values is not None
    items = reduced.items
    n = len(items)
    packing = _PartialPacking(reduced)
    cand: list[list[ReducedElement]] = []
    for item in items:
        kept = _dominance_prune(reduced, reduced.groups[item])
        # solo-unpackable schedules can never join a solution
        kept = [e for e in kept if e.mask == 0 or packing.can_push(e)]
        kept.sort(key=lambda e: (-values[e], e.mask))
        cand.append(kept)
    vals = [[values[e] for e in group] for group in cand]
    touch = [[packing._touched(e) for e in group] for group in cand]
    suffix = [0] * (n + 1)
    for k in range(n - 1, -1, -1):
        suffix[k] = suffix[k + 1] + (vals[k][0] if vals[k] else 0)

    # Load-aware completion bound. A joint completion packs each remaining
    # element together with the others, so per item the best schedule whose
    # stages all still accept the item's weight (in single-bin constraints;
    # multi-bin ones are relaxed here and enforced by can_push) bounds its
    # contribution. Subset-max tables make that a single lookup.
    fit = [
        _subset_max_table(reduced.horizon, group, group_vals)
        for group, group_vals in zip(cand, vals)
    ]
    stage_weights = [packing.single_bin_weights(item) for item in items]
    full_mask = (1 << reduced.horizon) - 1
    load_sums = packing.load_sums
    single_cap = packing.single_cap

    def completion_bound(k: int) -> int:
        total = 0
        for j in range(k, n):
            avail = full_mask
            for ci, t, w in stage_weights[j]:
                if load_sums[ci] + w > single_cap[ci]:
                    avail &= ~(1 << (t - 1))
            total += fit[j][avail]
        return total

    best = _greedy_value(reduced, cand, packing)

    def dfs_value(k: int, acc: int) -> None:
        nonlocal best
        if k == n:
            if acc > best:
                best = acc
            return
        if acc + completion_bound(k) <= best:
            return
        group, group_vals, group_touch = cand[k], vals[k], touch[k]
        bound = suffix[k + 1]
        for idx, e in enumerate(group):
            if acc + group_vals[idx] + bound <= best:
                break
            if packing.can_push(e):
                for ci, w in group_touch[idx]:
                    load_sums[ci] += w
                    packing.loads[ci][e] = w
                dfs_value(k + 1, acc + group_vals[idx])
                for ci, w in group_touch[idx]:
                    load_sums[ci] -= w
                    del packing.loads[ci][e]

    dfs_value(0, 0)

    chosen: list[ReducedElement] = []
    order = [sorted(range(len(group)), key=lambda idx: group[idx].mask) for group in cand]

    def dfs_rebuild(k: int, acc: int) -> bool:
        if k == n:
            return acc == best
        if acc + completion_bound(k) < best:
            return False
        group, group_vals, group_touch = cand[k], vals[k], touch[k]
        bound = suffix[k + 1]
        for idx in order[k]:
            if acc + group_vals[idx] + bound < best:
                continue
            e = group[idx]
            if packing.can_push(e):
                packing.push(e)
                chosen.append(e)
                if dfs_rebuild(k + 1, acc + group_vals[idx]):
                    return True
                chosen.pop()
                packing.pop(e)
        return False

    if not dfs_rebuild(0, 0):
        raise ContractViolationError("optimal value unreachable during reconstruction")
    return _finish(reduced, chosen)


def _greedy_value(reduced: ReducedInstance, cand, packing: _PartialPacking) -> int:
    """Feasible lower bound: greedy over the pruned candidate lists."""
    values = reduced.values
    assert values is not None
    total = 0
    pushed: list[ReducedElement] = []
    for group in cand:
        for e in group:
            if packing.can_push(e):
                packing.push(e)
                pushed.append(e)
                total += values[e]
                break
    for e in pushed:
        packing.pop(e)
    return total


def _exact_submodular(reduced: ReducedInstance) -> ReducedSolution:
    objective = reduced.objective
    assert objective is not None
    items = reduced.items
    groups = [sorted(reduced.groups[item], key=lambda e: e.mask) for item in items]
    n = len(items)
    rest: list[frozenset[ReducedElement]] = [frozenset()] * (n + 1)
    for k in range(n - 1, -1, -1):
        rest[k] = rest[k + 1] | frozenset(groups[k])

    packing = _PartialPacking(reduced)
    stack: list[ReducedElement] = []
    best_value: int | None = None
    best_chosen: tuple[ReducedElement, ...] = ()

    def dfs(k: int) -> None:
        nonlocal best_value, best_chosen
        if k == n:
            value = objective.evaluate(frozenset(stack))
            if best_value is None or value > best_value:
                best_value = value
                best_chosen = tuple(stack)
            return
        for e in groups[k]:
            if best_value is not None:
                # monotone bound: no completion beats the union of everything left
                bound = objective.evaluate(frozenset(stack) | {e} | rest[k + 1])
                if bound <= best_value:
                    continue
            if packing.can_push(e):
                packing.push(e)
                stack.append(e)
                dfs(k + 1)
                stack.pop()
                packing.pop(e)

    dfs(0)
    return _finish(reduced, best_chosen)


def solve_mkcp_greedy(
    reduced: ReducedInstance, *, pack_budget: int | None = DEFAULT_PACK_BUDGET
) -> ReducedSolution:
    """Per item, the best marginal schedule that keeps everything packable.

    Packing checks run under ``pack_budget`` nodes; an undecided check
    counts as unpackable. Always returns a feasible solution worth at least
    the all-empty-schedule one.
    """
    packing = _PartialPacking(reduced, node_budget=pack_budget)
    chosen: list[ReducedElement] = []
    for item in reduced.items:
        group = reduced.groups[item]
        if reduced.variant == MODULAR:
            values = reduced.values
            assert values is not None
            ranked = sorted(group, key=lambda e: (-values[e], e.mask))
        else:
            objective = reduced.objective
            assert objective is not None
            current = frozenset(chosen)
            base = objective.evaluate(current)
            ranked = sorted(
                group, key=lambda e: (-(objective.evaluate(current | {e}) - base), e.mask)
            )
        for e in ranked:
            if packing.can_push(e):
                packing.push(e)
                chosen.append(e)
                break
        else:
            raise ContractViolationError("the empty schedule must always pack")
    return _finish(reduced, chosen)
