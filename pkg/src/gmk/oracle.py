"""Ground-truth solver: exhaustive dynamic program over per-stage item sets.

The objective couples only consecutive stages, so enumerating every subset
per stage and every transition between consecutive subsets is exhaustive
and exact. Packability of each subset under each stage constraint is
decided once by the exact packer. A work budget of roughly
``T * 4**|items|`` transitions keeps this a desk-scale oracle.
"""

from __future__ import annotations

from .core import (
    MODULAR,
    GmkInstance,
    MultistageSolution,
    check_feasible,
)
from .errors import BudgetExceededError, ContractViolationError
from .mkcp import pack_mkc

DEFAULT_ORACLE_BUDGET = 10**6


def brute_force_gmk(inst: GmkInstance, *, work_budget: int | None = None) -> MultistageSolution:
    """Exact optimum with a witness solution.

    Deterministic: among optimal set sequences the one found by ascending
    subset masks stage by stage is returned, with packer-produced
    assignments.
    """
    budget = DEFAULT_ORACLE_BUDGET if work_budget is None else work_budget
    n = len(inst.items)
    horizon = inst.horizon
    work = horizon * (1 << n) * (1 << n)
    if work > budget:
        raise BudgetExceededError(
            f"oracle refused: {work} transitions exceed the budget {budget}"
        )

    size = 1 << n
    items = inst.items
    members = [tuple(i for k, i in enumerate(items) if (m >> k) & 1) for m in range(size)]
    subsets = [frozenset(t) for t in members]

    packable: list[list[bool]] = []
    for t in range(1, horizon + 1):
        stage = inst.stage(t)
        row = []
        for m in range(size):
            row.append(all(pack_mkc(mkc, members[m]).packed for mkc in stage.mkcs))
        packable.append(row)
    profits = [
        [inst.stage_profit(t, subsets[m]) for m in range(size)] for t in range(1, horizon + 1)
    ]
    modular = inst.variant == MODULAR

    def entry_cost(m: int) -> int:
        if not modular:
            return 0
        return sum(inst.cost_plus[i, 1] for i in members[m])

    def exit_cost(m: int) -> int:
        if not modular:
            return 0
        return sum(inst.cost_minus[i, horizon] for i in members[m])

    def transition(prev: int, cur: int, t: int) -> int:
        """Coupling terms at the boundary between stages t-1 and t."""
        value = 0
        for k, i in enumerate(items):
            in_prev = (prev >> k) & 1
            in_cur = (cur >> k) & 1
            if in_prev and in_cur:
                value += inst.gain_plus[i, t]
            elif not in_prev and not in_cur:
                value += inst.gain_minus[i, t]
            if modular:
                if in_cur and not in_prev:
                    value -= inst.cost_plus[i, t]
                if in_prev and not in_cur:
                    value -= inst.cost_minus[i, t - 1]
        return value

    floor = float("-inf")
    best = [profits[0][m] - entry_cost(m) if packable[0][m] else floor for m in range(size)]
    parents: list[list[int]] = []
    for t in range(2, horizon + 1):
        nxt = [floor] * size
        parent = [0] * size
        for cur in range(size):
            if not packable[t - 1][cur]:
                continue
            base = profits[t - 1][cur]
            for prev in range(size):
                if best[prev] == floor:
                    continue
                candidate = best[prev] + base + transition(prev, cur, t)
                if candidate > nxt[cur]:
                    nxt[cur] = candidate
                    parent[cur] = prev
        parents.append(parent)
        best = nxt

    final_best = floor
    final_mask = 0
    for m in range(size):
        if best[m] == floor:
            continue
        candidate = best[m] - exit_cost(m)
        if candidate > final_best:
            final_best = candidate
            final_mask = m
    if final_best == floor:
        raise ContractViolationError("no packable subset sequence exists (empty set must pack)")

    masks = [final_mask]
    for parent in reversed(parents):
        masks.append(parent[masks[-1]])
    masks.reverse()

    sets = tuple(subsets[m] for m in masks)
    assignments = []
    for t, stage in enumerate(inst.stages, start=1):
        per_stage = []
        for mkc in stage.mkcs:
            result = pack_mkc(mkc, sets[t - 1])
            assert result.packed
            per_stage.append(dict(result.assignment))
        assignments.append(tuple(per_stage))
    solution = MultistageSolution.from_raw(sets, assignments)
    feasibility = check_feasible(inst, solution)
    if not feasibility.ok:
        raise ContractViolationError("oracle witness infeasible: " + "; ".join(feasibility.violations))
    return solution
