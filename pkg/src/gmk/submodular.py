"""Monotone submodular profit oracles and an exhaustive property checker.

Instance profits in the submodular variant are drawn from a closed family
that is nonnegative, monotone and submodular by construction: weighted
coverage functions, modular functions, and sums thereof. A table-backed
oracle with no guarantees is also provided so the property checker can be
exercised against adversarial inputs.

``extend_function`` lifts an oracle over items to an oracle over
item/schedule pairs that only sees the items whose schedule contains a
given stage. The lifted function inherits all three properties, which the
checker verifies exhaustively at desk scale.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import ClassVar, Hashable, Iterable, Mapping

import numpy as np

from .errors import InputError


class SetFunctionOracle:
    """Base class for evaluable set functions over a fixed ground set."""

    kind: ClassVar[str] = "abstract"

    @property
    def ground(self) -> frozenset:
        raise NotImplementedError

    def evaluate(self, subset: frozenset) -> int:
        """Value of ``subset``; callers must stay within ``ground``."""
        raise NotImplementedError


@dataclass(frozen=True)
class CoverageFunction(SetFunctionOracle):
    """Total weight of universe elements covered by the selected items."""

    kind: ClassVar[str] = "coverage"
    universe: Mapping[Hashable, int]
    covers: Mapping[Hashable, frozenset]

    @property
    def ground(self) -> frozenset:
        return frozenset(self.covers)

    def evaluate(self, subset: frozenset) -> int:
        covered: set = set()
        for item in subset:
            covered.update(self.covers[item])
        return sum(self.universe[u] for u in covered)


@dataclass(frozen=True)
class ModularFunction(SetFunctionOracle):
    """Additive set function; equals a per-item profit table."""

    kind: ClassVar[str] = "modular"
    values: Mapping[Hashable, int]

    @property
    def ground(self) -> frozenset:
        return frozenset(self.values)

    def evaluate(self, subset: frozenset) -> int:
        return sum(self.values[i] for i in subset)


@dataclass(frozen=True)
class SumFunction(SetFunctionOracle):
    """Sum of oracles; closed under the guaranteed properties."""

    kind: ClassVar[str] = "sum"
    parts: tuple[SetFunctionOracle, ...]

    @property
    def ground(self) -> frozenset:
        ground: frozenset = frozenset()
        for part in self.parts:
            ground |= part.ground
        return ground

    def evaluate(self, subset: frozenset) -> int:
        return sum(part.evaluate(subset & part.ground) for part in self.parts)


@dataclass(frozen=True)
class TableFunction(SetFunctionOracle):
    """Arbitrary explicit table, no properties guaranteed.

    Diagnostic oracle for checker tests; not accepted in instance files.
    """

    kind: ClassVar[str] = "table"
    table: Mapping[frozenset, int]
    members: frozenset

    @property
    def ground(self) -> frozenset:
        return self.members

    def evaluate(self, subset: frozenset) -> int:
        try:
            return self.table[frozenset(subset)]
        except KeyError:
            raise InputError(f"table oracle has no entry for {sorted(map(str, subset))}")


@dataclass(frozen=True)
class ExtendedStageFunction(SetFunctionOracle):
    """Lift of an item oracle to schedule elements active at one stage.

    Evaluates the base function on the items whose element is active at
    ``stage``; elements are anything exposing ``item`` and ``active_at``.
    """

    kind: ClassVar[str] = "stage-extension"
    base: SetFunctionOracle
    stage: int
    members: frozenset = frozenset()

    @property
    def ground(self) -> frozenset:
        return self.members

    def evaluate(self, subset: frozenset) -> int:
        items = frozenset(e.item for e in subset if e.active_at(self.stage))
        return self.base.evaluate(items)


def eval_set_function(oracle: SetFunctionOracle, subset: Iterable) -> int:
    """Evaluate ``oracle`` on ``subset`` after a ground-set membership check."""
    members = frozenset(subset)
    unknown = members - oracle.ground
    if unknown:
        raise InputError(f"unknown ground elements: {sorted(map(str, unknown))}")
    return oracle.evaluate(members)


def extend_function(oracle: SetFunctionOracle, stage: int, ground: Iterable = ()) -> ExtendedStageFunction:
    """Oracle over item/schedule elements seeing only stage ``stage``."""
    return ExtendedStageFunction(base=oracle, stage=stage, members=frozenset(ground))


@dataclass(frozen=True)
class PropertyReport:
    """Outcome of a nonnegativity, monotonicity and submodularity check."""

    clean: bool
    sampled: bool
    violations: tuple[str, ...]


def check_monotone_submodular(
    oracle: SetFunctionOracle,
    ground: Iterable | None = None,
    *,
    exhaustive_cap: int = 12,
    sample_count: int = 5000,
    seed: int = 0,
) -> PropertyReport:
    """Verify nonnegativity, monotonicity and diminishing returns.

    Grounds of size up to ``exhaustive_cap`` are checked exhaustively over
    all subsets; larger grounds fall back to seeded sampling and the report
    is flagged accordingly. The first witness of each violated property is
    reported.
    """
    members = sorted(ground if ground is not None else oracle.ground)
    if len(members) > exhaustive_cap:
        return _sampled_check(oracle, members, sample_count, seed)
    return _exhaustive_check(oracle, members)


def _subset(members, mask: int) -> frozenset:
    return frozenset(members[k] for k in range(len(members)) if (mask >> k) & 1)


def _fmt(members, mask: int) -> str:
    return "{" + ", ".join(str(m) for m in sorted(map(str, _subset(members, mask)))) + "}"


def _exhaustive_check(oracle, members) -> PropertyReport:
    n = len(members)
    size = 1 << n
    table = np.empty(size, dtype=np.int64)
    for mask in range(size):
        table[mask] = oracle.evaluate(_subset(members, mask))

    violations: list[str] = []
    negatives = np.flatnonzero(table < 0)
    if negatives.size:
        mask = int(negatives[0])
        violations.append(f"negative: f({_fmt(members, mask)}) = {int(table[mask])}")

    monotone_witness = None
    submodular_witness = None
    for k in range(n):
        bit = 1 << k
        half = 1 << (n - 1)
        comp = np.arange(half)
        # masks not containing bit k, re-expanded from a compressed index
        orig = ((comp >> k) << (k + 1)) | (comp & (bit - 1))
        marg = table[orig | bit] - table[orig]

        if monotone_witness is None:
            bad = np.flatnonzero(marg < 0)
            if bad.size:
                mask = int(orig[bad[0]])
                monotone_witness = (
                    f"not monotone: f({_fmt(members, mask | bit)}) - "
                    f"f({_fmt(members, mask)}) = {int(marg[bad[0]])}"
                )

        if submodular_witness is None:
            # diminishing returns: marg over supersets never exceeds the
            # minimum marginal over their subsets
            mins = marg.copy()
            for j in range(n - 1):
                bj = 1 << j
                idx = comp[(comp & bj) != 0]
                mins[idx] = np.minimum(mins[idx], mins[idx ^ bj])
            bad = np.flatnonzero(marg > mins)
            if bad.size:
                b_comp = int(bad[0])
                a_comp = b_comp
                sub = b_comp
                while True:
                    if marg[sub] < marg[b_comp]:
                        a_comp = sub
                        break
                    if sub == 0:
                        break
                    sub = (sub - 1) & b_comp
                b_mask = int(orig[b_comp])
                a_mask = int(orig[a_comp])
                submodular_witness = (
                    f"not submodular: adding {members[k]} gains {int(marg[b_comp])} at "
                    f"{_fmt(members, b_mask)} but {int(marg[a_comp])} at subset {_fmt(members, a_mask)}"
                )

    if monotone_witness:
        violations.append(monotone_witness)
    if submodular_witness:
        violations.append(submodular_witness)
    return PropertyReport(clean=not violations, sampled=False, violations=tuple(violations))


def _sampled_check(oracle, members, sample_count: int, seed: int) -> PropertyReport:
    rng = random.Random(seed)
    n = len(members)
    violations: list[str] = []
    for _ in range(sample_count):
        b_mask = rng.getrandbits(n)
        a_mask = b_mask & rng.getrandbits(n)
        outside = [k for k in range(n) if not (b_mask >> k) & 1]
        set_a = _subset(members, a_mask)
        set_b = _subset(members, b_mask)
        fa, fb = oracle.evaluate(set_a), oracle.evaluate(set_b)
        if fa < 0:
            violations.append(f"negative: f({_fmt(members, a_mask)}) = {fa}")
            break
        if fa > fb:
            violations.append(
                f"not monotone: f({_fmt(members, a_mask)}) > f({_fmt(members, b_mask)})"
            )
            break
        if outside:
            k = rng.choice(outside)
            extra = members[k]
            ga = oracle.evaluate(set_a | {extra}) - fa
            gb = oracle.evaluate(set_b | {extra}) - fb
            if ga < gb:
                violations.append(
                    f"not submodular: adding {extra} gains {gb} at {_fmt(members, b_mask)} "
                    f"but {ga} at subset {_fmt(members, a_mask)}"
                )
                break
    return PropertyReport(clean=not violations, sampled=True, violations=tuple(violations))
