"""Additional-constraint families (free, uniform matroid, partition matroid).

Each family answers membership queries exactly, optimizes linear functions
over its hull by the matroid greedy rule, exposes its hull as explicit
cardinality inequalities, and contracts by a committed base set.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence


class ConstraintError(ValueError):
    pass


class AdditionalConstraint:
    kind = "abstract"

    def check_ground_set(self, n: int) -> None:
        raise NotImplementedError

    def is_member(self, selected: Iterable[int]) -> bool:
        raise NotImplementedError

    def cap_groups(self) -> list[tuple[frozenset[int], int]]:
        """Hull description: pairs (item class, cap) with sum x_i <= cap."""
        raise NotImplementedError

    def contract(self, base: frozenset[int]) -> "AdditionalConstraint":
        """The family {T : T | base is a member}; requires base to be a member."""
        raise NotImplementedError

    def to_payload(self, labels: Sequence[str]) -> dict:
        raise NotImplementedError


class FreeConstraint(AdditionalConstraint):
    kind = "free"

    def __init__(self, n: int):
        self.n = n

    def check_ground_set(self, n: int) -> None:
        if self.n != n:
            raise ConstraintError("constraint ground set does not match the instance")

    def is_member(self, selected: Iterable[int]) -> bool:
        return True

    def cap_groups(self) -> list[tuple[frozenset[int], int]]:
        return []

    def contract(self, base: frozenset[int]) -> "FreeConstraint":
        return self

    def to_payload(self, labels: Sequence[str]) -> dict:
        return {"kind": "free"}


class UniformMatroid(AdditionalConstraint):
    kind = "uniform"

    def __init__(self, n: int, rank: int):
        if rank < 0:
            raise ConstraintError("rank must be non-negative")
        self.n = n
        self.rank = rank

    def check_ground_set(self, n: int) -> None:
        if self.n != n:
            raise ConstraintError("constraint ground set does not match the instance")

    def is_member(self, selected: Iterable[int]) -> bool:
        return len(set(selected)) <= self.rank

    def cap_groups(self) -> list[tuple[frozenset[int], int]]:
        return [(frozenset(range(self.n)), self.rank)]

    def contract(self, base: frozenset[int]) -> "UniformMatroid":
        remaining = self.rank - len(base)
        if remaining < 0:
            raise ConstraintError("base set is not independent")
        return UniformMatroid(self.n, remaining)

    def to_payload(self, labels: Sequence[str]) -> dict:
        return {"kind": "uniform", "rank": self.rank}


class PartitionMatroid(AdditionalConstraint):
    """Per-class cardinality caps; items outside every class are unconstrained."""

    kind = "partition"

    def __init__(self, n: int, classes: tuple[frozenset[int], ...], caps: tuple[int, ...]):
        if len(classes) != len(caps):
            raise ConstraintError("need one cap per class")
        seen: set[int] = set()
        for group in classes:
            if group & seen:
                raise ConstraintError("classes must be disjoint")
            seen |= group
        if any(cap < 0 for cap in caps):
            raise ConstraintError("caps must be non-negative")
        self.n = n
        self.classes = classes
        self.caps = caps

    def check_ground_set(self, n: int) -> None:
        if self.n != n:
            raise ConstraintError("constraint ground set does not match the instance")
        for group in self.classes:
            if any(i < 0 or i >= n for i in group):
                raise ConstraintError("class contains out-of-range item ids")

    def is_member(self, selected: Iterable[int]) -> bool:
        chosen = set(selected)
        return all(len(chosen & group) <= cap for group, cap in zip(self.classes, self.caps))

    def cap_groups(self) -> list[tuple[frozenset[int], int]]:
        return list(zip(self.classes, self.caps))

    def contract(self, base: frozenset[int]) -> "PartitionMatroid":
        caps = []
        for group, cap in zip(self.classes, self.caps):
            remaining = cap - len(base & group)
            if remaining < 0:
                raise ConstraintError("base set is not independent")
            caps.append(remaining)
        return PartitionMatroid(self.n, self.classes, tuple(caps))

    def to_payload(self, labels: Sequence[str]) -> dict:
        return {
            "kind": "partition",
            "classes": [sorted(labels[i] for i in group) for group in self.classes],
            "caps": list(self.caps),
        }


def is_member(spec: AdditionalConstraint, selected: Iterable[int]) -> bool:
    return spec.is_member(selected)


def hull_linear_optimize(spec: AdditionalConstraint, weights: Sequence) -> frozenset[int]:
    """Greedy maximum-weight member set; exact for the supported families.

    Items with non-positive weight are never taken.  Ties break on the
    smaller id, so the result is deterministic.
    """
    order = sorted(
        (i for i in range(len(weights)) if weights[i] > 0),
        key=lambda i: (-Fraction(weights[i]), i),
    )
    chosen: set[int] = set()
    for i in order:
        if spec.is_member(chosen | {i}):
            chosen.add(i)
    return frozenset(chosen)
