"""Shared builders for the test suite."""
from __future__ import annotations

from fractions import Fraction

from mkcp_kit.hull import FreeConstraint, PartitionMatroid, UniformMatroid
from mkcp_kit.model import Instance, MultiKnapsackConstraint
from mkcp_kit.objectives import (
    CoverageObjective,
    CutObjective,
    ModularObjective,
    TableObjective,
)


def frac(value) -> Fraction:
    return Fraction(value)


def fracs(values) -> tuple[Fraction, ...]:
    return tuple(Fraction(v) for v in values)


def mkc(weights, bins) -> MultiKnapsackConstraint:
    return MultiKnapsackConstraint(fracs(weights), fracs(bins))


def modular(profits, offset=0) -> ModularObjective:
    return ModularObjective(Fraction(offset), fracs(profits))


def coverage(element_weights, covers) -> CoverageObjective:
    return CoverageObjective(
        {e: Fraction(w) for e, w in element_weights.items()},
        tuple(frozenset(c) for c in covers),
    )


def cut(n_vertices, edges, item_vertex) -> CutObjective:
    return CutObjective(
        n_vertices,
        tuple((u, v, Fraction(w)) for u, v, w in edges),
        tuple(item_vertex),
    )


def table(n_items, values) -> TableObjective:
    return TableObjective.from_values(n_items, fracs(values))


def free_instance(labels, constraints, objective) -> Instance:
    return Instance(tuple(labels), tuple(constraints), objective, FreeConstraint(len(labels)))


def instance(labels, constraints, objective, additional) -> Instance:
    return Instance(tuple(labels), tuple(constraints), objective, additional)


def uniform(n, rank) -> UniformMatroid:
    return UniformMatroid(n, rank)


def partition(n, classes, caps) -> PartitionMatroid:
    return PartitionMatroid(n, tuple(frozenset(c) for c in classes), tuple(caps))
