"""Random instance families for benchmarks and randomized validation."""
from __future__ import annotations

import random
import string
from fractions import Fraction

from .hull import FreeConstraint, PartitionMatroid, UniformMatroid
from .model import Instance, MultiKnapsackConstraint
from .objectives import CoverageObjective, CutObjective, ModularObjective

OBJECTIVE_FAMILIES = ("modular", "coverage", "cut")
SIDE_FAMILIES = ("free", "uniform", "partition")


def _labels(n: int) -> tuple[str, ...]:
    if n <= len(string.ascii_lowercase):
        return tuple(string.ascii_lowercase[:n])
    return tuple(f"x{i}" for i in range(n))


def _random_objective(rng: random.Random, n: int, family: str):
    if family == "modular":
        return ModularObjective(
            Fraction(0), tuple(Fraction(rng.randint(0, 9)) for _ in range(n))
        )
    if family == "coverage":
        n_elements = n + rng.randint(0, 2)
        element_weights = {
            e: Fraction(rng.randint(1, 5)) for e in range(n_elements)
        }
        covers = tuple(
            frozenset(
                e for e in range(n_elements) if rng.random() < 0.5
            )
            for _ in range(n)
        )
        return CoverageObjective(element_weights, covers)
    if family == "cut":
        n_vertices = n + rng.randint(0, 2)
        edges = []
        for u in range(n_vertices):
            for v in range(u + 1, n_vertices):
                if rng.random() < 0.5:
                    edges.append((u, v, Fraction(rng.randint(1, 5))))
        item_vertex = tuple(rng.sample(range(n_vertices), n))
        return CutObjective(n_vertices, tuple(edges), item_vertex)
    raise ValueError(f"unknown objective family {family!r}")


def _random_side(rng: random.Random, n: int, family: str):
    if family == "free":
        return FreeConstraint(n)
    if family == "uniform":
        return UniformMatroid(n, rng.randint(1, n))
    if family == "partition":
        n_classes = rng.randint(1, min(3, n))
        bucket: list[list[int]] = [[] for _ in range(n_classes)]
        for i in range(n):
            bucket[rng.randrange(n_classes)].append(i)
        classes = tuple(frozenset(b) for b in bucket if b)
        caps = tuple(rng.randint(1, 2) for _ in classes)
        return PartitionMatroid(n, classes, caps)
    raise ValueError(f"unknown side constraint family {family!r}")


def random_instance(
    rng: random.Random,
    max_items: int = 6,
    max_constraints: int = 2,
    max_bins: int = 3,
    objective_family: str | None = None,
    side_family: str | None = None,
) -> Instance:
    """Draw a small instance covering all objective and side families.

    Weights may be zero and capacities are kept tight so that packing
    actually bites; every combination of objective and side constraint
    family comes up under a long enough run of seeds.
    """
    n = rng.randint(2, max_items)
    d = rng.randint(1, max_constraints)
    constraints = []
    for _ in range(d):
        n_bins = rng.randint(1, max_bins)
        weights = tuple(Fraction(rng.randint(0, 5)) for _ in range(n))
        capacities = tuple(
            Fraction(rng.randint(1, 7)) for _ in range(n_bins)
        )
        constraints.append(MultiKnapsackConstraint(weights, capacities))
    objective = _random_objective(
        rng, n, objective_family or rng.choice(OBJECTIVE_FAMILIES)
    )
    side = _random_side(rng, n, side_family or rng.choice(SIDE_FAMILIES))
    return Instance(_labels(n), tuple(constraints), objective, side)


def monotone_instance(rng: random.Random, max_items: int = 8) -> Instance:
    """Draw a monotone coverage instance with one roomy knapsack constraint.

    Item weights stay well under the bin capacity and the uniform rank is
    small, so the difficulty sits in choosing which items to take rather
    than in squeezing them in.
    """
    n = rng.randint(4, max_items)
    n_elements = n + rng.randint(1, 3)
    element_weights = {e: Fraction(rng.randint(1, 5)) for e in range(n_elements)}
    covers = []
    for _ in range(n):
        size = rng.randint(1, 3)
        covers.append(frozenset(rng.sample(range(n_elements), size)))
    objective = CoverageObjective(element_weights, tuple(covers))
    n_bins = rng.randint(2, 3)
    capacity = Fraction(rng.randint(8, 12))
    weights = tuple(Fraction(rng.randint(1, 3)) for _ in range(n))
    constraint = MultiKnapsackConstraint(weights, (capacity,) * n_bins)
    side = UniformMatroid(n, rng.randint(2, 3))
    return Instance(_labels(n), (constraint,), objective, side)


def random_block(
    rng: random.Random, max_items: int = 10
) -> tuple[list[Fraction], list[Fraction], Fraction, int]:
    """Draw costs, weights, capacity, and bin count for one block relaxation."""
    n = rng.randint(2, max_items)
    costs = [Fraction(rng.randint(1, 9)) for _ in range(n)]
    weights = [Fraction(rng.randint(1, 6)) for _ in range(n)]
    capacity = Fraction(rng.randint(4, 9))
    n_bins = rng.randint(1, 4)
    return costs, weights, capacity, n_bins
