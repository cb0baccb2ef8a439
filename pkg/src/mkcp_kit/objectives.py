"""Objective families (modular, coverage, cut, table) and value oracles.

Every objective evaluates exactly, returning a Fraction.  The table family
keeps an explicit value for each subset of a small ground set and is checked
for submodularity when built.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence


class ObjectiveError(ValueError):
    """Raised when an objective definition is invalid."""


class Objective:
    """Base class for set-function objectives over ids ``0..n_items-1``."""

    n_items: int

    def evaluate(self, selected: Iterable[int]) -> Fraction:
        raise NotImplementedError

    def is_monotone(self) -> bool:
        raise NotImplementedError

    def modular_coefficients(self) -> Optional[tuple[Fraction, tuple[Fraction, ...]]]:
        """Return (offset, profits) when the objective is modular, else None."""
        return None

    def to_payload(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ModularObjective(Objective):
    offset: Fraction
    profits: tuple[Fraction, ...]

    def __post_init__(self):
        negative = sum((p for p in self.profits if p < 0), Fraction(0))
        if self.offset + negative < 0:
            raise ObjectiveError(
                "modular objective can go negative; raise the offset"
            )

    @property
    def n_items(self) -> int:
        return len(self.profits)

    def evaluate(self, selected: Iterable[int]) -> Fraction:
        return self.offset + sum((self.profits[i] for i in selected), Fraction(0))

    def is_monotone(self) -> bool:
        return all(p >= 0 for p in self.profits)

    def modular_coefficients(self):
        return self.offset, self.profits

    def to_payload(self) -> dict:
        from .model import number_to_json

        return {
            "kind": "modular",
            "offset": number_to_json(self.offset),
            "profits": [number_to_json(p) for p in self.profits],
        }


class CoverageObjective(Objective):
    """Weighted coverage: the value of a set is the weight of the union it covers."""

    def __init__(self, element_weights: Mapping[str, Fraction], covers: tuple[frozenset[str], ...]):
        for element, weight in element_weights.items():
            if weight < 0:
                raise ObjectiveError(f"element {element!r} has negative weight")
        self.element_weights = dict(sorted(element_weights.items()))
        self.covers = covers

    @property
    def n_items(self) -> int:
        return len(self.covers)

    def evaluate(self, selected: Iterable[int]) -> Fraction:
        covered: set[str] = set()
        for i in selected:
            covered |= self.covers[i]
        return sum((self.element_weights[e] for e in covered), Fraction(0))

    def is_monotone(self) -> bool:
        return True

    def to_payload(self) -> dict:
        from .model import number_to_json

        return {
            "kind": "coverage",
            "elements": {e: number_to_json(w) for e, w in self.element_weights.items()},
            "covers": [sorted(cover) for cover in self.covers],
        }


class CutObjective(Objective):
    """Undirected weighted cut between selected-item vertices and the rest."""

    def __init__(
        self,
        n_vertices: int,
        edges: tuple[tuple[int, int, Fraction], ...],
        item_vertex: tuple[int, ...],
    ):
        for u, v, weight in edges:
            if weight < 0:
                raise ObjectiveError("cut edge weights must be non-negative")
            if u == v:
                raise ObjectiveError("cut edges must join distinct vertices")
        if len(set(item_vertex)) != len(item_vertex):
            raise ObjectiveError("each item needs its own vertex")
        self.n_vertices = n_vertices
        self.edges = edges
        self.item_vertex = item_vertex
        self._vertex_labels = [f"v{k}" for k in range(n_vertices)]

    @property
    def n_items(self) -> int:
        return len(self.item_vertex)

    def evaluate(self, selected: Iterable[int]) -> Fraction:
        inside = {self.item_vertex[i] for i in selected}
        total = Fraction(0)
        for u, v, weight in self.edges:
            if (u in inside) != (v in inside):
                total += weight
        return total

    def is_monotone(self) -> bool:
        return not self.edges

    def to_payload(self) -> dict:
        from .model import number_to_json

        names = self._vertex_labels
        return {
            "kind": "cut",
            "vertices": list(names),
            "edges": [[names[u], names[v], number_to_json(w)] for u, v, w in self.edges],
            "item_vertex": [names[v] for v in self.item_vertex],
        }


class TableObjective(Objective):
    """Explicit subset table for ground sets of at most 16 items."""

    MAX_ITEMS = 16

    def __init__(self, n_items: int, values: tuple[Fraction, ...], monotone: bool):
        self._n_items = n_items
        self.values = values
        self._monotone = monotone

    @property
    def n_items(self) -> int:
        return self._n_items

    @staticmethod
    def from_values(n_items: int, values: tuple[Fraction, ...]) -> "TableObjective":
        if n_items > TableObjective.MAX_ITEMS:
            raise ObjectiveError(
                f"table objective supports at most {TableObjective.MAX_ITEMS} items"
            )
        if len(values) != 1 << n_items:
            raise ObjectiveError(
                f"table needs {1 << n_items} values for {n_items} items, got {len(values)}"
            )
        if any(v < 0 for v in values):
            raise ObjectiveError("table values must be non-negative")
        _check_table_submodular(n_items, values)
        monotone = _table_is_monotone(n_items, values)
        return TableObjective(n_items, values, monotone)

    def evaluate(self, selected: Iterable[int]) -> Fraction:
        mask = 0
        for i in selected:
            mask |= 1 << i
        return self.values[mask]

    def is_monotone(self) -> bool:
        return self._monotone

    def to_payload(self) -> dict:
        from .model import number_to_json

        return {"kind": "table", "values": [number_to_json(v) for v in self.values]}


class ShiftedObjective(Objective):
    """The objective ``T -> f(base | T)``, used by residual instances."""

    def __init__(self, inner: Objective, base: frozenset[int]):
        self.inner = inner
        self.base = frozenset(base)

    @property
    def n_items(self) -> int:
        return self.inner.n_items

    def evaluate(self, selected: Iterable[int]) -> Fraction:
        return self.inner.evaluate(self.base | set(selected))

    def is_monotone(self) -> bool:
        return self.inner.is_monotone()

    def modular_coefficients(self):
        inner = self.inner.modular_coefficients()
        if inner is None:
            return None
        _, profits = inner
        offset = self.inner.evaluate(self.base)
        masked = tuple(
            Fraction(0) if i in self.base else profits[i] for i in range(len(profits))
        )
        return offset, masked


def _check_table_submodular(n: int, values: Sequence[Fraction]) -> None:
    if n <= 12:
        full = 1 << n
        for mask in range(full):
            free = [i for i in range(n) if not mask & (1 << i)]
            base = values[mask]
            for a in range(len(free)):
                bit_a = 1 << free[a]
                with_a = values[mask | bit_a]
                for b in range(a + 1, len(free)):
                    bit_b = 1 << free[b]
                    if with_a + values[mask | bit_b] < values[mask | bit_a | bit_b] + base:
                        raise ObjectiveError(
                            f"table violates submodularity at mask {mask} "
                            f"with items {free[a]} and {free[b]}"
                        )
        return
    import numpy as np

    data = np.array([float(v) for v in values])
    masks = np.arange(1 << n)
    for i in range(n):
        bit_i = 1 << i
        for j in range(i + 1, n):
            bit_j = 1 << j
            base = masks[(masks & bit_i == 0) & (masks & bit_j == 0)]
            lhs = data[base | bit_i] + data[base | bit_j]
            rhs = data[base | bit_i | bit_j] + data[base]
            if np.any(lhs < rhs - 1e-9):
                raise ObjectiveError(
                    f"table violates submodularity for items {i} and {j}"
                )


def _table_is_monotone(n: int, values: Sequence[Fraction]) -> bool:
    for mask in range(1 << n):
        for i in range(n):
            bit = 1 << i
            if not mask & bit and values[mask | bit] < values[mask]:
                return False
    return True


def evaluate(spec: Objective, selected: Iterable[int]) -> Fraction:
    return spec.evaluate(selected)


def marginal(spec: Objective, selected: frozenset[int], item: int) -> Fraction:
    if item in selected:
        return Fraction(0)
    return spec.evaluate(selected | {item}) - spec.evaluate(selected)


def multilinear_estimate(spec: Objective, point: Sequence, rng, samples: int) -> float:
    """Monte Carlo estimate of the multilinear extension at ``point``.

    For a modular objective the closed form ``f(empty) + sum p_i * x_i`` is
    returned instead, with no sampling.
    """
    coeffs = spec.modular_coefficients()
    if coeffs is not None:
        offset, profits = coeffs
        return float(offset + sum(Fraction(p) * Fraction(x) for p, x in zip(profits, point)))
    if samples <= 0:
        raise ValueError("samples must be positive")
    n = spec.n_items
    total = 0.0
    for _ in range(samples):
        chosen = [i for i in range(n) if rng.random() < point[i]]
        total += float(spec.evaluate(chosen))
    return total / samples


def purge(spec: Objective, selected: Iterable[int]) -> frozenset[int]:
    """Drop items whose marginal is negative, scanning ids in ascending order.

    The kept set J satisfies f(J) >= f(empty), and for monotone objectives
    the input comes back unchanged.
    """
    kept: set[int] = set()
    value = spec.evaluate(kept)
    for i in sorted(set(selected)):
        candidate = spec.evaluate(kept | {i})
        if candidate - value >= 0:
            kept.add(i)
            value = candidate
    return frozenset(kept)


def shifted(spec: Objective, base: frozenset[int]) -> Objective:
    if not base:
        return spec
    return ShiftedObjective(spec, base)
