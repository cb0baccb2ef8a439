"""Core data model: items, knapsack constraints, instances, solutions, and JSON io.

All weights and capacities are kept as :class:`fractions.Fraction` so that
feasibility verdicts are exact.  Items are referenced internally by normalized
ids ``0..n-1``; the original labels are kept on the instance for io.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import hull as _hull
from . import objectives as _objectives


class InstanceFormatError(ValueError):
    """Raised when an instance or solution document is malformed."""


class InternalInvariantError(RuntimeError):
    """Raised when a solver invariant that should hold by construction fails."""


def parse_number(value) -> Fraction:
    """Parse a JSON number into an exact Fraction.

    Accepts ints and decimal strings ("0.35", "12").  Floats are rejected;
    `load_instance` arranges for JSON float literals to arrive here as their
    source text, so exactness is never lost silently.
    """
    if isinstance(value, bool):
        raise InstanceFormatError(f"expected a number, got boolean {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise InstanceFormatError(f"cannot parse number {value!r}") from exc
    if isinstance(value, float):
        raise InstanceFormatError(
            f"raw float {value!r} in document; use an int or a decimal string"
        )
    raise InstanceFormatError(f"expected a number, got {type(value).__name__}")


def number_to_json(value: Fraction):
    """Render an exact Fraction back to JSON (int, or decimal string)."""
    value = Fraction(value)
    if value.denominator == 1:
        return int(value)
    den = value.denominator
    for p in (2, 5):
        while den % p == 0:
            den //= p
    if den != 1:
        raise InstanceFormatError(
            f"{value} has no finite decimal representation; "
            "use a denominator with only factors 2 and 5"
        )
    sign = "-" if value < 0 else ""
    mag = abs(value)
    digits = 0
    while mag.denominator != 1:
        mag *= 10
        digits += 1
    text = str(mag.numerator).rjust(digits + 1, "0")
    return f"{sign}{text[:-digits]}.{text[-digits:]}"


@dataclass(frozen=True)
class Item:
    """An item with its normalized id and original label."""

    id: int
    label: str


@dataclass(frozen=True)
class MultiKnapsackConstraint:
    """One multiple-knapsack constraint: per-item weights and bin capacities.

    ``weights[i]`` is the weight of item ``i`` under this constraint and
    ``capacities[b]`` the capacity of bin ``b``.  Bins are referenced by
    index ``0..len(capacities)-1``.
    """

    weights: tuple[Fraction, ...]
    capacities: tuple[Fraction, ...]

    def __post_init__(self):
        if any(w < 0 for w in self.weights):
            raise InstanceFormatError("item weights must be non-negative")
        if any(c < 0 for c in self.capacities):
            raise InstanceFormatError("bin capacities must be non-negative")
        if not self.capacities:
            raise InstanceFormatError("a constraint needs at least one bin")

    @property
    def n_bins(self) -> int:
        return len(self.capacities)

    def weight_of(self, items: Iterable[int]) -> Fraction:
        weights = self.weights
        return sum((weights[i] for i in items), Fraction(0))


@dataclass(frozen=True)
class Block:
    """A set of bins of equal capacity within one constraint."""

    bins: tuple[int, ...]
    capacity: Fraction

    @property
    def size(self) -> int:
        return len(self.bins)


@dataclass(frozen=True)
class Instance:
    """A full problem instance over normalized item ids."""

    labels: tuple[str, ...]
    constraints: tuple[MultiKnapsackConstraint, ...]
    objective: _objectives.Objective
    additional: _hull.AdditionalConstraint

    def __post_init__(self):
        n = len(self.labels)
        if len(set(self.labels)) != n:
            raise InstanceFormatError("item labels must be unique")
        for t, mkc in enumerate(self.constraints):
            if len(mkc.weights) != n:
                raise InstanceFormatError(
                    f"constraint {t} has {len(mkc.weights)} weights for {n} items"
                )
        if self.objective.n_items != n:
            raise InstanceFormatError("objective does not match the item count")
        self.additional.check_ground_set(n)

    @property
    def n_items(self) -> int:
        return len(self.labels)

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)

    def id_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise InstanceFormatError(f"unknown item label {label!r}") from None


@dataclass(frozen=True)
class Solution:
    """A selected item set plus one bin assignment per constraint."""

    selected: frozenset[int]
    assignments: tuple[tuple[frozenset[int], ...], ...]

    @staticmethod
    def empty(instance: Instance) -> "Solution":
        return Solution(
            frozenset(),
            tuple(
                tuple(frozenset() for _ in range(mkc.n_bins))
                for mkc in instance.constraints
            ),
        )


def validate_solution(instance: Instance, solution: Solution) -> list[str]:
    """Check a solution against an instance; returns a list of violations.

    An empty list means the solution is feasible.  All capacity comparisons
    are exact rational arithmetic.
    """
    problems: list[str] = []
    n = instance.n_items
    if any(i < 0 or i >= n for i in solution.selected):
        problems.append("selected contains out-of-range item ids")
        return problems
    if len(solution.assignments) != instance.n_constraints:
        problems.append(
            f"expected {instance.n_constraints} assignments, "
            f"got {len(solution.assignments)}"
        )
        return problems
    for t, (mkc, bins) in enumerate(zip(instance.constraints, solution.assignments)):
        if len(bins) != mkc.n_bins:
            problems.append(f"constraint {t}: expected {mkc.n_bins} bins")
            continue
        seen: set[int] = set()
        for b, content in enumerate(bins):
            overlap = seen & content
            if overlap:
                problems.append(
                    f"constraint {t}: items {sorted(overlap)} appear in several bins"
                )
            seen |= content
            load = mkc.weight_of(content)
            if load > mkc.capacities[b]:
                problems.append(
                    f"constraint {t} bin {b}: load {load} exceeds "
                    f"capacity {mkc.capacities[b]}"
                )
        if seen != set(solution.selected):
            problems.append(
                f"constraint {t}: assigned items do not match the selected set"
            )
    if not instance.additional.is_member(solution.selected):
        problems.append("selected set violates the additional constraint")
    return problems


def _parse_objective(doc, n: int, labels: Sequence[str]) -> _objectives.Objective:
    if not isinstance(doc, Mapping) or "kind" not in doc:
        raise InstanceFormatError("objective must be an object with a 'kind'")
    kind = doc["kind"]
    if kind == "modular":
        profits = [parse_number(v) for v in doc.get("profits", [])]
        if len(profits) != n:
            raise InstanceFormatError("modular objective needs one profit per item")
        offset = parse_number(doc.get("offset", 0))
        return _objectives.ModularObjective(offset, tuple(profits))
    if kind == "coverage":
        elements = doc.get("elements")
        if not isinstance(elements, Mapping):
            raise InstanceFormatError("coverage objective needs an 'elements' map")
        weights = {str(e): parse_number(v) for e, v in elements.items()}
        covers_doc = doc.get("covers")
        if not isinstance(covers_doc, list) or len(covers_doc) != n:
            raise InstanceFormatError("coverage objective needs one cover per item")
        covers = []
        for cover in covers_doc:
            cover = frozenset(str(e) for e in cover)
            missing = cover - weights.keys()
            if missing:
                raise InstanceFormatError(f"cover uses unknown elements {sorted(missing)}")
            covers.append(cover)
        return _objectives.CoverageObjective(weights, tuple(covers))
    if kind == "cut":
        vertices = [str(v) for v in doc.get("vertices", [])]
        if len(set(vertices)) != len(vertices):
            raise InstanceFormatError("cut vertices must be unique")
        index = {v: k for k, v in enumerate(vertices)}
        edges = []
        for entry in doc.get("edges", []):
            if len(entry) != 3:
                raise InstanceFormatError("cut edges are [u, v, weight] triples")
            u, v, weight = entry
            if str(u) not in index or str(v) not in index:
                raise InstanceFormatError(f"edge ({u}, {v}) uses unknown vertices")
            edges.append((index[str(u)], index[str(v)], parse_number(weight)))
        item_vertex_doc = doc.get("item_vertex")
        if not isinstance(item_vertex_doc, list) or len(item_vertex_doc) != n:
            raise InstanceFormatError("cut objective needs one vertex per item")
        item_vertex = []
        for v in item_vertex_doc:
            if str(v) not in index:
                raise InstanceFormatError(f"item mapped to unknown vertex {v!r}")
            item_vertex.append(index[str(v)])
        return _objectives.CutObjective(len(vertices), tuple(edges), tuple(item_vertex))
    if kind == "table":
        values = [parse_number(v) for v in doc.get("values", [])]
        return _objectives.TableObjective.from_values(n, tuple(values))
    raise InstanceFormatError(f"unknown objective kind {kind!r}")


def _parse_additional(doc, n: int, labels: Sequence[str]) -> _hull.AdditionalConstraint:
    if doc is None:
        return _hull.FreeConstraint(n)
    if not isinstance(doc, Mapping) or "kind" not in doc:
        raise InstanceFormatError("additional must be an object with a 'kind'")
    kind = doc["kind"]
    if kind == "free":
        return _hull.FreeConstraint(n)
    if kind == "uniform":
        rank = doc.get("rank")
        if not isinstance(rank, int) or isinstance(rank, bool) or rank < 0:
            raise InstanceFormatError("uniform constraint needs an integer 'rank' >= 0")
        return _hull.UniformMatroid(n, rank)
    if kind == "partition":
        classes_doc = doc.get("classes")
        caps_doc = doc.get("caps")
        if not isinstance(classes_doc, list) or not isinstance(caps_doc, list):
            raise InstanceFormatError("partition constraint needs 'classes' and 'caps'")
        if len(classes_doc) != len(caps_doc):
            raise InstanceFormatError("'classes' and 'caps' must have equal length")
        label_to_id = {label: i for i, label in enumerate(labels)}
        classes = []
        for group in classes_doc:
            ids = []
            for label in group:
                if label not in label_to_id:
                    raise InstanceFormatError(f"unknown item label {label!r} in class")
                ids.append(label_to_id[label])
            classes.append(frozenset(ids))
        caps = []
        for cap in caps_doc:
            if not isinstance(cap, int) or isinstance(cap, bool) or cap < 0:
                raise InstanceFormatError("partition caps must be integers >= 0")
            caps.append(cap)
        return _hull.PartitionMatroid(n, tuple(classes), tuple(caps))
    if kind in ("intersection", "matroid-intersection", "matching"):
        raise InstanceFormatError(
            f"additional constraint kind {kind!r} is recognized but not supported; "
            "supported kinds are 'free', 'uniform', and 'partition'"
        )
    raise InstanceFormatError(f"unknown additional constraint kind {kind!r}")


def instance_from_dict(doc) -> Instance:
    if not isinstance(doc, Mapping):
        raise InstanceFormatError("instance document must be a JSON object")
    items = doc.get("items")
    if not isinstance(items, list) or not all(isinstance(s, str) for s in items):
        raise InstanceFormatError("'items' must be a list of string labels")
    labels = tuple(items)
    n = len(labels)
    constraints_doc = doc.get("constraints")
    if not isinstance(constraints_doc, list) or not constraints_doc:
        raise InstanceFormatError("'constraints' must be a non-empty list")
    constraints = []
    for entry in constraints_doc:
        weights = [parse_number(v) for v in entry.get("weights", [])]
        if len(weights) != n:
            raise InstanceFormatError("each constraint needs one weight per item")
        capacities = [parse_number(v) for v in entry.get("bins", [])]
        constraints.append(MultiKnapsackConstraint(tuple(weights), tuple(capacities)))
    objective = _parse_objective(doc.get("objective"), n, labels)
    additional = _parse_additional(doc.get("additional"), n, labels)
    return Instance(labels, tuple(constraints), objective, additional)


def load_instance(path) -> Instance:
    """Load an instance from a JSON file; numbers are parsed exactly."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text, parse_float=str)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"invalid JSON in {path}: {exc}") from exc
    return instance_from_dict(doc)


def instance_to_dict(instance: Instance) -> dict:
    doc = {
        "items": list(instance.labels),
        "constraints": [
            {
                "weights": [number_to_json(w) for w in mkc.weights],
                "bins": [number_to_json(c) for c in mkc.capacities],
            }
            for mkc in instance.constraints
        ],
        "objective": instance.objective.to_payload(),
        "additional": instance.additional.to_payload(instance.labels),
    }
    return doc


def save_instance(instance: Instance, path) -> None:
    Path(path).write_text(
        json.dumps(instance_to_dict(instance), indent=2) + "\n", encoding="utf-8"
    )


def solution_to_dict(instance: Instance, solution: Solution) -> dict:
    return {
        "selected": sorted(instance.labels[i] for i in solution.selected),
        "assignments": [
            [sorted(instance.labels[i] for i in content) for content in bins]
            for bins in solution.assignments
        ],
    }


def save_solution(instance: Instance, solution: Solution, path) -> None:
    Path(path).write_text(
        json.dumps(solution_to_dict(instance, solution), indent=2) + "\n",
        encoding="utf-8",
    )


def load_solution(instance: Instance, path) -> Solution:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text, parse_float=str)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(doc, Mapping):
        raise InstanceFormatError("solution document must be a JSON object")
    selected_doc = doc.get("selected")
    if not isinstance(selected_doc, list):
        raise InstanceFormatError("'selected' must be a list of item labels")
    selected = frozenset(instance.id_of(str(label)) for label in selected_doc)
    assignments_doc = doc.get("assignments")
    if not isinstance(assignments_doc, list):
        raise InstanceFormatError("'assignments' must be a list (one per constraint)")
    if len(assignments_doc) != instance.n_constraints:
        raise InstanceFormatError(
            f"expected {instance.n_constraints} assignments, got {len(assignments_doc)}"
        )
    assignments = []
    for t, bins_doc in enumerate(assignments_doc):
        mkc = instance.constraints[t]
        if not isinstance(bins_doc, list) or len(bins_doc) != mkc.n_bins:
            raise InstanceFormatError(
                f"constraint {t}: expected {mkc.n_bins} bin lists"
            )
        assignments.append(
            tuple(
                frozenset(instance.id_of(str(label)) for label in content)
                for content in bins_doc
            )
        )
    return Solution(selected, tuple(assignments))
