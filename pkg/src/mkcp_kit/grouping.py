"""Weight grouping of fractional block mass, and the packing it licenses.

Items are split against a block capacity: anything above a mu fraction of
the capacity is heavy, the rest is light.  Heavy items are scanned from
heaviest to lightest and cut into consecutive groups, each closed as soon
as it has collected mu * |bins| of fractional mass.  A set whose overlap
with every group is small can then be packed into few bins: configuration
mass tells how many bins of each shape to open, and items of one group slide
into the slots that the previous (heavier) group occupied in those shapes.
Light items go in by first fit at the end.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence


class PackingError(RuntimeError):
    """Raised when a packing precondition does not hold."""


def _mass(point, item) -> Fraction:
    if isinstance(point, Mapping):
        return Fraction(point.get(item, 0))
    return Fraction(point[item])


def classify(
    items: Iterable[int],
    weights: Sequence[Fraction],
    capacity: Fraction,
    mu,
) -> tuple[list[int], list[int], list[int]]:
    """Split items into heavy, light, and oversize against one block."""
    capacity = Fraction(capacity)
    threshold = Fraction(mu) * capacity
    heavy, light, oversize = [], [], []
    for i in sorted(items):
        w = Fraction(weights[i])
        if w > capacity:
            oversize.append(i)
        elif w > threshold:
            heavy.append(i)
        else:
            light.append(i)
    return heavy, light, oversize


@dataclass
class Grouping:
    mu: Fraction
    n_bins: int
    capacity: Fraction
    order: tuple[int, ...]
    groups: tuple[tuple[int, ...], ...]
    light: tuple[int, ...]
    oversize: tuple[int, ...]

    def group_index(self, item: int) -> int:
        for k, group in enumerate(self.groups):
            if item in group:
                return k
        raise KeyError(item)


def compute_grouping(
    point,
    items: Iterable[int],
    weights: Sequence[Fraction],
    capacity: Fraction,
    n_bins: int,
    mu,
) -> Grouping:
    """Group the heavy items of a fractional point, heaviest first.

    Groups close once they hold mu * n_bins fractional mass; the final group
    absorbs whatever remains, which may be nothing.  Oversize items must
    carry no mass.
    """
    mu = Fraction(mu)
    capacity = Fraction(capacity)
    heavy, light, oversize = classify(items, weights, capacity, mu)
    for i in oversize:
        if _mass(point, i) != 0:
            raise ValueError(f"item {i} is wider than the block but carries mass")
    order = tuple(sorted(heavy, key=lambda i: (-Fraction(weights[i]), i)))
    groups: list[tuple[int, ...]] = []
    target = mu * n_bins
    if order:
        start = 0
        while start < len(order):
            running = Fraction(0)
            end = None
            for pos in range(start, len(order)):
                running += _mass(point, order[pos])
                if running >= target:
                    end = pos
                    break
            if end is None:
                groups.append(order[start:])
                start = len(order)
            else:
                groups.append(order[start : end + 1])
                start = end + 1
                if start == len(order):
                    # the cut landed on the last heavy item, leaving a
                    # final group with nothing in it
                    groups.append(())
    return Grouping(
        mu=mu,
        n_bins=n_bins,
        capacity=capacity,
        order=order,
        groups=tuple(groups),
        light=tuple(light),
        oversize=tuple(oversize),
    )


@dataclass
class PackResult:
    bins: tuple[frozenset, ...]
    opened: int
    typed: int
    singles: int
    light_new: int


def pack_with_grouping(
    selected: Iterable[int],
    grouping: Grouping,
    config_mass: Mapping,
    weights: Sequence[Fraction],
) -> PackResult:
    """Pack a compliant set into bins shaped by the configuration mass.

    Every positive-mass configuration contributes its group signature; the
    rounded-up mass per signature says how many bins of that shape to open.
    Items of group k (second group onward) take slots the shape reserved for
    group k-1, whose items are at least as heavy.  First-group items get a
    bin each, and light items finish by first fit.  A missing slot or an
    overfull bin means the preconditions were violated.
    """
    capacity = grouping.capacity
    selected = sorted(set(selected))
    membership = {}
    for k, group in enumerate(grouping.groups):
        for i in group:
            membership[i] = k
    light_set = set(grouping.light)
    for i in selected:
        if i not in membership and i not in light_set:
            raise PackingError(f"item {i} is neither grouped nor light here")

    signatures: dict[tuple[int, ...], Fraction] = {}
    for config, mass in config_mass.items():
        mass = Fraction(mass)
        if mass <= 0:
            continue
        signature = tuple(
            sum(1 for i in config if membership.get(i) == k)
            for k in range(len(grouping.groups))
        )
        signatures[signature] = signatures.get(signature, Fraction(0)) + mass

    class _Bin:
        __slots__ = ("signature", "contents", "load")

        def __init__(self, signature):
            self.signature = signature
            self.contents: set = set()
            self.load = Fraction(0)

        def add(self, item, weight):
            self.contents.add(item)
            self.load += weight

    bins: list[_Bin] = []
    for signature in sorted(signatures):
        count = math.ceil(signatures[signature])
        bins.extend(_Bin(signature) for _ in range(count))
    typed = len(bins)

    for k in range(1, len(grouping.groups)):
        group_items = [i for i in grouping.order if membership.get(i) == k and i in selected]
        for i in group_items:
            w = Fraction(weights[i])
            for b in bins:
                slots = b.signature[k - 1] if b.signature else 0
                used = sum(1 for j in b.contents if membership.get(j) == k)
                if used < slots:
                    if b.load + w > capacity:
                        raise PackingError(f"slot for item {i} would overflow its bin")
                    b.add(i, w)
                    break
            else:
                raise PackingError(f"no slot left for item {i} in group {k + 1}")

    singles = 0
    if grouping.groups:
        for i in grouping.order:
            if membership.get(i) == 0 and i in selected:
                single = _Bin(())
                single.add(i, Fraction(weights[i]))
                bins.append(single)
                singles += 1

    light_new = 0
    for i in selected:
        if i not in light_set:
            continue
        w = Fraction(weights[i])
        if w > capacity:
            raise PackingError(f"light item {i} does not fit any bin")
        for b in bins:
            if b.load + w <= capacity:
                b.add(i, w)
                break
        else:
            fresh = _Bin(())
            fresh.add(i, w)
            bins.append(fresh)
            light_new += 1

    opened = len(bins)
    filled = tuple(frozenset(b.contents) for b in bins if b.contents)
    return PackResult(
        bins=filled, opened=opened, typed=typed, singles=singles, light_new=light_new
    )


def first_fit(
    items: Iterable[int],
    weights: Sequence[Fraction],
    capacity: Fraction,
    bins: list[set] | None = None,
) -> list[set]:
    """First-fit packing in the given item order, extending ``bins``."""
    capacity = Fraction(capacity)
    result: list[set] = [set(b) for b in bins] if bins else []
    loads = [sum((Fraction(weights[i]) for i in b), Fraction(0)) for b in result]
    for i in items:
        w = Fraction(weights[i])
        if w > capacity:
            raise PackingError(f"item {i} is wider than the bin capacity")
        for idx, load in enumerate(loads):
            if load + w <= capacity:
                result[idx].add(i)
                loads[idx] = load + w
                break
        else:
            result.append({i})
            loads.append(w)
    return result


def ffd_bin_pack(
    items: Iterable[int],
    weights: Sequence[Fraction],
    capacity: Fraction,
) -> list[frozenset]:
    """First-fit-decreasing packing; heaviest items placed first."""
    ordered = sorted(items, key=lambda i: (-Fraction(weights[i]), i))
    packed = first_fit(ordered, weights, capacity)
    return [frozenset(b) for b in packed]
