"""Capacity leveling for the bins of a multiple-knapsack constraint.

The solver rewrites each constraint's bin set into a geometric layout:
bins are sorted by capacity and chopped into blocks whose sizes grow in
powers of the level parameter ``n`` (the first ``n**2`` blocks hold one
bin each, the next ``n**2`` hold ``n`` bins, and so on).  Every bin then
adopts the smallest capacity of its block, so a block behaves like a
stack of identical bins.  Bins that do not fill a whole block are
dropped.

``structure_in_blocks`` builds the layout.  ``transfer_assignment``
certifies that the rewrite is cheap: it rehomes any feasible assignment
onto the leveled bins while keeping a ``1 - 1/n`` fraction of its value.
The solver itself only consumes the layout; the transfer is exercised by
the test suite as an oracle for the value guarantee.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .model import Block, InternalInvariantError
from .objectives import Objective

__all__ = ["NLeveledPartition", "structure_in_blocks", "transfer_assignment"]


@dataclass(frozen=True)
class NLeveledPartition:
    """Leveled block layout over one constraint's bins.

    ``order`` lists the original bin indices sorted by descending
    capacity; ``blocks`` covers a prefix of that order, ``dropped`` is
    the remainder.  Block ``j`` has ``n_level ** (j // n_level**2)``
    bins, all rated at the block's smallest original capacity.
    """

    n_level: int
    order: tuple[int, ...]
    blocks: tuple[Block, ...]
    dropped: tuple[int, ...]

    @property
    def used_bins(self) -> int:
        return sum(block.size for block in self.blocks)


def _block_size(index: int, n_level: int) -> int:
    return n_level ** (index // (n_level * n_level))


def structure_in_blocks(
    capacities: Sequence[Fraction], n_level: int
) -> NLeveledPartition:
    """Chop bins, sorted by descending capacity, into leveled blocks.

    Blocks are filled greedily while whole blocks still fit; each block
    is rated at the minimum capacity among its bins.  Ties in capacity
    are broken by bin index, so the layout is deterministic.
    """
    if n_level < 1:
        raise ValueError("the level parameter must be a positive integer")
    if not capacities:
        raise ValueError("cannot structure an empty bin set")
    order = sorted(range(len(capacities)), key=lambda b: (-capacities[b], b))

    blocks = []
    start = 0
    index = 0
    while True:
        size = _block_size(index, n_level)
        if start + size > len(order):
            break
        bins = tuple(order[start : start + size])
        blocks.append(Block(bins=bins, capacity=min(capacities[b] for b in bins)))
        start += size
        index += 1
    return NLeveledPartition(
        n_level=n_level,
        order=tuple(order),
        blocks=tuple(blocks),
        dropped=tuple(order[start:]),
    )


def _block_starts(structure: NLeveledPartition) -> list[int]:
    starts = [0]
    for block in structure.blocks:
        starts.append(starts[-1] + block.size)
    return starts


def _superblock_positions(
    starts: Sequence[int], level: int, rank: int, n_level: int
) -> range:
    """Positions covered by the ``rank``-th super-block of a full level."""
    first = level * n_level * n_level + rank * n_level
    return range(starts[first], starts[first + n_level])


def transfer_assignment(
    spec: Objective,
    assignment: Sequence[frozenset[int]],
    weights: Sequence[Fraction],
    capacities: Sequence[Fraction],
    structure: NLeveledPartition,
) -> tuple[frozenset[int], dict[int, frozenset[int]]]:
    """Rehome a feasible assignment onto the leveled bins.

    Returns the surviving item set and its per-bin assignment over the
    structure's bins.  The survivors retain at least a ``1 - 1/n``
    fraction of the input value: blocks are grouped into levels of equal
    block size, the cheapest super-block of each level (under ``spec``,
    conditioned on the levels that follow) is evicted, and the freed
    bins absorb their right neighbours so every load lands on a bin
    whose leveled capacity covers it.
    """
    n = structure.n_level
    if len(assignment) != len(capacities):
        raise ValueError("assignment and capacities must align")
    seen: set[int] = set()
    for b, load in enumerate(assignment):
        total = sum((weights[i] for i in load), Fraction(0))
        if total > capacities[b]:
            raise ValueError(f"assignment overfills bin {b}")
        if seen & set(load):
            raise ValueError("assignment reuses an item across bins")
        seen |= set(load)

    starts = _block_starts(structure)
    used = structure.used_bins
    total_bins = len(structure.order)
    loads = [frozenset(assignment[b]) for b in structure.order]

    # Blocks 0..len-1 plus a pseudo block for the dropped bins form the
    # level grid; the grid's last level is never evicted.
    n_blocks = len(structure.blocks)
    last_level = n_blocks // (n * n)
    if last_level == 0:
        selected = frozenset(seen)
        placed = {
            structure.order[p]: loads[p] for p in range(used)
        }
        _check_transfer(placed, weights, structure)
        return selected, placed

    # Eviction: pick, per full level, the super-block whose removal
    # keeps the most value, conditioning on everything assigned to the
    # last level (dropped bins included).
    tail_start = starts[last_level * n * n]
    tail_items = frozenset().union(*loads[tail_start:total_bins], frozenset())
    kept = set().union(*loads[:tail_start])
    shuffled = list(loads)
    for level in range(last_level):
        best_rank = 0
        best_value = None
        parts = []
        for rank in range(n):
            span = _superblock_positions(starts, level, rank, n)
            part = frozenset().union(*(loads[p] for p in span), frozenset())
            parts.append(part)
            value = spec.evaluate((kept - part) | tail_items)
            if best_value is None or value > best_value:
                best_value = value
                best_rank = rank
        kept -= parts[best_rank]
        evicted = _superblock_positions(starts, level, best_rank, n)
        vacated = _superblock_positions(starts, level, n - 1, n)
        # Shuffle: the level's final super-block moves into the evicted
        # slots (never to a smaller bin, since the order is sorted).
        for target, source in zip(evicted, vacated):
            shuffled[target] = shuffled[source]
            shuffled[source] = frozenset()

    # Shift: every block hands its content to the block before it; the
    # first block of each level lands on the super-block vacated at the
    # end of the previous level.  The first level keeps its survivors
    # in place.
    final: dict[int, frozenset[int]] = {}

    def _place(position: int, load: frozenset[int]) -> None:
        if not load:
            return
        if position in final:
            raise InternalInvariantError("transfer shift collided on a bin")
        final[position] = load

    for p in range(n * n - n):
        _place(p, shuffled[p])
    for level in range(1, last_level):
        step = n**level
        span = range(starts[level * n * n], starts[(level + 1) * n * n] - n * step)
        for p in span:
            _place(p - step, shuffled[p])
    step = n**last_level
    for p in range(tail_start, total_bins):
        _place(p - step, shuffled[p])

    placed = {
        structure.order[p]: final.get(p, frozenset()) for p in range(used)
    }
    selected = frozenset(kept | tail_items)
    if frozenset().union(*placed.values(), frozenset()) != selected:
        raise InternalInvariantError("transfer lost track of surviving items")
    _check_transfer(placed, weights, structure)
    return selected, placed


def _check_transfer(
    placed: dict[int, frozenset[int]],
    weights: Sequence[Fraction],
    structure: NLeveledPartition,
) -> None:
    for block in structure.blocks:
        for b in block.bins:
            total = sum((weights[i] for i in placed[b]), Fraction(0))
            if total > block.capacity:
                raise InternalInvariantError(
                    "transfer overfilled a leveled bin"
                )
