"""Assigning fractionally selected items to blocks, one block each.

The fractional point spreads an item's mass over several blocks.  To round,
each item must belong to a single block, without concentrating too much
mass in any weight group or exceeding a block's fractional weight budget by
more than one item.  This module reshuffles the per-block mass vectors into
such an assignment.

The reshuffle works on an abstract family of budgeted vectors: start from
vectors that sum to the target point, each within its budget, and repeatedly
move mass along cycles of the bipartite graph linking items split across
several vectors.  Moves follow an exact-rational direction chosen in the
nullspace of the cycle's budget coefficients, so no budget ever grows; a
vector that ends as the sole owner of its items over-spends its budget by at
most a single item.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .grouping import Grouping, compute_grouping
from .model import Block, InternalInvariantError


@dataclass
class Channel:
    """A budgeted mass vector taking part in the reshuffle."""

    label: tuple
    coefficients: dict[int, Fraction]
    bound: Fraction
    initial: dict[int, Fraction]


@dataclass
class MakePerfectResult:
    vectors: list[dict[int, Fraction]]
    iterations: int
    initial_edges: int


def _broken_graph(vectors: Sequence[dict[int, Fraction]]):
    owners: dict[int, list[int]] = {}
    for r, vec in enumerate(vectors):
        for i in vec:
            owners.setdefault(i, []).append(r)
    broken_items = sorted(i for i, rs in owners.items() if len(rs) >= 2)
    broken_set = set(broken_items)
    broken_vectors = sorted(
        r for r, vec in enumerate(vectors) if any(i in broken_set for i in vec)
    )
    return broken_items, broken_vectors, owners


def _find_cycle(adjacency: dict) -> list:
    """Walk a graph of minimum degree two until a vertex repeats."""
    start = min(adjacency)
    path = [start]
    index = {start: 0}
    previous = None
    while True:
        here = path[-1]
        step = next(u for u in adjacency[here] if u != previous)
        if step in index:
            return path[index[step] :]
        index[step] = len(path)
        path.append(step)
        previous = here


def _nullspace_vector(rows: list[list[Fraction]], width: int) -> list[Fraction]:
    """A nonzero rational solution of ``rows @ v = 0`` (fewer rows than cols)."""
    matrix = [row[:] for row in rows]
    pivot_cols: list[int] = []
    rank = 0
    for col in range(width):
        pivot = next((r for r in range(rank, len(matrix)) if matrix[r][col] != 0), None)
        if pivot is None:
            continue
        matrix[rank], matrix[pivot] = matrix[pivot], matrix[rank]
        lead = matrix[rank][col]
        matrix[rank] = [v / lead for v in matrix[rank]]
        for r in range(len(matrix)):
            if r != rank and matrix[r][col] != 0:
                factor = matrix[r][col]
                matrix[r] = [a - factor * b for a, b in zip(matrix[r], matrix[rank])]
        pivot_cols.append(col)
        rank += 1
        if rank == len(matrix):
            break
    free = next(c for c in range(width) if c not in pivot_cols)
    solution = [Fraction(0)] * width
    solution[free] = Fraction(1)
    for row_idx, col in enumerate(pivot_cols):
        solution[col] = -matrix[row_idx][free]
    return solution


def make_perfect(
    x: Mapping[int, Fraction], channels: Sequence[Channel]
) -> MakePerfectResult:
    """Reshuffle channel vectors until every item lives in a single channel.

    The channels' initial vectors must sum to ``x`` exactly, and each must
    satisfy its own budget.  The result preserves both the sum and each
    channel's support, and every channel meets its budget once its heaviest
    single item is excused.
    """
    vectors: list[dict[int, Fraction]] = [
        {i: Fraction(v) for i, v in ch.initial.items() if Fraction(v) != 0}
        for ch in channels
    ]
    initial_edges = sum(len(vec) for vec in vectors)
    iterations = 0
    while True:
        broken_items, broken_vectors, owners = _broken_graph(vectors)
        if not broken_items:
            break
        iterations += 1
        if iterations > initial_edges + 1:
            raise InternalInvariantError("reshuffle failed to settle")
        broken_set = set(broken_items)
        degree_one = None
        for r in broken_vectors:
            inside = [i for i in vectors[r] if i in broken_set]
            if len(inside) == 1:
                degree_one = (r, inside[0])
                break
        if degree_one is not None:
            r, i = degree_one
            vectors[r][i] = Fraction(x[i])
            for other in owners[i]:
                if other != r:
                    del vectors[other][i]
            continue

        adjacency: dict = {}
        for i in broken_items:
            adjacency[("i", i)] = [("r", r) for r in sorted(owners[i])]
        for r in broken_vectors:
            adjacency[("r", r)] = [
                ("i", i) for i in sorted(vectors[r]) if i in broken_set
            ]
        cycle = _find_cycle(adjacency)
        if cycle[0][0] == "r":
            cycle = cycle[1:] + cycle[:1]
        items = [v[1] for v in cycle[0::2]]
        chans = [v[1] for v in cycle[1::2]]
        k = len(items)

        rows = []
        for j in range(k - 1):
            row = [Fraction(0)] * k
            row[j] = channels[chans[j]].coefficients.get(items[j], Fraction(0))
            row[j + 1] = -channels[chans[j]].coefficients.get(items[j + 1], Fraction(0))
            rows.append(row)
        direction = _nullspace_vector(rows, k)
        last = channels[chans[k - 1]].coefficients
        wrap = last.get(items[k - 1], Fraction(0)) * direction[k - 1] - last.get(
            items[0], Fraction(0)
        ) * direction[0]
        if wrap > 0:
            direction = [-v for v in direction]

        step: Optional[Fraction] = None
        for j in range(k):
            nxt = (j + 1) % k
            if direction[j] < 0:
                bound = vectors[chans[j]][items[j]] / -direction[j]
                step = bound if step is None else min(step, bound)
            if direction[nxt] > 0:
                bound = vectors[chans[j]][items[nxt]] / direction[nxt]
                step = bound if step is None else min(step, bound)
        if step is None or step <= 0:
            raise InternalInvariantError("cycle move has no positive step")
        for j in range(k):
            nxt = (j + 1) % k
            vec = vectors[chans[j]]
            vec[items[j]] = vec[items[j]] + step * direction[j]
            vec[items[nxt]] = vec[items[nxt]] - step * direction[nxt]
        for j in range(k):
            vec = vectors[chans[j]]
            for i in (items[j], items[(j + 1) % k]):
                if vec.get(i) == 0:
                    del vec[i]

    result = MakePerfectResult(vectors, iterations, initial_edges)
    verify_perfect_decomposition(x, channels, result.vectors)
    return result


def verify_perfect_decomposition(
    x: Mapping[int, Fraction],
    channels: Sequence[Channel],
    vectors: Sequence[dict[int, Fraction]],
) -> None:
    """Exact audit of the reshuffle guarantees; raises when one fails."""
    totals: dict[int, Fraction] = {}
    owners: dict[int, int] = {}
    for r, vec in enumerate(vectors):
        for i, v in vec.items():
            if v < 0:
                raise InternalInvariantError("negative mass after reshuffle")
            totals[i] = totals.get(i, Fraction(0)) + v
            owners[i] = owners.get(i, 0) + 1
            if i not in channels[r].initial or Fraction(channels[r].initial[i]) == 0:
                raise InternalInvariantError("reshuffle grew a channel support")
    for i, count in owners.items():
        if count > 1:
            raise InternalInvariantError(f"item {i} still split across channels")
    keys = set(totals) | {i for i in x if Fraction(x[i]) != 0}
    for i in keys:
        if totals.get(i, Fraction(0)) != Fraction(x.get(i, 0)):
            raise InternalInvariantError(f"mass of item {i} was not preserved")
    for r, vec in enumerate(vectors):
        coeffs = channels[r].coefficients
        spend = sum((coeffs.get(i, Fraction(0)) * v for i, v in vec.items()), Fraction(0))
        if spend <= channels[r].bound:
            continue
        largest = max(
            (coeffs.get(i, Fraction(0)) * v for i, v in vec.items()), default=Fraction(0)
        )
        if spend - largest > channels[r].bound:
            raise InternalInvariantError(
                f"channel {channels[r].label} exceeds its budget beyond one item"
            )


@dataclass
class BlockAssociation:
    assigned: tuple[frozenset, ...]
    groupings: dict[int, Grouping]
    channels: list[Channel]
    vectors: list[dict[int, Fraction]]
    iterations: int
    initial_edges: int


def block_associate(
    ys: Sequence[Mapping[int, object]],
    weights: Sequence[Fraction],
    blocks: Sequence[Block],
    mu,
    items: Optional[Iterable[int]] = None,
) -> BlockAssociation:
    """Assign every fractionally selected item to exactly one block.

    ``ys`` gives each block's share of the item masses.  Multi-bin blocks
    are grouped first; each group becomes a unit-counting channel and the
    light items a weight-counting one.  Single-bin blocks get one
    weight-counting channel over everything that fits.  The reshuffle then
    yields the per-block item sets along with the groupings used.
    """
    weights = [Fraction(w) for w in weights]
    exact_ys = [
        {i: Fraction(v) for i, v in y.items() if Fraction(v) != 0} for y in ys
    ]
    if items is None:
        universe: set[int] = set()
        for y in exact_ys:
            universe |= set(y)
    else:
        universe = set(items)
    x: dict[int, Fraction] = {}
    for y in exact_ys:
        for i, v in y.items():
            x[i] = x.get(i, Fraction(0)) + v

    channels: list[Channel] = []
    spans: list[tuple[int, int]] = []
    groupings: dict[int, Grouping] = {}
    for j, block in enumerate(blocks):
        y = exact_ys[j]
        start = len(channels)
        fitting = sorted(i for i in universe if weights[i] <= block.capacity)
        if block.size > 1:
            grouping = compute_grouping(
                y, fitting, weights, block.capacity, block.size, mu
            )
            groupings[j] = grouping
            light_set = set(grouping.light)
            initial = {i: y[i] for i in y if i in light_set}
            coeffs = {i: weights[i] for i in grouping.light}
            bound = sum((coeffs[i] * v for i, v in initial.items()), Fraction(0))
            channels.append(Channel((j, None), coeffs, bound, initial))
            for k, group in enumerate(grouping.groups):
                initial = {i: y[i] for i in group if i in y}
                coeffs = {i: Fraction(1) for i in group}
                bound = sum(initial.values(), Fraction(0))
                channels.append(Channel((j, k), coeffs, bound, initial))
        else:
            initial = {i: y[i] for i in y if i in set(fitting)}
            if len(initial) != len(y):
                raise ValueError(f"block {j} carries mass on items that do not fit")
            coeffs = {i: weights[i] for i in fitting}
            bound = sum((coeffs[i] * v for i, v in initial.items()), Fraction(0))
            channels.append(Channel((j, None), coeffs, bound, initial))
        spans.append((start, len(channels)))

    result = make_perfect(x, channels)
    assigned = []
    for j in range(len(blocks)):
        start, end = spans[j]
        members: set[int] = set()
        for r in range(start, end):
            members |= set(result.vectors[r])
        assigned.append(frozenset(members))
    return BlockAssociation(
        assigned=tuple(assigned),
        groupings=groupings,
        channels=channels,
        vectors=result.vectors,
        iterations=result.iterations,
        initial_edges=result.initial_edges,
    )
