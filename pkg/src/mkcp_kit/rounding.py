"""Randomized rounding: sampling sets, pipage moves, and greedy ascent.

Three bridges from fractional points to sets live here.  Sampling draws a
random set whose marginals are a damped copy of the point while never
leaving the side constraint, using systematic (shared-offset) sampling
inside each capped class.  Pipage rounding walks pairs of fractional
coordinates along budget-preserving directions, comparing endpoints either
exactly (modular objectives) or by paired estimates with shared randomness.
Greedy ascent builds a fractional point step by step, calling an LP oracle
on estimated marginal gains; the non-monotone variant damps each step by
the remaining headroom.
"""
from __future__ import annotations

import hashlib
import math
import random
from fractions import Fraction
from typing import Callable, Mapping, Optional, Sequence

from .hull import AdditionalConstraint
from .lp import (
    BlockLpResult,
    FractionalPoint,
    block_lp_optimize,
    combine_points,
    instance_lp_optimize,
)
from .model import Block, InternalInvariantError
from .objectives import Objective, evaluate

SAMPLE_DEFAULT = 48


def derive_seed(base: int, *parts) -> int:
    """Stable sub-seed for a labeled piece of work under one master seed."""
    digest = hashlib.sha256(repr((base,) + parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def sample_set(
    x: Mapping[int, object],
    hull: AdditionalConstraint,
    delta: float,
    rng: random.Random,
) -> frozenset:
    """Draw a set with marginals (1 - delta)^2 x, always inside the hull.

    Capped classes use systematic sampling: the class's masses tile a line,
    and one random offset picks every unit mark, so the class never exceeds
    its cap and each item keeps its exact mass as its probability.  Items
    outside any class are independent coin flips.  A final independent
    thinning applies the damping factor.
    """
    keep = float((1 - Fraction(delta)) ** 2)
    support = sorted(i for i, v in x.items() if float(v) > 0)
    support_set = set(support)
    chosen: set = set()
    grouped: set = set()
    for group, cap in hull.cap_groups():
        members = [i for i in support if i in group]
        grouped |= set(members)
        if not members or cap <= 0:
            continue
        total = sum(float(x[i]) for i in members)
        scale = 1.0 if total <= cap else cap / total
        offset = rng.random()
        acc = 0.0
        for i in members:
            start = acc
            acc += float(x[i]) * scale
            if math.floor(acc - offset) > math.floor(start - offset):
                chosen.add(i)
    for i in support:
        if i not in grouped and rng.random() < float(x[i]):
            chosen.add(i)
    final = frozenset(i for i in sorted(chosen) if rng.random() < keep)
    if not hull.is_member(final):
        raise InternalInvariantError("sampled set left the side constraint")
    return final


def _modular_value(coeffs, point) -> Fraction:
    offset, profits = coeffs
    total = Fraction(offset)
    for i, v in point.items():
        total += Fraction(profits[i]) * Fraction(v)
    return total


def _not_worse(
    spec: Objective,
    first: Mapping[int, Fraction],
    second: Mapping[int, Fraction],
    rng: random.Random,
    samples: int,
) -> bool:
    coeffs = spec.modular_coefficients()
    if coeffs is not None:
        return _modular_value(coeffs, first) >= _modular_value(coeffs, second)
    ids = sorted(set(first) | set(second))
    advantage = 0.0
    for _ in range(samples):
        coins = {i: rng.random() for i in ids}
        set_a = frozenset(i for i in ids if coins[i] < float(first.get(i, 0)))
        set_b = frozenset(i for i in ids if coins[i] < float(second.get(i, 0)))
        advantage += float(evaluate(spec, set_a)) - float(evaluate(spec, set_b))
    return advantage >= 0.0


def pipage_round(
    point: Mapping[int, object],
    group: Sequence[int],
    costs: Mapping[int, object],
    spec: Objective,
    rng: random.Random,
    samples: int = SAMPLE_DEFAULT,
) -> tuple[dict[int, Fraction], Optional[int]]:
    """Round the group's coordinates to 0/1, preserving their cost total.

    Paired moves trade mass between two fractional coordinates at rates
    inverse to their costs, so the group's budget never changes; the move
    direction is whichever endpoint compares better.  At most one residual
    coordinate is rounded up past its mass, and it is returned as the
    spill item.
    """
    x = {i: Fraction(v) for i, v in point.items()}
    spill: Optional[int] = None

    def fractional() -> list[int]:
        return [i for i in sorted(group) if 0 < x[i] < 1]

    # a zero-cost coordinate can be lifted for free, even from exactly zero
    for i in sorted(group):
        if x[i] == 1 or Fraction(costs.get(i, 0)) != 0:
            continue
        up = dict(x)
        up[i] = Fraction(1)
        down = dict(x)
        down[i] = Fraction(0)
        x = up if _not_worse(spec, up, down, rng, samples) else down

    work = fractional()
    while len(work) >= 2:
        i, j = work[0], work[1]
        ci, cj = Fraction(costs[i]), Fraction(costs[j])
        forward = min(ci * (1 - x[i]), cj * x[j])
        backward = min(ci * x[i], cj * (1 - x[j]))
        first = dict(x)
        first[i] = x[i] + forward / ci
        first[j] = x[j] - forward / cj
        second = dict(x)
        second[i] = x[i] - backward / ci
        second[j] = x[j] + backward / cj
        x = first if _not_worse(spec, first, second, rng, samples) else second
        work = fractional()

    if work:
        i = work[0]
        up = dict(x)
        up[i] = Fraction(1)
        down = dict(x)
        down[i] = Fraction(0)
        if _not_worse(spec, up, down, rng, samples):
            x = up
            spill = i
        else:
            x = down
    return x, spill


def estimate_gradient(
    spec: Objective,
    x: Mapping[int, float],
    rng: random.Random,
    samples: int,
) -> dict[int, float]:
    """Monte Carlo estimate of each coordinate's marginal at the point."""
    ids = sorted(x)
    grads = {i: 0.0 for i in ids}
    for _ in range(samples):
        base = {i for i in ids if rng.random() < float(x[i])}
        for i in ids:
            gain = float(evaluate(spec, base | {i})) - float(evaluate(spec, base - {i}))
            grads[i] += gain
    return {i: g / samples for i, g in grads.items()}


def _rescale_blocks(blocks, scale: Mapping[int, float]):
    rescaled = []
    for row in blocks:
        new_row = []
        for bp in row:
            y = {i: v * scale.get(i, 0.0) for i, v in bp.y.items()}
            new_row.append(type(bp)(y={i: v for i, v in y.items() if v > 0}, z=dict(bp.z)))
        rescaled.append(tuple(new_row))
    return tuple(rescaled)


def greedy_instance_point(
    spec: Objective,
    active: Sequence[int],
    mkcs: Sequence[tuple[Sequence[Fraction], Sequence[Block]]],
    cap_groups: Sequence[tuple[frozenset, int]],
    gamma: float,
    eps: float,
    steps: int,
    samples: int,
    rng: random.Random,
) -> FractionalPoint:
    """Ascend the leveled relaxation, returning the point with witnesses.

    Modular objectives collapse to one LP call.  Otherwise each step prices
    estimated marginal gains; for non-monotone objectives the step is damped
    by the remaining headroom, and the averaged witnesses are shrunk back
    onto the final point.
    """
    coeffs = spec.modular_coefficients()
    if coeffs is not None:
        _, profits = coeffs
        return instance_lp_optimize(
            active, [float(p) for p in profits], mkcs, cap_groups, gamma, eps
        )
    active = sorted(active)
    if not active:
        return instance_lp_optimize(active, [], mkcs, cap_groups, gamma, eps)
    measured = not spec.is_monotone()
    x = {i: 0.0 for i in active}
    collected: list[FractionalPoint] = []
    for _ in range(steps):
        grads = estimate_gradient(spec, x, rng, samples)
        costs = [grads.get(i, 0.0) for i in range(spec.n_items)]
        point = instance_lp_optimize(active, costs, mkcs, cap_groups, gamma, eps)
        collected.append(point)
        for i in active:
            v = point.x.get(i, 0.0)
            if measured:
                x[i] += v * (1.0 - x[i]) / steps
            else:
                x[i] += v / steps
    average = combine_points(collected, [1.0 / steps] * steps)
    scale = {}
    for i in active:
        have = average.x.get(i, 0.0)
        scale[i] = min(1.0, x[i] / have) if have > 0 else 0.0
    final_x = {i: x[i] for i in active if x[i] > 0}
    return FractionalPoint(average.value, final_x, _rescale_blocks(average.blocks, scale))


def greedy_block_point(
    spec: Objective,
    weights: Sequence[Fraction],
    capacity: Fraction,
    n_bins: int,
    eps: float,
    steps: int,
    samples: int,
    rng: random.Random,
) -> BlockLpResult:
    """Same ascent against a single block relaxation."""
    coeffs = spec.modular_coefficients()
    if coeffs is not None:
        _, profits = coeffs
        return block_lp_optimize(
            [float(p) for p in profits], weights, capacity, n_bins, eps
        )
    n = spec.n_items
    measured = not spec.is_monotone()
    x = {i: 0.0 for i in range(n)}
    total_y: dict[int, float] = {}
    total_z: dict = {}
    value = 0.0
    for _ in range(steps):
        grads = estimate_gradient(spec, x, rng, samples)
        costs = [grads.get(i, 0.0) for i in range(n)]
        result = block_lp_optimize(costs, weights, capacity, n_bins, eps)
        value += result.value / steps
        for i, v in result.y.items():
            total_y[i] = total_y.get(i, 0.0) + v / steps
        for config, mass in result.z.items():
            total_z[config] = total_z.get(config, 0.0) + mass / steps
        for i in range(n):
            v = result.y.get(i, 0.0)
            if measured:
                x[i] += v * (1.0 - x[i]) / steps
            else:
                x[i] += v / steps
    y = {}
    for i, have in total_y.items():
        if have > 0 and x[i] > 0:
            y[i] = min(have, x[i])
    return BlockLpResult(value, y, total_z, 0)
