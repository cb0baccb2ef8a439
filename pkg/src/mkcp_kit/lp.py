"""Configuration LPs over blocks and leveled instances.

A configuration is a set of items fitting one bin of a block.  The block
relaxation asks for per-item mass covered by configuration mass, with total
configuration mass bounded by the block size.  These LPs have exponentially
many columns, so each optimizer runs restricted-master column generation:
scipy's HiGHS solves the small master exactly, and a profit-scaled knapsack
FPTAS prices new configurations from the master duals.

Unit caps on configuration mass are dropped inside the masters: for any
point with per-item mass at most one, capping configuration mass at one
preserves coverage, so the projected feasible region is unchanged.  Caps are
restored on the returned witnesses.

Within one optimizer the accuracy budget is split evenly between pricing
error and early termination: each side gets 1 - sqrt(1 - eps).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .model import Block, InternalInvariantError

TOL = Fraction(1, 10**7)
PRICE_GUARD = Fraction(1, 10**9)
MAX_ROUNDS = 400

Configuration = frozenset
ConfigWeights = dict


def knapsack_fptas(
    profits: Sequence, weights: Sequence[Fraction], capacity: Fraction, eps: float
) -> tuple[Fraction, frozenset[int]]:
    """Knapsack with value at least (1 - eps) of optimal, by profit scaling.

    Profits and weights may be any rational-convertible numbers; the dynamic
    program runs on exact scaled-profit states, keyed by the minimum weight
    reaching each scaled profit.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must be in (0, 1)")
    n = len(weights)
    capacity = Fraction(capacity)
    items = [
        i
        for i in range(n)
        if Fraction(weights[i]) <= capacity and Fraction(profits[i]) > 0
    ]
    if not items:
        return Fraction(0), frozenset()
    exact_profits = {i: Fraction(profits[i]) for i in items}
    exact_weights = {i: Fraction(weights[i]) for i in items}
    p_max = max(exact_profits.values())
    scale = Fraction(eps) * p_max / len(items)
    scaled = {i: int(exact_profits[i] / scale) for i in items}
    states: dict[int, tuple[Fraction, tuple[int, ...]]] = {0: (Fraction(0), ())}
    for i in items:
        additions = {}
        for q, (weight, chosen) in states.items():
            new_weight = weight + exact_weights[i]
            if new_weight > capacity:
                continue
            new_q = q + scaled[i]
            incumbent = states.get(new_q) or additions.get(new_q)
            if incumbent is None or incumbent[0] > new_weight:
                additions[new_q] = (new_weight, chosen + (i,))
        states.update(additions)
    best_value = Fraction(0)
    best_set: tuple[int, ...] = ()
    for q, (weight, chosen) in states.items():
        value = sum((exact_profits[i] for i in chosen), Fraction(0))
        if value > best_value:
            best_value = value
            best_set = chosen
    return best_value, frozenset(best_set)


def _split_eps(eps: float) -> Fraction:
    return 1 - Fraction(math.sqrt(1.0 - eps))


def _dual(marginal: float) -> Fraction:
    return max(Fraction(0), -Fraction(marginal))


@dataclass
class BlockLpResult:
    value: float
    y: dict[int, float]
    z: ConfigWeights
    rounds: int


def block_lp_optimize(
    costs: Sequence,
    weights: Sequence[Fraction],
    capacity: Fraction,
    n_bins: int,
    eps: float = 0.05,
) -> BlockLpResult:
    """Approximately maximize ``sum c_i y_i`` over the block relaxation.

    The returned point is exactly feasible for the relaxation (up to the
    floating tolerance) and its value is at least (1 - eps) of the optimum.
    """
    n = len(weights)
    capacity = Fraction(capacity)
    weights = [Fraction(w) for w in weights]
    eligible = [
        i for i in range(n) if weights[i] <= capacity and Fraction(costs[i]) > 0
    ]
    if not eligible or n_bins <= 0:
        return BlockLpResult(0.0, {}, {}, 0)
    part = _split_eps(eps)
    configs: list[frozenset[int]] = [frozenset([i]) for i in eligible]
    known = set(configs)
    pos = {i: k for k, i in enumerate(eligible)}
    rounds = 0
    while True:
        rounds += 1
        if rounds > MAX_ROUNDS:
            raise InternalInvariantError("block LP column generation did not settle")
        n_y = len(eligible)
        n_z = len(configs)
        c = np.zeros(n_y + n_z)
        for i in eligible:
            c[pos[i]] = -float(costs[i])
        a_ub = np.zeros((n_y + 1, n_y + n_z))
        b_ub = np.zeros(n_y + 1)
        for i in eligible:
            a_ub[pos[i], pos[i]] = 1.0
        for k, config in enumerate(configs):
            for i in config:
                a_ub[pos[i], n_y + k] = -1.0
        a_ub[n_y, n_y:] = 1.0
        b_ub[n_y] = float(n_bins)
        bounds = [(0.0, 1.0)] * n_y + [(0.0, None)] * n_z
        res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
        if not res.success:
            raise InternalInvariantError(f"block LP master failed: {res.message}")
        beta = [0.0] * n
        for i in eligible:
            beta[i] = -min(0.0, float(res.ineqlin.marginals[pos[i]]))
        sigma = _dual(res.ineqlin.marginals[n_y])
        profit, candidate = knapsack_fptas(beta, weights, capacity, float(part))
        threshold = sigma / (1 - part) + PRICE_GUARD
        if profit <= threshold or candidate in known or not candidate:
            y = {i: min(1.0, max(0.0, float(res.x[pos[i]]))) for i in eligible}
            z = {
                configs[k]: min(1.0, float(res.x[n_y + k]))
                for k in range(n_z)
                if res.x[n_y + k] > 1e-12
            }
            return BlockLpResult(-float(res.fun), y, z, rounds)
        configs.append(candidate)
        known.add(candidate)


@dataclass
class SeparationResult:
    """Outcome of a block membership test.

    When ``inside`` is set, ``witness`` covers the shrunken point
    (1 - eps) * y with configuration mass at most the block size.  Otherwise
    ``separator`` is a non-negative vector that prices every configuration
    at 1 or less while valuing y above the block size.
    """

    inside: bool
    value: Fraction
    witness: Optional[ConfigWeights] = None
    separator: Optional[dict[int, Fraction]] = None


def separate_block(
    point: Sequence,
    weights: Sequence[Fraction],
    capacity: Fraction,
    n_bins: int,
    eps: float = 0.05,
) -> SeparationResult:
    """Approximate membership oracle for the block relaxation."""
    if not 0 < eps < 1:
        raise ValueError("eps must be in (0, 1)")
    n = len(weights)
    capacity = Fraction(capacity)
    weights = [Fraction(w) for w in weights]
    y = [Fraction(v) for v in point]
    if any(v < 0 or v > 1 for v in y):
        raise ValueError("point coordinates must lie in [0, 1]")
    support = [i for i in range(n) if y[i] > 0]
    if not support:
        return SeparationResult(True, Fraction(0), witness={})
    for i in support:
        if weights[i] > capacity:
            scale = Fraction(n_bins + 1) / y[i]
            return SeparationResult(
                False, scale * y[i], separator={i: scale}
            )
    one_minus = 1 - Fraction(eps)
    configs: list[frozenset[int]] = [frozenset([i]) for i in support]
    known = set(configs)
    pos = {i: k for k, i in enumerate(support)}
    rounds = 0
    while True:
        rounds += 1
        if rounds > MAX_ROUNDS:
            raise InternalInvariantError("separation column generation did not settle")
        n_z = len(configs)
        c = np.ones(n_z)
        a_ub = np.zeros((len(support), n_z))
        b_ub = np.array([-float(y[i]) for i in support])
        for k, config in enumerate(configs):
            for i in config:
                a_ub[pos[i], k] = -1.0
        res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=[(0.0, None)] * n_z, method="highs")
        if not res.success:
            raise InternalInvariantError(f"covering master failed: {res.message}")
        duals = [0.0] * n
        for i in support:
            duals[i] = -min(0.0, float(res.ineqlin.marginals[pos[i]]))
        profit, candidate = knapsack_fptas(duals, weights, capacity, eps)
        if profit > 1 + PRICE_GUARD and candidate not in known and candidate:
            configs.append(candidate)
            known.add(candidate)
            continue
        cover_value = Fraction(float(res.fun))
        buffer = Fraction(1, 10**8)
        if one_minus * cover_value <= n_bins * (1 + buffer):
            witness: ConfigWeights = {}
            for k in range(n_z):
                mass = Fraction(float(res.x[k]))
                if mass > 0:
                    witness[configs[k]] = min(Fraction(1), one_minus * mass)
            return SeparationResult(True, cover_value, witness=witness)
        # Normalizing by the priced maximum keeps every configuration valued
        # at 1 or less, exactly, whatever the floating noise in the duals.
        denom = max(profit, Fraction(1))
        separator = {
            i: one_minus * Fraction(duals[i]) / denom for i in support if duals[i] > 0
        }
        sep_value = sum((separator[i] * y[i] for i in separator), Fraction(0))
        if sep_value <= n_bins:
            raise InternalInvariantError("separating vector lost its margin")
        return SeparationResult(False, sep_value, separator=separator)


@dataclass
class BlockPoint:
    y: dict[int, float]
    z: ConfigWeights


@dataclass
class FractionalPoint:
    """A point of the leveled-instance relaxation with per-block witnesses."""

    value: float
    x: dict[int, float]
    blocks: tuple[tuple[BlockPoint, ...], ...]


def _eligible_items(
    active: Sequence[int],
    weights: Sequence[Fraction],
    block: Block,
    gamma: float,
) -> list[int]:
    limit = block.capacity
    if block.size == 1:
        limit = Fraction(gamma) * block.capacity if block.capacity > 0 else Fraction(0)
    return [i for i in active if weights[i] <= limit]


def instance_lp_optimize(
    active: Sequence[int],
    costs: Sequence,
    mkcs: Sequence[tuple[Sequence[Fraction], Sequence[Block]]],
    cap_groups: Sequence[tuple[frozenset[int], int]],
    gamma: float,
    eps: float = 0.05,
) -> FractionalPoint:
    """Approximately maximize ``sum c_i x_i`` over the leveled relaxation.

    ``mkcs`` pairs each constraint's weight vector with its blocks.  The
    point comes back with per-block witnesses that satisfy the relaxation
    within the floating tolerance, heavy items kept off single-bin blocks.
    """
    active = sorted(active)
    if not active:
        return FractionalPoint(
            0.0, {}, tuple(tuple(BlockPoint({}, {}) for _ in blocks) for _, blocks in mkcs)
        )
    part = _split_eps(eps)
    exact_weights = [[Fraction(w) for w in weights] for weights, _ in mkcs]
    all_blocks = [tuple(blocks) for _, blocks in mkcs]
    eligible: dict[tuple[int, int], list[int]] = {}
    for t, blocks in enumerate(all_blocks):
        for j, block in enumerate(blocks):
            eligible[t, j] = _eligible_items(active, exact_weights[t], block, gamma)
    configs: dict[tuple[int, int], list[frozenset[int]]] = {
        key: [frozenset([i]) for i in items] for key, items in eligible.items()
    }
    known = {key: set(cols) for key, cols in configs.items()}
    rounds = 0
    while True:
        rounds += 1
        if rounds > MAX_ROUNDS:
            raise InternalInvariantError("instance LP column generation did not settle")
        x_pos = {i: k for k, i in enumerate(active)}
        cursor = len(active)
        y_pos: dict[tuple[int, int, int], int] = {}
        for (t, j), items in sorted(eligible.items()):
            for i in items:
                y_pos[t, j, i] = cursor
                cursor += 1
        z_pos: dict[tuple[int, int, int], int] = {}
        for (t, j), cols in sorted(configs.items()):
            for k in range(len(cols)):
                z_pos[t, j, k] = cursor
                cursor += 1
        n_cols = cursor

        eq_rows = []
        for t in range(len(all_blocks)):
            for i in active:
                row = np.zeros(n_cols)
                row[x_pos[i]] = -1.0
                for j in range(len(all_blocks[t])):
                    if (t, j, i) in y_pos:
                        row[y_pos[t, j, i]] = 1.0
                eq_rows.append(row)
        a_eq = np.array(eq_rows)
        b_eq = np.zeros(len(eq_rows))

        ub_rows = []
        ub_rhs = []
        cover_row: dict[tuple[int, int, int], int] = {}
        for (t, j), items in sorted(eligible.items()):
            for i in items:
                row = np.zeros(n_cols)
                row[y_pos[t, j, i]] = 1.0
                for k, config in enumerate(configs[t, j]):
                    if i in config:
                        row[z_pos[t, j, k]] = -1.0
                cover_row[t, j, i] = len(ub_rows)
                ub_rows.append(row)
                ub_rhs.append(0.0)
        cap_row: dict[tuple[int, int], int] = {}
        for (t, j), cols in sorted(configs.items()):
            row = np.zeros(n_cols)
            for k in range(len(cols)):
                row[z_pos[t, j, k]] = 1.0
            cap_row[t, j] = len(ub_rows)
            ub_rows.append(row)
            ub_rhs.append(float(all_blocks[t][j].size))
        for group, cap in cap_groups:
            members = [i for i in active if i in group]
            if not members:
                continue
            row = np.zeros(n_cols)
            for i in members:
                row[x_pos[i]] = 1.0
            ub_rows.append(row)
            ub_rhs.append(float(cap))
        a_ub = np.array(ub_rows)
        b_ub = np.array(ub_rhs)

        c = np.zeros(n_cols)
        for i in active:
            c[x_pos[i]] = -float(costs[i])
        bounds = [(0.0, 1.0)] * (len(active) + len(y_pos)) + [(0.0, None)] * len(z_pos)
        res = linprog(
            c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs"
        )
        if not res.success:
            raise InternalInvariantError(f"instance LP master failed: {res.message}")

        added = False
        for (t, j), items in sorted(eligible.items()):
            if not items:
                continue
            beta = [0.0] * len(exact_weights[t])
            for i in items:
                beta[i] = -min(0.0, float(res.ineqlin.marginals[cover_row[t, j, i]]))
            sigma = _dual(res.ineqlin.marginals[cap_row[t, j]])
            limit = all_blocks[t][j].capacity
            if all_blocks[t][j].size == 1:
                limit = Fraction(gamma) * limit
            masked = [beta[i] if i in set(items) else 0.0 for i in range(len(beta))]
            profit, candidate = knapsack_fptas(
                masked, exact_weights[t], limit, float(part)
            )
            if (
                profit > sigma / (1 - part) + PRICE_GUARD
                and candidate
                and candidate not in known[t, j]
            ):
                configs[t, j].append(candidate)
                known[t, j].add(candidate)
                added = True
        if added:
            continue

        x = {i: min(1.0, max(0.0, float(res.x[x_pos[i]]))) for i in active}
        blocks_out = []
        for t in range(len(all_blocks)):
            row_out = []
            for j in range(len(all_blocks[t])):
                y = {
                    i: min(1.0, max(0.0, float(res.x[y_pos[t, j, i]])))
                    for i in eligible[t, j]
                    if res.x[y_pos[t, j, i]] > 1e-12
                }
                z = {
                    configs[t, j][k]: min(1.0, float(res.x[z_pos[t, j, k]]))
                    for k in range(len(configs[t, j]))
                    if res.x[z_pos[t, j, k]] > 1e-12
                }
                row_out.append(BlockPoint(y, z))
            blocks_out.append(tuple(row_out))
        point = FractionalPoint(-float(res.fun), x, tuple(blocks_out))
        verify_fractional_point(point, mkcs, cap_groups, gamma, active)
        return point


def combine_points(points: Sequence[FractionalPoint], coefficients: Sequence) -> FractionalPoint:
    """Convex-style combination of points sharing one block structure."""
    if not points:
        raise ValueError("need at least one point")
    coeffs = [float(c) for c in coefficients]
    x: dict[int, float] = {}
    for point, c in zip(points, coeffs):
        for i, v in point.x.items():
            x[i] = x.get(i, 0.0) + c * v
    blocks_out = []
    for t in range(len(points[0].blocks)):
        row_out = []
        for j in range(len(points[0].blocks[t])):
            y: dict[int, float] = {}
            z: ConfigWeights = {}
            for point, c in zip(points, coeffs):
                bp = point.blocks[t][j]
                for i, v in bp.y.items():
                    y[i] = y.get(i, 0.0) + c * v
                for config, v in bp.z.items():
                    z[config] = z.get(config, 0.0) + c * v
            row_out.append(BlockPoint(y, z))
        blocks_out.append(tuple(row_out))
    value = sum(point.value * c for point, c in zip(points, coeffs))
    return FractionalPoint(value, x, tuple(blocks_out))


def verify_fractional_point(
    point: FractionalPoint,
    mkcs: Sequence[tuple[Sequence[Fraction], Sequence[Block]]],
    cap_groups: Sequence[tuple[frozenset[int], int]],
    gamma: float,
    active: Sequence[int],
) -> None:
    """Exact-rational audit of the relaxation invariants, within tolerance."""
    tol = TOL
    x = {i: Fraction(v) for i, v in point.x.items()}
    for i, v in x.items():
        if v < -tol or v > 1 + tol:
            raise InternalInvariantError(f"x[{i}] = {float(v)} outside the unit box")
    for group, cap in cap_groups:
        total = sum((v for i, v in x.items() if i in group), Fraction(0))
        if total > cap + tol:
            raise InternalInvariantError("hull inequality violated")
    for t, (weights, blocks) in enumerate(mkcs):
        weights = [Fraction(w) for w in weights]
        sums: dict[int, Fraction] = {i: Fraction(0) for i in x}
        for j, block in enumerate(blocks):
            bp = point.blocks[t][j]
            z_total = Fraction(0)
            coverage: dict[int, Fraction] = {}
            for config, mass in bp.z.items():
                mass = Fraction(mass)
                if mass < -tol or mass > 1 + tol:
                    raise InternalInvariantError("configuration mass outside [0, 1]")
                load = sum((weights[i] for i in config), Fraction(0))
                if load > block.capacity:
                    raise InternalInvariantError("configuration exceeds the block capacity")
                z_total += mass
                for i in config:
                    coverage[i] = coverage.get(i, Fraction(0)) + mass
            if z_total > block.size + tol:
                raise InternalInvariantError("configuration mass exceeds the block size")
            limit = block.capacity
            if block.size == 1:
                limit = Fraction(gamma) * block.capacity
            for i, v in bp.y.items():
                v = Fraction(v)
                if v < -tol or v > 1 + tol:
                    raise InternalInvariantError("block mass outside the unit box")
                if weights[i] > limit and v > tol:
                    raise InternalInvariantError(
                        f"item {i} too heavy for block {j} of constraint {t}"
                    )
                if v > coverage.get(i, Fraction(0)) + tol:
                    raise InternalInvariantError("item mass not covered by configurations")
                if i in sums:
                    sums[i] += v
                else:
                    sums[i] = v
        for i, v in x.items():
            if abs(sums.get(i, Fraction(0)) - v) > tol:
                raise InternalInvariantError(
                    f"block masses for item {i} do not add up to x under constraint {t}"
                )
