"""Small-scale exact oracles used to validate the approximate pipeline.

Everything here is deliberately independent of the solver modules: plain
enumeration and branch-and-bound, exact rational arithmetic for feasibility,
and a statically built LP for the block relaxation.  Guards keep the inputs
at desk scale.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Optional, Sequence

from .model import Instance, Solution
from .objectives import Objective


def exact_knapsack(
    profits: Sequence, weights: Sequence[Fraction], capacity: Fraction
) -> tuple[Fraction, frozenset[int]]:
    """Optimal knapsack by enumeration (at most 16 items)."""
    n = len(weights)
    if len(profits) != n:
        raise ValueError("profits and weights must have equal length")
    if n > 16:
        raise ValueError("exact_knapsack handles at most 16 items")
    profits = [Fraction(p) for p in profits]
    weights = [Fraction(w) for w in weights]
    capacity = Fraction(capacity)
    best_value = Fraction(0)
    best_mask = 0
    for mask in range(1 << n):
        weight = Fraction(0)
        value = Fraction(0)
        ok = True
        m = mask
        while m:
            i = (m & -m).bit_length() - 1
            m &= m - 1
            weight += weights[i]
            if weight > capacity:
                ok = False
                break
            value += profits[i]
        if ok and value > best_value:
            best_value = value
            best_mask = mask
    return best_value, frozenset(i for i in range(n) if best_mask & (1 << i))


def exact_bin_pack(
    weights: Sequence[Fraction], capacity: Fraction
) -> tuple[int, tuple[frozenset[int], ...]]:
    """Minimal number of capacity-bounded bins, by branch and bound (n <= 12)."""
    n = len(weights)
    if n > 12:
        raise ValueError("exact_bin_pack handles at most 12 items")
    weights = [Fraction(w) for w in weights]
    capacity = Fraction(capacity)
    if any(w > capacity for w in weights):
        raise ValueError("an item exceeds the bin capacity")
    if n == 0:
        return 0, ()
    order = sorted(range(n), key=lambda i: (-weights[i], i))

    # first-fit upper bound to seed the search
    seed_bins: list[Fraction] = []
    for i in order:
        for b in range(len(seed_bins)):
            if weights[i] <= seed_bins[b]:
                seed_bins[b] -= weights[i]
                break
        else:
            seed_bins.append(capacity - weights[i])
    best_count = len(seed_bins)
    best_assignment: Optional[list[set[int]]] = None

    remaining_weight = [Fraction(0)] * (n + 1)
    for pos in range(n - 1, -1, -1):
        remaining_weight[pos] = remaining_weight[pos + 1] + weights[order[pos]]

    bins: list[Fraction] = []
    contents: list[set[int]] = []

    def search(pos: int) -> None:
        nonlocal best_count, best_assignment
        if pos == n:
            if len(bins) < best_count or best_assignment is None:
                best_count = len(bins)
                best_assignment = [set(c) for c in contents]
            return
        used = sum(capacity - r for r in bins)
        needed_total = used + remaining_weight[pos]
        lower = needed_total / capacity if capacity > 0 else len(bins)
        lower_bins = int(lower) + (0 if lower == int(lower) else 1)
        if lower_bins >= best_count and best_assignment is not None:
            return
        item = order[pos]
        w = weights[item]
        tried: set[Fraction] = set()
        for b in range(len(bins)):
            if w <= bins[b] and bins[b] not in tried:
                tried.add(bins[b])
                bins[b] -= w
                contents[b].add(item)
                search(pos + 1)
                contents[b].remove(item)
                bins[b] += w
        if len(bins) + 1 < best_count or best_assignment is None:
            bins.append(capacity - w)
            contents.append({item})
            search(pos + 1)
            contents.pop()
            bins.pop()

    search(0)
    assert best_assignment is not None
    return best_count, tuple(frozenset(c) for c in best_assignment)


def feasible_assignment(
    weights: Sequence[Fraction],
    items: Sequence[int],
    capacities: Sequence[Fraction],
) -> Optional[tuple[frozenset[int], ...]]:
    """One feasible assignment of ``items`` to bins, or None.

    Search is depth first over items sorted by descending weight; bins with
    identical remaining capacity are interchangeable and tried once.
    """
    order = sorted(items, key=lambda i: (-weights[i], i))
    remaining = [Fraction(c) for c in capacities]
    contents: list[set[int]] = [set() for _ in capacities]
    result: Optional[tuple[frozenset[int], ...]] = None

    def search(pos: int) -> bool:
        nonlocal result
        if pos == len(order):
            result = tuple(frozenset(c) for c in contents)
            return True
        item = order[pos]
        w = weights[item]
        tried: set[Fraction] = set()
        for b in range(len(remaining)):
            if w <= remaining[b] and remaining[b] not in tried:
                tried.add(remaining[b])
                remaining[b] -= w
                contents[b].add(item)
                if search(pos + 1):
                    return True
                contents[b].remove(item)
                remaining[b] += w
        return False

    search(0)
    return result


def brute_force_solve(instance: Instance) -> Solution:
    """Exhaustive optimum for desk-scale instances.

    Guards: at most 12 items, 2 constraints, 4 bins per constraint.  Subsets
    are scanned in ascending bitmask order and only strict improvements are
    kept, so the result is deterministic.
    """
    n = instance.n_items
    if n > 12:
        raise ValueError("brute_force_solve handles at most 12 items")
    if instance.n_constraints > 2:
        raise ValueError("brute_force_solve handles at most 2 constraints")
    if any(mkc.n_bins > 4 for mkc in instance.constraints):
        raise ValueError("brute_force_solve handles at most 4 bins per constraint")
    best = Solution.empty(instance)
    best_value = instance.objective.evaluate(frozenset())
    for mask in range(1, 1 << n):
        selected = frozenset(i for i in range(n) if mask & (1 << i))
        if not instance.additional.is_member(selected):
            continue
        value = instance.objective.evaluate(selected)
        if value <= best_value:
            continue
        assignments = []
        for mkc in instance.constraints:
            assignment = feasible_assignment(mkc.weights, sorted(selected), mkc.capacities)
            if assignment is None:
                break
            assignments.append(assignment)
        else:
            best = Solution(selected, tuple(assignments))
            best_value = value
    return best


def exact_block_lp(
    costs: Sequence,
    weights: Sequence[Fraction],
    capacity: Fraction,
    n_bins: int,
) -> tuple[float, list[float], dict[frozenset[int], float]]:
    """Block relaxation solved with every configuration written out (<= 12 items).

    Maximizes ``sum c_i y_i`` subject to: each y_i covered by the chosen
    configurations, at most ``n_bins`` total configuration mass, and unit
    bounds on both y and the per-configuration mass.
    """
    import numpy as np
    from scipy.optimize import linprog

    n = len(weights)
    if n > 12:
        raise ValueError("exact_block_lp handles at most 12 items")
    weights = [Fraction(w) for w in weights]
    capacity = Fraction(capacity)
    fitting = [i for i in range(n) if weights[i] <= capacity]
    configs: list[frozenset[int]] = []
    for mask in range(1, 1 << len(fitting)):
        chosen = [fitting[k] for k in range(len(fitting)) if mask & (1 << k)]
        if sum((weights[i] for i in chosen), Fraction(0)) <= capacity:
            configs.append(frozenset(chosen))
    n_y = len(fitting)
    n_z = len(configs)
    pos = {i: k for k, i in enumerate(fitting)}
    c = np.zeros(n_y + n_z)
    for i in fitting:
        c[pos[i]] = -float(costs[i])
    a_ub = np.zeros((n_y + 1, n_y + n_z))
    b_ub = np.zeros(n_y + 1)
    for i in fitting:
        a_ub[pos[i], pos[i]] = 1.0
    for k, config in enumerate(configs):
        for i in config:
            a_ub[pos[i], n_y + k] = -1.0
    a_ub[n_y, n_y:] = 1.0
    b_ub[n_y] = float(n_bins)
    bounds = [(0.0, 1.0)] * (n_y + n_z)
    if n_z == 0:
        return 0.0, [0.0] * n, {}
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if not res.success:
        raise RuntimeError(f"exact block LP failed: {res.message}")
    y = [0.0] * n
    for i in fitting:
        y[i] = float(res.x[pos[i]])
    z = {
        configs[k]: float(res.x[n_y + k])
        for k in range(n_z)
        if res.x[n_y + k] > 1e-12
    }
    return -float(res.fun), y, z


def exact_multilinear(spec: Objective, point: Sequence) -> Fraction:
    """Exhaustive multilinear extension value (exact when the point is rational)."""
    n = spec.n_items
    if n > 16:
        raise ValueError("exact_multilinear handles at most 16 items")
    xs = [Fraction(x) for x in point]
    total = Fraction(0)
    for mask in range(1 << n):
        prob = Fraction(1)
        for i in range(n):
            prob *= xs[i] if mask & (1 << i) else 1 - xs[i]
            if prob == 0:
                break
        if prob:
            total += prob * spec.evaluate(i for i in range(n) if mask & (1 << i))
    return total
