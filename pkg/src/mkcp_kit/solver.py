"""End-to-end solvers built on the fractional machinery.

Three entry points.  ``solve_uniform`` handles a single constraint whose
bins all share one capacity: continuous ascent over the block relaxation,
then pipage rounding guided by a grouping of the scaled point, then plain
bin packing.  ``solve_restricted`` runs the general pipeline on a leveled
instance: optimize over the per-constraint relaxations, sample and purge a
set, associate it with blocks, and pack block by block, collapsing to the
empty solution on any packing failure.  ``solve`` wraps the latter in an
enumeration of small seed sets and their assignments, solving the residual
instance left by each seed and keeping the best lifted solution.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product
from typing import Iterator, Mapping, Optional, Sequence

from .association import BlockAssociation, block_associate
from .grouping import PackingError, compute_grouping, ffd_bin_pack
from .hull import AdditionalConstraint, ConstraintError, FreeConstraint
from .lp import FractionalPoint
from .model import (
    Instance,
    InternalInvariantError,
    Solution,
    validate_solution,
)
from .objectives import Objective, purge, shifted
from .rounding import (
    SAMPLE_DEFAULT,
    derive_seed,
    greedy_block_point,
    greedy_instance_point,
    pipage_round,
    sample_set,
)
from .structuring import NLeveledPartition, structure_in_blocks


@dataclass(frozen=True)
class SolverConfig:
    """Knobs shared by the solvers.

    ``mu`` defaults to a quarter of ``delta``; the grouping and association
    steps rely on that coupling, so override it only in tests.  The solvers
    themselves stay correct for any admissible values, while the formal
    guarantees hold in a parameter regime far beyond desk scale (see the
    ``theory_note`` text reported by the CLI).
    """

    epsilon: float = 0.05
    delta: Fraction = Fraction(1, 5)
    gamma: Fraction = Fraction(1, 20)
    n_level: int = 4
    xi: int = 2
    restarts: int = 5
    steps: int = 8
    samples: int = SAMPLE_DEFAULT
    seed: int = 0
    mu: Optional[Fraction] = None

    def __post_init__(self):
        object.__setattr__(self, "delta", Fraction(self.delta))
        object.__setattr__(self, "gamma", Fraction(self.gamma))
        mu = Fraction(self.mu) if self.mu is not None else self.delta / 4
        object.__setattr__(self, "mu", mu)
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if not 0 < mu <= Fraction(1, 2):
            raise ValueError("mu must lie in (0, 1/2]")
        if self.n_level < 2:
            raise ValueError("n_level must be at least 2")
        if self.xi < 0:
            raise ValueError("xi must be non-negative")
        if self.restarts < 1 or self.steps < 1 or self.samples < 1:
            raise ValueError("restarts, steps, and samples must be positive")


def theory_note(config: SolverConfig) -> str:
    """One-line reminder of where the formal guarantees actually live."""
    return (
        "guarantees hold as n_level and xi grow and delta, gamma shrink; "
        f"configured: delta={config.delta}, gamma={config.gamma}, "
        f"n_level={config.n_level}, xi={config.xi}"
    )


@dataclass(frozen=True)
class ResidualInstance:
    """What is left after committing a seed set and its assignment."""

    base: Instance
    selected: frozenset[int]
    assignments: tuple[tuple[frozenset[int], ...], ...]
    items: tuple[int, ...]
    objective: Objective
    capacities: tuple[tuple[Fraction, ...], ...]
    hull: AdditionalConstraint


def residual_instance(
    instance: Instance,
    selected: frozenset[int],
    assignments: Sequence[Sequence[frozenset[int]]],
    xi: int,
) -> ResidualInstance:
    """Commit (selected, assignments) and reduce the instance around it.

    Surviving items are those whose singleton marginal on top of the seed
    stays within a 1/xi fraction of the seed's value; when the seed adds
    nothing over the empty set (or xi is zero) the filter would be
    meaningless, so every unseeded item survives.
    """
    normalized = tuple(tuple(frozenset(b) for b in per) for per in assignments)
    partial = Solution(selected=frozenset(selected), assignments=normalized)
    errors = validate_solution(instance, partial)
    if errors:
        raise ValueError(f"infeasible partial solution: {errors[0]}")
    spec = instance.objective
    base_value = spec.evaluate(selected)
    survivors = []
    if xi > 0 and base_value != spec.evaluate(frozenset()):
        bound = base_value / xi
        for i in range(instance.n_items):
            if i in selected:
                continue
            if spec.evaluate(selected | {i}) - base_value <= bound:
                survivors.append(i)
    else:
        survivors = [i for i in range(instance.n_items) if i not in selected]
    capacities = []
    for t, mkc in enumerate(instance.constraints):
        left = tuple(
            mkc.capacities[b] - mkc.weight_of(normalized[t][b])
            for b in range(mkc.n_bins)
        )
        capacities.append(left)
    return ResidualInstance(
        base=instance,
        selected=frozenset(selected),
        assignments=normalized,
        items=tuple(survivors),
        objective=shifted(spec, frozenset(selected)),
        capacities=tuple(capacities),
        hull=instance.additional.contract(frozenset(selected)),
    )


@dataclass(frozen=True)
class ComplianceReport:
    """Verdict for one (constraint, block) pair of a restricted run."""

    constraint: int
    block: int
    compliant: bool
    failures: tuple[str, ...]


def check_compliance(
    sampled: frozenset[int],
    weights: Sequence[Sequence[Fraction]],
    partitions: Sequence[NLeveledPartition],
    associations: Sequence[BlockAssociation],
    scaled: Sequence[Sequence[Mapping[int, Fraction]]],
    mu,
) -> tuple[ComplianceReport, ...]:
    """Check the per-block conditions that make packing safe.

    ``scaled`` must hold the damped witness vectors the association step
    consumed, one per block.  A single-bin block only needs its share of
    the sample to fit.  A multi-bin block needs every group of its grouping
    to contribute few items and its light share to weigh no more than the
    witness mass plus a slack of (mu/4) * capacity * size.
    """
    mu = Fraction(mu)
    reports = []
    for t, partition in enumerate(partitions):
        w = weights[t]
        assoc = associations[t]
        for j, block in enumerate(partition.blocks):
            members = sampled & assoc.assigned[j]
            failures: list[str] = []
            if block.size == 1:
                load = sum((Fraction(w[i]) for i in members), Fraction(0))
                if load > block.capacity:
                    failures.append("sample outweighs the block capacity")
            else:
                grouping = assoc.groupings[j]
                limit = mu * block.size
                for k, group in enumerate(grouping.groups):
                    count = len(members.intersection(group))
                    if count > limit:
                        failures.append(f"group {k} holds {count} sampled items")
                light = members.intersection(grouping.light)
                load = sum((Fraction(w[i]) for i in light), Fraction(0))
                budget = sum(
                    (scaled[t][j].get(i, Fraction(0)) * Fraction(w[i])
                     for i in grouping.light),
                    Fraction(0),
                )
                budget += (mu / 4) * block.capacity * block.size
                if load > budget:
                    failures.append("light sample outweighs the witness budget")
            reports.append(
                ComplianceReport(
                    constraint=t,
                    block=j,
                    compliant=not failures,
                    failures=tuple(failures),
                )
            )
    return tuple(reports)


@dataclass(frozen=True)
class RestrictedResult:
    """Outcome of one restricted run, with its rounding diagnostics.

    ``selected`` and ``assignments`` form the restricted solution (both
    empty when packing failed).  The remaining fields expose the sampled
    set, the fractional point, and the per-constraint association data the
    compliance reports were computed from.
    """

    selected: frozenset[int]
    assignments: tuple[dict[int, frozenset[int]], ...]
    packed: bool
    sampled: frozenset[int]
    point: FractionalPoint
    associations: tuple[BlockAssociation, ...]
    scaled: tuple[tuple[dict[int, Fraction], ...], ...]
    compliance: tuple[ComplianceReport, ...]

    @property
    def value_support(self) -> frozenset[int]:
        return self.selected


def solve_restricted(
    items: Sequence[int],
    spec: Objective,
    weights: Sequence[Sequence[Fraction]],
    partitions: Sequence[NLeveledPartition],
    hull: AdditionalConstraint,
    config: SolverConfig,
    rng: random.Random,
) -> RestrictedResult:
    """Run the fractional pipeline once against leveled constraints.

    Optimize over the joint relaxation, sample a set with damped marginals,
    purge it, associate the survivors with blocks, and pack each block's
    share.  Any packing failure collapses the outcome to the empty
    solution; no errors surface from this path.
    """
    active = sorted(items)
    d = len(partitions)
    mkcs = [(weights[t], partitions[t].blocks) for t in range(d)]
    point = greedy_instance_point(
        spec,
        active,
        mkcs,
        hull.cap_groups(),
        float(config.gamma),
        config.epsilon,
        config.steps,
        config.samples,
        rng,
    )
    sampled = sample_set(point.x, hull, config.delta, rng)
    selected = purge(spec, sampled)

    damp = 1 - Fraction(config.delta)
    scaled = []
    associations = []
    for t in range(d):
        vectors = []
        for block_point in point.blocks[t]:
            vectors.append(
                {
                    i: damp * Fraction(v)
                    for i, v in block_point.y.items()
                    if v > 0
                }
            )
        scaled.append(tuple(vectors))
        associations.append(
            block_associate(vectors, weights[t], partitions[t].blocks, config.mu)
        )
    scaled = tuple(scaled)
    associations = tuple(associations)
    compliance = check_compliance(
        sampled, weights, partitions, associations, scaled, config.mu
    )

    packed = True
    failed: set[tuple[int, int]] = set()
    assignments: list[dict[int, frozenset[int]]] = []
    for t in range(d):
        partition = partitions[t]
        w = weights[t]
        per_bin = {
            b: frozenset() for block in partition.blocks for b in block.bins
        }
        covered: set[int] = set()
        for j, block in enumerate(partition.blocks):
            members = selected & associations[t].assigned[j]
            covered |= members
            if not members:
                continue
            if block.size == 1:
                load = sum((Fraction(w[i]) for i in members), Fraction(0))
                if load <= block.capacity:
                    per_bin[block.bins[0]] = frozenset(members)
                else:
                    packed = False
                    failed.add((t, j))
            else:
                try:
                    bins = ffd_bin_pack(members, w, block.capacity)
                except PackingError:
                    bins = None
                if bins is not None and len(bins) <= block.size:
                    for k, content in enumerate(bins):
                        per_bin[block.bins[k]] = content
                else:
                    packed = False
                    failed.add((t, j))
        if covered != set(selected):
            raise InternalInvariantError(
                "a selected item fell outside every block"
            )
        assignments.append(per_bin)

    verdicts = {(r.constraint, r.block): r.compliant for r in compliance}
    for key in failed:
        if verdicts[key]:
            raise InternalInvariantError(
                f"packing failed on compliant block {key}"
            )
    if not packed:
        selected = frozenset()
        assignments = [
            {b: frozenset() for block in partitions[t].blocks for b in block.bins}
            for t in range(d)
        ]
    return RestrictedResult(
        selected=selected,
        assignments=tuple(assignments),
        packed=packed,
        sampled=sampled,
        point=point,
        associations=associations,
        scaled=scaled,
        compliance=compliance,
    )


def _constraint_assignments(
    weights: Sequence[Fraction],
    capacities: Sequence[Fraction],
    items: tuple[int, ...],
) -> list[tuple[frozenset[int], ...]]:
    """All ways to spread the items across the bins, lexicographically."""
    m = len(capacities)
    out: list[tuple[frozenset[int], ...]] = []
    loads = [Fraction(0)] * m
    chosen = [0] * len(items)

    def descend(pos: int) -> None:
        if pos == len(items):
            bins: list[list[int]] = [[] for _ in range(m)]
            for idx, i in enumerate(items):
                bins[chosen[idx]].append(i)
            out.append(tuple(frozenset(b) for b in bins))
            return
        w = Fraction(weights[items[pos]])
        for b in range(m):
            if loads[b] + w <= capacities[b]:
                loads[b] += w
                chosen[pos] = b
                descend(pos + 1)
                loads[b] -= w

    descend(0)
    return out


def _seed_assignments(
    instance: Instance, items: tuple[int, ...]
) -> Iterator[tuple[tuple[frozenset[int], ...], ...]]:
    """Feasible seed placements, one representative per residual-room shape.

    Two placements that leave the same multiset of leftover capacities in a
    constraint give the residual solver identical room, so only the first
    is kept.  This collapses the blowup from equal bins and zero weights.
    """
    per_constraint = []
    for mkc in instance.constraints:
        options = _constraint_assignments(mkc.weights, mkc.capacities, items)
        if not options:
            return
        distinct: dict[tuple[Fraction, ...], tuple[frozenset[int], ...]] = {}
        for option in options:
            leftover = tuple(
                sorted(
                    mkc.capacities[b] - mkc.weight_of(option[b])
                    for b in range(mkc.n_bins)
                )
            )
            distinct.setdefault(leftover, option)
        per_constraint.append(list(distinct.values()))
    yield from product(*per_constraint)


def _merge_solution(
    instance: Instance,
    residual: ResidualInstance,
    run: RestrictedResult,
) -> Solution:
    assignments = []
    for t, mkc in enumerate(instance.constraints):
        placed = run.assignments[t]
        merged = tuple(
            residual.assignments[t][b] | placed.get(b, frozenset())
            for b in range(mkc.n_bins)
        )
        assignments.append(merged)
    return Solution(
        selected=residual.selected | run.selected,
        assignments=tuple(assignments),
    )


def solve(instance: Instance, config: SolverConfig) -> Solution:
    """Enumerate seed sets, solve each residual, keep the best lift.

    Every subset of at most xi items that the side constraint admits is
    tried with every feasible disjoint assignment to the constraints'
    bins.  Each such seed leaves a residual instance whose leveled form is
    handed to the restricted solver, with a fixed number of restarts; the
    returned solution is always feasible, and ties between equally good
    lifts go to the latest one visited.
    """
    n = instance.n_items
    depth = min(config.xi, n)
    best = Solution.empty(instance)
    best_value = instance.objective.evaluate(frozenset())
    cache: dict[tuple, RestrictedResult] = {}
    for size in range(depth + 1):
        for seed_items in combinations(range(n), size):
            seed = frozenset(seed_items)
            if not instance.additional.is_member(seed):
                continue
            for assignment in _seed_assignments(instance, seed_items):
                residual = residual_instance(
                    instance, seed, assignment, config.xi
                )
                partitions = tuple(
                    structure_in_blocks(caps, config.n_level)
                    for caps in residual.capacities
                )
                signature = (seed_items, residual.capacities)
                for restart in range(config.restarts):
                    key = (signature, restart)
                    run = cache.get(key)
                    if run is None:
                        rng = random.Random(
                            derive_seed(
                                config.seed, "restricted", repr(signature), restart
                            )
                        )
                        run = solve_restricted(
                            residual.items,
                            residual.objective,
                            [mkc.weights for mkc in instance.constraints],
                            partitions,
                            residual.hull,
                            config,
                            rng,
                        )
                        cache[key] = run
                    value = residual.objective.evaluate(run.selected)
                    if value >= best_value:
                        best_value = value
                        best = _merge_solution(instance, residual, run)
    errors = validate_solution(instance, best)
    if errors:
        raise InternalInvariantError(f"solver produced a bad solution: {errors[0]}")
    return best


def solve_uniform(instance: Instance, config: SolverConfig) -> Solution:
    """Solve a single uniform-capacity constraint by pipage rounding.

    Requires one constraint, equal bin capacities, a free side constraint,
    and a monotone objective.  The fractional point is damped by the
    grouping parameter before rounding; at small bin counts the mandated
    damping floor reaches zero, so only weightless items can survive, which
    keeps the routine honest rather than overselling small instances.
    """
    if instance.n_constraints != 1:
        raise ConstraintError("uniform solver handles exactly one constraint")
    mkc = instance.constraints[0]
    if len(set(mkc.capacities)) != 1:
        raise ConstraintError("uniform solver needs equal bin capacities")
    if not isinstance(instance.additional, FreeConstraint):
        raise ConstraintError("uniform solver admits no side constraint")
    if not instance.objective.is_monotone():
        raise ConstraintError("uniform solver needs a monotone objective")
    capacity = mkc.capacities[0]
    m = mkc.n_bins
    n = instance.n_items
    spec = instance.objective
    rng = random.Random(derive_seed(config.seed, "uniform"))
    result = greedy_block_point(
        spec,
        mkc.weights,
        capacity,
        m,
        config.epsilon,
        config.steps,
        config.samples,
        rng,
    )
    if m == 1:
        mu = Fraction(1, 2)
    else:
        mu = min(Fraction(math.log(m) ** -0.25), Fraction(1, 2))
    scale = max(Fraction(0), 1 - 4 * mu)
    point = {i: Fraction(0) for i in range(n)}
    for i, v in result.y.items():
        point[i] = scale * Fraction(v)
    grouping = compute_grouping(
        point, range(n), mkc.weights, capacity, m, mu
    )
    initial = dict(point)
    for group in grouping.groups:
        if not group:
            continue
        costs = {i: Fraction(1) for i in group}
        point, _ = pipage_round(point, group, costs, spec, rng, config.samples)
    light_costs = {i: Fraction(mkc.weights[i]) for i in grouping.light}
    point, _ = pipage_round(
        point, grouping.light, light_costs, spec, rng, config.samples
    )
    for group in grouping.groups:
        placed = sum((point[i] for i in group), Fraction(0))
        start = sum((initial[i] for i in group), Fraction(0))
        if placed > 1 + start:
            raise InternalInvariantError("group rounding exceeded its budget")
    chosen = frozenset(i for i, v in point.items() if v == 1)
    bins = ffd_bin_pack(chosen, mkc.weights, capacity)
    if len(bins) > m:
        return Solution.empty(instance)
    assignments = tuple(
        bins[b] if b < len(bins) else frozenset() for b in range(m)
    )
    return Solution(selected=chosen, assignments=(assignments,))
