"""Acceptance gate: one test per shipped guarantee, at its stated tolerance.

Each test prints as a single pass/fail line under ``pytest -v``.  The
randomized families are seeded, so every run checks the same cases.
"""
import math
import random
import statistics
from fractions import Fraction

from mkcp_kit.association import (
    Channel,
    block_associate,
    make_perfect,
    verify_perfect_decomposition,
)
from mkcp_kit.exact import brute_force_solve, exact_block_lp, exact_multilinear
from mkcp_kit.generators import (
    OBJECTIVE_FAMILIES,
    SIDE_FAMILIES,
    _random_objective,
    monotone_instance,
    random_block,
    random_instance,
)
from mkcp_kit.grouping import compute_grouping, pack_with_grouping
from mkcp_kit.hull import FreeConstraint, PartitionMatroid, UniformMatroid
from mkcp_kit.lp import block_lp_optimize, separate_block
from mkcp_kit.model import Block, Instance, MultiKnapsackConstraint
from mkcp_kit.objectives import ModularObjective, multilinear_estimate
from mkcp_kit.rounding import derive_seed, pipage_round, sample_set
from mkcp_kit.solver import SolverConfig, solve, solve_restricted
from mkcp_kit.structuring import structure_in_blocks, transfer_assignment

from helpers import coverage, free_instance


def restricted_run(inst, config, seed):
    partitions = tuple(
        structure_in_blocks(c.capacities, config.n_level) for c in inst.constraints
    )
    return solve_restricted(
        range(inst.n_items),
        inst.objective,
        [c.weights for c in inst.constraints],
        partitions,
        inst.additional,
        config,
        random.Random(seed),
    )


def test_01_enumeration_with_full_depth_matches_brute_force():
    failures = []
    for k in range(200):
        rng = random.Random(derive_seed(101, "exact", k))
        inst = random_instance(
            rng,
            max_items=6,
            objective_family=OBJECTIVE_FAMILIES[k % 3],
            side_family=SIDE_FAMILIES[(k // 3) % 3],
        )
        config = SolverConfig(
            xi=inst.n_items, steps=1, samples=2, restarts=1, seed=k
        )
        got = inst.objective.evaluate(solve(inst, config).selected)
        want = inst.objective.evaluate(brute_force_solve(inst).selected)
        if got != want:
            failures.append((k, str(got), str(want)))
    assert not failures


def grouped_pack_case(rng):
    mu = rng.choice([Fraction(1, 2), Fraction(7, 20)])
    m = rng.randint(1, 6) if rng.random() < 0.5 else rng.randint(2, 50)
    cap = Fraction(rng.randint(5, 12))
    heavy_floor = int(40 * mu)
    n = rng.randint(2, 24)
    weights = []
    for _ in range(n):
        if rng.random() < 0.5:
            q = rng.randint(heavy_floor + 1, 40)
        else:
            q = rng.randint(1, heavy_floor)
        weights.append(cap * Fraction(q, 40))

    configs: dict[frozenset, Fraction] = {}
    for _ in range(rng.randint(2, 12)):
        order = list(range(n))
        rng.shuffle(order)
        total = Fraction(0)
        members = []
        for i in order:
            if total + weights[i] <= cap:
                members.append(i)
                total += weights[i]
            if len(members) >= 6:
                break
        if members:
            configs.setdefault(
                frozenset(members), Fraction(rng.randint(1, 100), 100)
            )
    if not configs:
        lightest = min(range(n), key=lambda i: weights[i])
        configs[frozenset([lightest])] = Fraction(1, 2)
    total_mass = sum(configs.values(), Fraction(0))
    if total_mass > m:
        factor = Fraction(m) / total_mass
        configs = {c: v * factor for c, v in configs.items()}

    delta = Fraction(rng.randint(0, 30), 100)
    damp = 1 - delta
    z = {c: damp * v for c, v in configs.items()}
    y = {}
    for i in range(n):
        covered = sum((v for c, v in configs.items() if i in c), Fraction(0))
        if covered > 0:
            y[i] = damp * min(Fraction(1), covered)

    grouping = compute_grouping(y, range(n), weights, cap, m, mu)
    per_group = int(mu * m)
    chosen = set()
    for group in grouping.groups:
        if group:
            take = rng.randint(0, min(len(group), per_group))
            chosen.update(rng.sample(list(group), take))
    lam = rng.choice([0, 1, 2])
    budget = sum(
        (y.get(i, Fraction(0)) * weights[i] for i in grouping.light), Fraction(0)
    ) + lam * cap
    lights = list(grouping.light)
    rng.shuffle(lights)
    load = Fraction(0)
    for i in lights:
        if load + weights[i] <= budget:
            chosen.add(i)
            load += weights[i]
    bound = (
        float((1 - delta + 3 * mu) * m)
        + 4 * 4.0 ** float(1 / (mu * mu))
        + 2 * lam
    )
    return chosen, grouping, z, weights, cap, bound


def test_02_grouped_packing_respects_count_and_capacity():
    for k in range(500):
        rng = random.Random(derive_seed(102, "pack", k))
        chosen, grouping, z, weights, cap, bound = grouped_pack_case(rng)
        result = pack_with_grouping(chosen, grouping, z, weights)
        assert result.opened <= bound
        placed = set()
        for contents in result.bins:
            assert sum((weights[i] for i in contents), Fraction(0)) <= cap
            assert not (placed & contents)
            placed |= contents
        assert placed == chosen


def decomposition_case(rng):
    n = rng.randint(1, 30)
    p = rng.randint(1, 12)
    initial: list[dict[int, Fraction]] = [{} for _ in range(p)]
    for i in range(n):
        if rng.random() < 0.1:
            continue
        total = Fraction(rng.randint(1, 100), 100)
        share_count = rng.randint(1, min(3, p))
        owners = rng.sample(range(p), share_count)
        cuts = [rng.randint(1, 9) for _ in owners]
        poured = Fraction(0)
        for r, part in zip(owners[:-1], cuts[:-1]):
            piece = total * Fraction(part, sum(cuts))
            initial[r][i] = piece
            poured += piece
        initial[owners[-1]][i] = total - poured
    channels = []
    for r in range(p):
        if rng.random() < 0.5:
            coeffs = {i: Fraction(1) for i in initial[r]}
        else:
            coeffs = {i: Fraction(rng.randint(1, 8)) for i in initial[r]}
        spend = sum(
            (coeffs[i] * v for i, v in initial[r].items()), Fraction(0)
        )
        bound = spend + Fraction(rng.randint(0, 2))
        channels.append(Channel(("case", r), coeffs, bound, dict(initial[r])))
    x: dict[int, Fraction] = {}
    for vec in initial:
        for i, v in vec.items():
            x[i] = x.get(i, Fraction(0)) + v
    return x, channels


def association_case(rng):
    n = rng.randint(2, 12)
    weights = [Fraction(rng.randint(1, 6)) for _ in range(n)]
    blocks = []
    for j in range(rng.randint(1, 3)):
        size = rng.randint(1, 3)
        capacity = Fraction(rng.randint(4, 9))
        blocks.append(Block(tuple(range(3 * j, 3 * j + size)), capacity))
    leftover = {i: Fraction(1) for i in range(n)}
    ys = []
    for block in blocks:
        y = {}
        for i in range(n):
            if weights[i] > block.capacity or leftover[i] == 0:
                continue
            if rng.random() < 0.6:
                v = min(leftover[i], Fraction(rng.randint(1, 50), 100))
                y[i] = v
                leftover[i] -= v
        ys.append(y)
    return ys, weights, blocks, rng.choice([Fraction(1, 4), Fraction(1, 3)])


def test_03_reshuffle_gives_exact_single_owner_decompositions():
    for k in range(500):
        rng = random.Random(derive_seed(103, "channels", k))
        x, channels = decomposition_case(rng)
        result = make_perfect(x, channels)
        assert result.iterations <= result.initial_edges
        verify_perfect_decomposition(x, channels, result.vectors)
    for k in range(100):
        rng = random.Random(derive_seed(103, "blocks", k))
        ys, weights, blocks, mu = association_case(rng)
        assoc = block_associate(ys, weights, blocks, mu)
        x: dict[int, Fraction] = {}
        for y in ys:
            for i, v in y.items():
                x[i] = x.get(i, Fraction(0)) + v
        support = {i for i, v in x.items() if v > 0}
        verify_perfect_decomposition(x, assoc.channels, assoc.vectors)
        seen = set()
        for assigned in assoc.assigned:
            assert not (seen & assigned)
            seen |= assigned
        assert seen == support


ONE_MINUS = 1 - Fraction(0.05)


def check_separation(point, weights, capacity, n_bins):
    result = separate_block(point, weights, capacity, n_bins, eps=0.05)
    y = [Fraction(v) for v in point]
    if result.inside:
        witness = result.witness
        total = Fraction(0)
        for config, mass in witness.items():
            assert sum((weights[i] for i in config), Fraction(0)) <= capacity
            assert 0 < mass <= 1
            total += mass
        assert total <= n_bins * (1 + Fraction(1, 10**7))
        for i, v in enumerate(y):
            if v == 0:
                continue
            covered = sum(
                (mass for config, mass in witness.items() if i in config),
                Fraction(0),
            )
            # rational audit of a float LP: allow the solver's own residual
            assert covered >= ONE_MINUS * v - Fraction(1, 10**12)
    else:
        separator = result.separator
        assert all(v >= 0 for v in separator.values())
        priced = sum((separator[i] * y[i] for i in separator), Fraction(0))
        assert priced > n_bins
        fitting = [i for i in range(len(weights)) if weights[i] <= capacity]
        for mask in range(1, 1 << len(fitting)):
            members = [fitting[b] for b in range(len(fitting)) if mask >> b & 1]
            if sum((weights[i] for i in members), Fraction(0)) <= capacity:
                price = sum(
                    (separator.get(i, Fraction(0)) for i in members), Fraction(0)
                )
                assert price <= 1


def test_04_block_relaxation_is_near_exact_and_certified():
    for k in range(200):
        rng = random.Random(derive_seed(104, "lp", k))
        costs, weights, capacity, n_bins = random_block(rng)
        approx = block_lp_optimize(costs, weights, capacity, n_bins, eps=0.05)
        reference, _, _ = exact_block_lp(costs, weights, capacity, n_bins)
        assert approx.value >= 0.95 * reference - 1e-9
    for k in range(60):
        rng = random.Random(derive_seed(104, "sep", k))
        n = rng.randint(2, 8)
        weights = [Fraction(rng.randint(1, 6)) for _ in range(n)]
        capacity = Fraction(rng.randint(4, 9))
        n_bins = rng.randint(1, 3)
        point = []
        for i in range(n):
            if weights[i] > capacity and rng.random() < 0.7:
                point.append(Fraction(0))
            else:
                point.append(Fraction(rng.randint(0, 100), 100))
        check_separation(point, weights, capacity, n_bins)


def test_05_leveled_transfer_keeps_value_and_feasibility():
    for k in range(200):
        rng = random.Random(derive_seed(105, "transfer", k))
        n_level = rng.choice([2, 3, 4])
        n = rng.randint(3, 10)
        weights = [Fraction(rng.randint(0, 4)) for _ in range(n)]
        n_bins = rng.randint(3, 10)
        caps = [Fraction(rng.randint(2, 9)) for _ in range(n_bins)]
        spec = _random_objective(rng, n, rng.choice(OBJECTIVE_FAMILIES))
        loads = [set() for _ in range(n_bins)]
        totals = [Fraction(0)] * n_bins
        order = list(range(n))
        rng.shuffle(order)
        for i in order:
            b = rng.randrange(n_bins + 2)
            if b < n_bins and totals[b] + weights[i] <= caps[b]:
                loads[b].add(i)
                totals[b] += weights[i]
        assignment = [frozenset(load) for load in loads]
        structure = structure_in_blocks(caps, n_level)
        selected, placed = transfer_assignment(
            spec, assignment, weights, caps, structure
        )
        original = frozenset().union(*assignment, frozenset())
        assert selected <= original
        assert frozenset().union(*placed.values(), frozenset()) == selected
        capacity_of = {}
        for block in structure.blocks:
            for b in block.bins:
                capacity_of[b] = block.capacity
        assert set(placed) == set(capacity_of)
        seen = set()
        for b, load in placed.items():
            assert not (seen & load)
            seen |= load
            assert sum((weights[i] for i in load), Fraction(0)) <= capacity_of[b]
        floor = (1 - Fraction(1, n_level)) * spec.evaluate(original)
        assert spec.evaluate(selected) >= floor


def test_06_cost_rounding_conserves_budget_and_value_in_expectation():
    spec = coverage(
        {0: 3, 1: 2, 2: 4, 3: 1, 4: 2, 5: 5},
        [{0, 1}, {1, 2}, {2, 3}, {3, 4, 5}, {0, 5}],
    )
    x = {
        0: Fraction(3, 10),
        1: Fraction(7, 10),
        2: Fraction(1, 2),
        3: Fraction(9, 20),
        4: Fraction(3, 5),
    }
    costs = {
        0: Fraction(2),
        1: Fraction(1),
        2: Fraction(3),
        3: Fraction(1),
        4: Fraction(2),
    }
    base_cost = sum(costs[i] * x[i] for i in x)
    exact_value = float(exact_multilinear(spec, [x[i] for i in range(5)]))
    values = []
    for t in range(10_000):
        rng = random.Random(derive_seed(106, "round", t))
        rounded, spill = pipage_round(x, range(5), costs, spec, rng, samples=8)
        assert set(rounded.values()) <= {Fraction(0), Fraction(1)}
        new_cost = sum(costs[i] * rounded[i] for i in x)
        allowance = costs[spill] if spill is not None else Fraction(0)
        assert new_cost <= base_cost + allowance
        chosen = {i for i, v in rounded.items() if v == 1}
        values.append(float(spec.evaluate(chosen)))
    mean = statistics.fmean(values)
    sigma = statistics.stdev(values) / math.sqrt(len(values))
    assert mean >= exact_value - 3 * sigma


def test_07_sampling_marginals_and_membership():
    delta = Fraction(1, 5)
    x = {
        0: Fraction(3, 10),
        1: Fraction(1, 2),
        2: Fraction(9, 10),
        3: Fraction(1, 4),
        4: Fraction(3, 5),
        5: Fraction(9, 20),
    }
    hulls = [
        FreeConstraint(6),
        UniformMatroid(6, 3),
        PartitionMatroid(
            6, (frozenset({0, 1, 2}), frozenset({3, 4, 5})), (2, 2)
        ),
    ]
    draws = 100_000
    keep = (1 - delta) ** 2
    for h, hull in enumerate(hulls):
        counts = {i: 0 for i in x}
        for t in range(draws):
            rng = random.Random(derive_seed(107, h, t))
            sampled = sample_set(x, hull, delta, rng)
            assert hull.is_member(sampled)
            for i in sampled:
                counts[i] += 1
        for i, mass in x.items():
            p = float(keep * mass)
            spread = 3 * math.sqrt(p * (1 - p) / draws)
            assert abs(counts[i] / draws - p) <= spread


def test_08_closed_form_extension_on_linear_objectives():
    for k in range(50):
        rng = random.Random(derive_seed(108, "modular", k))
        n = rng.randint(1, 8)
        offset = Fraction(rng.randint(0, 5))
        profits = tuple(Fraction(rng.randint(0, 9)) for _ in range(n))
        spec = ModularObjective(offset, profits)
        point = [Fraction(rng.randint(0, 100), 100) for _ in range(n)]
        got = multilinear_estimate(spec, point, rng, samples=1)
        want = float(offset + sum(p * v for p, v in zip(profits, point)))
        assert got == want


def test_09_compliant_samples_always_pack():
    counterexamples = 0
    packed_runs = 0
    for k in range(100):
        rng = random.Random(derive_seed(109, "case", k))
        if k % 2 == 0:
            inst = monotone_instance(rng, max_items=7)
            config = SolverConfig(steps=2, samples=8, restarts=1, seed=0)
        else:
            n = rng.randint(4, 8)
            weights = tuple(
                Fraction(rng.choice([0, 1, 1, 2])) for _ in range(n)
            )
            constraint = MultiKnapsackConstraint(weights, (Fraction(4),) * 6)
            spec = _random_objective(rng, n, "coverage")
            inst = Instance(
                tuple(f"x{i}" for i in range(n)),
                (constraint,),
                spec,
                FreeConstraint(n),
            )
            config = SolverConfig(
                n_level=2, steps=2, samples=8, restarts=1, seed=0
            )
        run = restricted_run(inst, config, derive_seed(109, "run", k))
        if run.compliance and all(r.compliant for r in run.compliance):
            if not run.packed:
                counterexamples += 1
        if run.packed and run.selected:
            packed_runs += 1
    assert counterexamples == 0
    assert packed_runs >= 30


def test_10_relaxation_pipeline_clears_the_monotone_floor():
    floor = 1 - 1 / math.e - 0.1
    hits = 0
    total = 0
    for k in range(50):
        rng = random.Random(derive_seed(110, "monotone", k))
        inst = monotone_instance(rng)
        opt = float(inst.objective.evaluate(brute_force_solve(inst).selected))
        config = SolverConfig(
            delta=Fraction(1, 100),
            gamma=Fraction(9, 10),
            steps=10,
            samples=32,
            restarts=1,
            seed=0,
        )
        for attempt in range(3):
            total += 1
            run = restricted_run(inst, config, derive_seed(110, "run", k, attempt))
            value = float(inst.objective.evaluate(run.selected))
            if value >= floor * opt - 1e-9:
                hits += 1
    assert hits >= math.ceil(0.9 * total)
