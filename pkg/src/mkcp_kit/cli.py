"""Command line front end: solving, oracles, point dumps, and benchmarks."""
from __future__ import annotations

import argparse
import json
import os
import random
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

from .exact import brute_force_solve, exact_block_lp
from .generators import monotone_instance, random_block, random_instance
from .grouping import PackingError, compute_grouping
from .lp import FractionalPoint, block_lp_optimize
from .model import (
    Instance,
    InternalInvariantError,
    load_instance,
    load_solution,
    save_solution,
    solution_to_dict,
    validate_solution,
)
from .rounding import derive_seed, greedy_instance_point
from .solver import SolverConfig, solve, solve_uniform
from .structuring import structure_in_blocks

BENCH_HEADER = "suite,case,seed,value,reference,ratio,runtime_ms"


def _print_solution(instance: Instance, solution) -> None:
    print(json.dumps(solution_to_dict(instance, solution), indent=2))


def _cmd_solve(args) -> int:
    instance = load_instance(args.instance)
    config = SolverConfig(
        epsilon=args.epsilon,
        delta=args.delta,
        gamma=args.gamma,
        n_level=args.n_level,
        xi=args.xi,
        restarts=args.restarts,
        seed=args.seed,
    )
    solution = solve(instance, config)
    value = instance.objective.evaluate(solution.selected)
    if args.out:
        save_solution(instance, solution, args.out)
        print(f"value {value}")
    else:
        _print_solution(instance, solution)
    return 0


def _cmd_solve_uniform(args) -> int:
    instance = load_instance(args.instance)
    solution = solve_uniform(instance, SolverConfig())
    _print_solution(instance, solution)
    return 0


def _cmd_brute(args) -> int:
    instance = load_instance(args.instance)
    solution = brute_force_solve(instance)
    _print_solution(instance, solution)
    return 0


def _instance_point(instance: Instance, eps: float) -> tuple[FractionalPoint, list]:
    config = SolverConfig(epsilon=eps)
    partitions = [
        structure_in_blocks(mkc.capacities, config.n_level)
        for mkc in instance.constraints
    ]
    mkcs = [
        (mkc.weights, partitions[t].blocks)
        for t, mkc in enumerate(instance.constraints)
    ]
    rng = random.Random(derive_seed(config.seed, "point"))
    point = greedy_instance_point(
        instance.objective,
        range(instance.n_items),
        mkcs,
        instance.additional.cap_groups(),
        float(config.gamma),
        eps,
        config.steps,
        config.samples,
        rng,
    )
    return point, partitions


def _cmd_lp(args) -> int:
    instance = load_instance(args.instance)
    point, _ = _instance_point(instance, args.epsilon)
    labels = instance.labels
    doc = {
        "value": point.value,
        "x": {labels[i]: point.x.get(i, 0.0) for i in range(len(labels))},
        "blocks": [
            [
                {
                    "y": {labels[i]: bp.y.get(i, 0.0) for i in range(len(labels))},
                    "z": [
                        {
                            "config": sorted(labels[i] for i in config),
                            "weight": float(mass),
                        }
                        for config, mass in sorted(
                            bp.z.items(),
                            key=lambda kv: sorted(labels[i] for i in kv[0]),
                        )
                    ],
                }
                for bp in per_constraint
            ]
            for per_constraint in point.blocks
        ],
    }
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def _cmd_grouping(args) -> int:
    instance = load_instance(args.instance)
    point, partitions = _instance_point(instance, 0.05)
    t, j = args.constraint, args.block
    if not 0 <= t < len(partitions):
        raise ValueError(f"no constraint {t} in this instance")
    if not 0 <= j < len(partitions[t].blocks):
        raise ValueError(f"constraint {t} has no block {j}")
    block = partitions[t].blocks[j]
    y = point.blocks[t][j].y
    grouping = compute_grouping(
        y,
        range(instance.n_items),
        instance.constraints[t].weights,
        block.capacity,
        block.size,
        args.mu,
    )
    labels = instance.labels
    doc = {
        "constraint": t,
        "block": j,
        "mu": str(args.mu),
        "capacity": str(block.capacity),
        "bins": block.size,
        "groups": [[labels[i] for i in group] for group in grouping.groups],
        "light": [labels[i] for i in grouping.light],
        "oversize": [labels[i] for i in grouping.oversize],
    }
    print(json.dumps(doc, indent=2))
    return 0


def _cmd_validate(args) -> int:
    instance = load_instance(args.instance)
    solution = load_solution(instance, args.solution)
    violations = validate_solution(instance, solution)
    if violations:
        for line in violations:
            print(line, file=sys.stderr)
        return 1
    print("OK")
    return 0


def _worker_count() -> int:
    raw = os.environ.get("MKCP_WORKERS", "1")
    try:
        count = int(raw)
    except ValueError:
        raise ValueError(f"MKCP_WORKERS must be an integer, got {raw!r}") from None
    if count < 1:
        raise ValueError("MKCP_WORKERS must be at least 1")
    return count


def _bench_case(suite: str, seed: int, index: int) -> tuple[float, float]:
    rng = random.Random(derive_seed(seed, suite, index))
    if suite == "tiny-exact":
        instance = random_instance(rng, max_items=5)
        config = SolverConfig(
            xi=instance.n_items,
            steps=1,
            samples=4,
            restarts=1,
            seed=derive_seed(seed, suite, index, "solve"),
        )
        solution = solve(instance, config)
        value = float(instance.objective.evaluate(solution.selected))
        reference = float(
            instance.objective.evaluate(brute_force_solve(instance).selected)
        )
        return value, reference
    if suite == "monotone":
        instance = monotone_instance(rng, max_items=7)
        config = SolverConfig(
            xi=1,
            steps=8,
            samples=32,
            restarts=1,
            delta=Fraction(1, 100),
            gamma=Fraction(9, 10),
            seed=derive_seed(seed, suite, index, "solve"),
        )
        solution = solve(instance, config)
        value = float(instance.objective.evaluate(solution.selected))
        reference = float(
            instance.objective.evaluate(brute_force_solve(instance).selected)
        )
        return value, reference
    if suite == "block-lp":
        costs, weights, capacity, n_bins = random_block(rng)
        result = block_lp_optimize(costs, weights, capacity, n_bins, eps=0.05)
        reference, _, _ = exact_block_lp(costs, weights, capacity, n_bins)
        return result.value, reference
    raise ValueError(f"unknown bench suite {suite!r}")


BENCH_SIZES = {"tiny-exact": 12, "monotone": 8, "block-lp": 12}


def _cmd_bench(args) -> int:
    suite = args.suite
    if suite not in BENCH_SIZES:
        known = ", ".join(sorted(BENCH_SIZES))
        raise ValueError(f"unknown bench suite {suite!r} (one of: {known})")
    seed = args.seed

    def run(index: int) -> str:
        start = time.perf_counter()
        value, reference = _bench_case(suite, seed, index)
        elapsed_ms = (time.perf_counter() - start) * 1000.0
        ratio = value / reference if reference else 1.0
        return (
            f"{suite},{suite}-{index:03d},{seed},"
            f"{value:.6g},{reference:.6g},{ratio:.4f},{elapsed_ms:.1f}"
        )

    print(BENCH_HEADER)
    indices = range(BENCH_SIZES[suite])
    workers = _worker_count()
    if workers == 1:
        rows = [run(i) for i in indices]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run, indices))
    for row in rows:
        print(row)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mkcp",
        description="Solve submodular multiple-knapsack instances.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run the full solver on an instance")
    p_solve.add_argument("instance")
    p_solve.add_argument("--epsilon", type=float, default=0.05)
    p_solve.add_argument("--delta", type=Fraction, default=Fraction(1, 5))
    p_solve.add_argument("--gamma", type=Fraction, default=Fraction(1, 20))
    p_solve.add_argument("--n-level", type=int, default=4, dest="n_level")
    p_solve.add_argument("--xi", type=int, default=2)
    p_solve.add_argument("--seed", type=int, default=0)
    p_solve.add_argument("--restarts", type=int, default=5)
    p_solve.add_argument("--out", default=None, help="write the solution file here")
    p_solve.set_defaults(func=_cmd_solve)

    p_uniform = sub.add_parser(
        "solve-uniform", help="solver specialized to one equal-capacity constraint"
    )
    p_uniform.add_argument("instance")
    p_uniform.set_defaults(func=_cmd_solve_uniform)

    p_brute = sub.add_parser("brute", help="exact solution by enumeration")
    p_brute.add_argument("instance")
    p_brute.set_defaults(func=_cmd_brute)

    p_lp = sub.add_parser("lp", help="dump the fractional relaxation point")
    p_lp.add_argument("instance")
    p_lp.add_argument("--epsilon", type=float, default=0.05)
    p_lp.set_defaults(func=_cmd_lp)

    p_grouping = sub.add_parser(
        "grouping", help="show the weight grouping of one block's witness"
    )
    p_grouping.add_argument("instance")
    p_grouping.add_argument("--constraint", type=int, required=True)
    p_grouping.add_argument("--block", type=int, required=True)
    p_grouping.add_argument("--mu", type=Fraction, required=True)
    p_grouping.set_defaults(func=_cmd_grouping)

    p_validate = sub.add_parser("validate", help="check a solution file")
    p_validate.add_argument("instance")
    p_validate.add_argument("solution")
    p_validate.set_defaults(func=_cmd_validate)

    p_bench = sub.add_parser("bench", help="run a benchmark suite, CSV on stdout")
    p_bench.add_argument("--suite", required=True)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 1
        return 0 if code == 0 else 1
    try:
        return args.func(args)
    except InternalInvariantError as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return 2
    except (ValueError, PackingError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
