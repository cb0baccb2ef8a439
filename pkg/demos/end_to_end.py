"""Build an instance in code, solve it, and check the answer end to end.

Run from the repository root:

    python3 demos/end_to_end.py
"""
from fractions import Fraction
from pathlib import Path
from tempfile import TemporaryDirectory

from mkcp_kit import (
    CoverageObjective,
    Instance,
    MultiKnapsackConstraint,
    SolverConfig,
    UniformMatroid,
    brute_force_solve,
    load_instance,
    save_instance,
    solve,
    theory_note,
    validate_solution,
)

# Six sensors cover overlapping zones; we can power at most three of them,
# and each sensor consumes rack space on two independent racks.
zones = {0: 4, 1: 2, 2: 5, 3: 3, 4: 2, 5: 4, 6: 1}
covers = [
    {0, 1},
    {1, 2},
    {2, 3},
    {3, 4, 5},
    {0, 5},
    {5, 6},
]
objective = CoverageObjective(
    {z: Fraction(w) for z, w in zones.items()},
    tuple(frozenset(c) for c in covers),
)
rack_a = MultiKnapsackConstraint(
    tuple(Fraction(w) for w in (3, 2, 4, 3, 2, 1)),
    (Fraction(6), Fraction(5)),
)
rack_b = MultiKnapsackConstraint(
    tuple(Fraction(w) for w in (1, 2, 2, 3, 1, 2)),
    (Fraction(5),),
)
instance = Instance(
    ("s0", "s1", "s2", "s3", "s4", "s5"),
    (rack_a, rack_b),
    objective,
    UniformMatroid(6, 3),
)

config = SolverConfig(xi=3, restarts=2, steps=4, samples=16, seed=7)
print(theory_note(config))

solution = solve(instance, config)
value = objective.evaluate(solution.selected)
picked = sorted(instance.labels[i] for i in solution.selected)
print(f"solver picked {picked} worth {value}")

reference = brute_force_solve(instance)
print(f"exhaustive search says the best value is "
      f"{objective.evaluate(reference.selected)}")

problems = validate_solution(instance, solution)
print("solution validates" if not problems else f"violations: {problems}")

with TemporaryDirectory() as scratch:
    path = Path(scratch) / "sensors.json"
    save_instance(instance, path)
    again = load_instance(path)
    print(f"instance round-trips through {path.name}: "
          f"{again.labels == instance.labels}")
