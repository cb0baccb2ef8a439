import random
from fractions import Fraction

import pytest

from helpers import coverage, cut, fracs, modular, table
from mkcp_kit.objectives import (
    ModularObjective,
    ObjectiveError,
    ShiftedObjective,
    TableObjective,
    evaluate,
    marginal,
    multilinear_estimate,
    purge,
    shifted,
)


def test_modular_evaluate_and_marginal():
    spec = modular([5, 1, 2], offset=3)
    assert evaluate(spec, []) == 3
    assert evaluate(spec, [0, 2]) == 10
    assert marginal(spec, frozenset([0]), 1) == 1
    assert marginal(spec, frozenset([0]), 0) == 0


def test_modular_rejects_possible_negative_values():
    with pytest.raises(ObjectiveError):
        ModularObjective(Fraction(1), fracs([-2, 1]))


def test_modular_monotone_flag():
    assert modular([1, 0]).is_monotone()
    assert not modular([2, -1], offset=5).is_monotone()


def test_coverage_union_semantics():
    spec = coverage({"a": 2, "b": 3, "c": 5}, [["a", "b"], ["b"], ["c"]])
    assert evaluate(spec, [0, 1]) == 5
    assert evaluate(spec, [0, 1, 2]) == 10
    assert spec.is_monotone()


def test_cut_triangle_values():
    spec = cut(3, [(0, 1, 1), (1, 2, 1), (0, 2, 1)], [0, 1, 2])
    assert evaluate(spec, [0]) == 2
    assert evaluate(spec, [0, 1]) == 2
    assert evaluate(spec, [0, 1, 2]) == 0
    assert not spec.is_monotone()


def test_cut_requires_distinct_vertices():
    with pytest.raises(ObjectiveError):
        cut(2, [(0, 0, 1)], [0, 1])


def test_table_rejects_supermodular():
    with pytest.raises(ObjectiveError):
        table(2, [0, 0, 0, 1])


def test_table_accepts_and_flags_monotone():
    spec = table(2, [0, 2, 3, 4])
    assert spec.evaluate([0]) == 2
    assert spec.is_monotone()
    dipped = table(2, [1, 2, 2, 1])
    assert not dipped.is_monotone()


def test_table_size_guard():
    with pytest.raises(ObjectiveError):
        TableObjective.from_values(2, fracs([0, 1, 1]))


def test_purge_drops_negative_marginal():
    spec = cut(2, [(0, 1, 1)], [0, 1])
    assert purge(spec, [0, 1]) == {0}


def test_purge_scans_ascending_ids():
    # identical items on one edge: the smaller id survives
    spec = cut(3, [(0, 1, 2), (1, 2, 2)], [0, 1, 2])
    assert purge(spec, [2, 0]) == {0, 2}
    assert purge(spec, [0, 1, 2]) == {0, 1}


def test_purge_keeps_everything_when_monotone():
    spec = coverage({"a": 1, "b": 1}, [["a"], ["b"]])
    assert purge(spec, [1, 0]) == {0, 1}


def test_multilinear_estimate_modular_is_exact():
    spec = modular([2, 4], offset=1)
    rng = random.Random(7)
    assert multilinear_estimate(spec, [0.5, 0.25], rng, samples=1) == 3.0


def test_multilinear_estimate_converges():
    spec = coverage({"a": 1, "b": 1}, [["a"], ["a", "b"]])
    rng = random.Random(11)
    estimate = multilinear_estimate(spec, [0.5, 0.5], rng, samples=4000)
    assert abs(estimate - 1.25) < 0.05


def test_shifted_objective_evaluates_with_base():
    spec = coverage({"a": 2, "b": 3}, [["a"], ["b"]])
    g = shifted(spec, frozenset([0]))
    assert g.evaluate([]) == 2
    assert g.evaluate([1]) == 5


def test_shifted_modular_coefficients_mask_base():
    spec = modular([5, 7], offset=1)
    g = shifted(spec, frozenset([0]))
    assert isinstance(g, ShiftedObjective)
    offset, profits = g.modular_coefficients()
    assert offset == 6
    assert profits == (0, 7)
