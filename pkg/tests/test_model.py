import json
from fractions import Fraction

import pytest

from helpers import free_instance, instance, mkc, modular, partition, uniform
from mkcp_kit.model import (
    InstanceFormatError,
    Solution,
    instance_from_dict,
    load_instance,
    load_solution,
    number_to_json,
    parse_number,
    save_instance,
    save_solution,
    validate_solution,
)


def small_doc():
    return {
        "items": ["a", "b", "c"],
        "constraints": [
            {"weights": [1, 2, "0.35"], "bins": [3, "2.5"]},
        ],
        "objective": {"kind": "modular", "offset": 0, "profits": [1, 2, 3]},
        "additional": {"kind": "uniform", "rank": 2},
    }


def test_parse_number_exact():
    assert parse_number("0.35") == Fraction(7, 20)
    assert parse_number(12) == 12
    with pytest.raises(InstanceFormatError):
        parse_number(0.35)
    with pytest.raises(InstanceFormatError):
        parse_number(True)


def test_number_to_json_round_trip():
    assert number_to_json(Fraction(7, 20)) == "0.35"
    assert number_to_json(Fraction(-7, 20)) == "-0.35"
    assert number_to_json(Fraction(4)) == 4
    with pytest.raises(InstanceFormatError):
        number_to_json(Fraction(1, 3))


def test_instance_from_dict_normalizes():
    inst = instance_from_dict(small_doc())
    assert inst.n_items == 3
    assert inst.constraints[0].weights[2] == Fraction(7, 20)
    assert inst.constraints[0].capacities[1] == Fraction(5, 2)
    assert inst.additional.rank == 2


def test_load_instance_accepts_float_literals(tmp_path):
    doc = small_doc()
    path = tmp_path / "inst.json"
    text = json.dumps(doc).replace('"0.35"', "0.35")
    path.write_text(text, encoding="utf-8")
    inst = load_instance(path)
    assert inst.constraints[0].weights[2] == Fraction(7, 20)


def test_save_load_round_trip(tmp_path):
    inst = instance_from_dict(small_doc())
    path = tmp_path / "inst.json"
    save_instance(inst, path)
    again = load_instance(path)
    assert again.labels == inst.labels
    assert again.constraints == inst.constraints
    assert again.objective.to_payload() == inst.objective.to_payload()


def test_rejects_unknown_and_unsupported_kinds():
    doc = small_doc()
    doc["additional"] = {"kind": "matching"}
    with pytest.raises(InstanceFormatError, match="not supported"):
        instance_from_dict(doc)
    doc["additional"] = {"kind": "widget"}
    with pytest.raises(InstanceFormatError, match="unknown"):
        instance_from_dict(doc)


def test_rejects_misaligned_weights():
    doc = small_doc()
    doc["constraints"][0]["weights"] = [1, 2]
    with pytest.raises(InstanceFormatError):
        instance_from_dict(doc)


def test_validate_solution_reports_violations():
    inst = free_instance(
        ["a", "b"],
        [mkc([2, 2], [3])],
        modular([1, 1]),
    )
    overfull = Solution(frozenset([0, 1]), ((frozenset([0, 1]),),))
    assert any("exceeds" in p for p in validate_solution(inst, overfull))

    mismatched = Solution(frozenset([0, 1]), ((frozenset([0]),),))
    assert any("do not match" in p for p in validate_solution(inst, mismatched))

    good = Solution(frozenset([0]), ((frozenset([0]),),))
    assert validate_solution(inst, good) == []


def test_validate_solution_checks_additional():
    inst = instance(
        ["a", "b"],
        [mkc([1, 1], [2])],
        modular([1, 1]),
        uniform(2, 1),
    )
    too_many = Solution(frozenset([0, 1]), ((frozenset([0, 1]),),))
    assert any("additional" in p for p in validate_solution(inst, too_many))


def test_validate_solution_checks_partition_caps():
    inst = instance(
        ["a", "b", "c"],
        [mkc([1, 1, 1], [3])],
        modular([1, 1, 1]),
        partition(3, [[0, 1], [2]], [1, 1]),
    )
    bad = Solution(frozenset([0, 1]), ((frozenset([0, 1]),),))
    assert any("additional" in p for p in validate_solution(inst, bad))
    ok = Solution(frozenset([0, 2]), ((frozenset([0, 2]),),))
    assert validate_solution(inst, ok) == []


def test_solution_round_trip(tmp_path):
    inst = free_instance(
        ["a", "b"],
        [mkc([1, 1], [2]), mkc([1, 1], [1, 1])],
        modular([1, 1]),
    )
    solution = Solution(
        frozenset([0, 1]),
        (
            (frozenset([0, 1]),),
            (frozenset([0]), frozenset([1])),
        ),
    )
    path = tmp_path / "sol.json"
    save_solution(inst, solution, path)
    again = load_solution(inst, path)
    assert again == solution
    assert validate_solution(inst, again) == []


def test_duplicate_labels_rejected():
    with pytest.raises(InstanceFormatError):
        free_instance(["a", "a"], [mkc([1, 1], [2])], modular([1, 1]))
