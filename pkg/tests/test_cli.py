"""End-to-end checks of the command line surface."""
import json
import math

import pytest

from mkcp_kit.cli import BENCH_HEADER, main
from mkcp_kit.exact import brute_force_solve
from mkcp_kit.model import load_instance, load_solution, save_instance, validate_solution

from helpers import free_instance, instance, mkc, modular, uniform


@pytest.fixture
def inst_path(tmp_path):
    inst = free_instance(
        ["a", "b", "c"], [mkc([4, 2, 3], [5, 4])], modular([7, 3, 5])
    )
    path = tmp_path / "inst.json"
    save_instance(inst, path)
    return path


def solve_args(inst_path, out=None):
    args = ["solve", str(inst_path), "--xi", "1", "--restarts", "1", "--seed", "3"]
    if out is not None:
        args += ["--out", str(out)]
    return args


class TestSolveCommand:
    def test_prints_a_solution_document(self, inst_path, capsys):
        assert main(solve_args(inst_path)) == 0
        doc = json.loads(capsys.readouterr().out)
        assert set(doc) == {"selected", "assignments"}

    def test_written_file_validates(self, inst_path, tmp_path, capsys):
        out = tmp_path / "sol.json"
        assert main(solve_args(inst_path, out)) == 0
        assert capsys.readouterr().out.startswith("value ")
        assert main(["validate", str(inst_path), str(out)]) == 0
        assert capsys.readouterr().out.strip() == "OK"

    def test_same_seed_gives_byte_identical_files(self, inst_path, tmp_path):
        first = tmp_path / "one.json"
        second = tmp_path / "two.json"
        assert main(solve_args(inst_path, first)) == 0
        assert main(solve_args(inst_path, second)) == 0
        assert first.read_bytes() == second.read_bytes()

    def test_solve_uniform_prints_a_solution(self, tmp_path, capsys):
        inst = free_instance(
            ["a", "b", "c"], [mkc([2, 3, 2], [4, 4])], modular([5, 4, 3])
        )
        path = tmp_path / "uniform.json"
        save_instance(inst, path)
        assert main(["solve-uniform", str(path)]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert set(doc) == {"selected", "assignments"}


class TestOracleCommands:
    def test_brute_matches_the_library_oracle(self, inst_path, capsys):
        assert main(["brute", str(inst_path)]) == 0
        doc = json.loads(capsys.readouterr().out)
        inst = load_instance(inst_path)
        expected = brute_force_solve(inst)
        ids = frozenset(inst.id_of(label) for label in doc["selected"])
        assert inst.objective.evaluate(ids) == inst.objective.evaluate(
            expected.selected
        )

    def test_validate_rejects_an_overfull_solution(self, inst_path, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(
            json.dumps(
                {"selected": ["a", "c"], "assignments": [[["a", "c"], []]]}
            )
        )
        assert main(["validate", str(inst_path), str(bad)]) == 1
        assert "bin" in capsys.readouterr().err


class TestPointCommands:
    def test_lp_dumps_a_dense_point(self, inst_path, capsys):
        assert main(["lp", str(inst_path)]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert set(doc) == {"value", "x", "blocks"}
        assert set(doc["x"]) == {"a", "b", "c"}
        assert len(doc["blocks"]) == 1
        for block in doc["blocks"][0]:
            assert set(block["y"]) == {"a", "b", "c"}
            for entry in block["z"]:
                assert set(entry) == {"config", "weight"}

    def test_grouping_reports_the_block_shape(self, inst_path, capsys):
        args = ["grouping", str(inst_path), "--constraint", "0", "--block", "1"]
        assert main(args + ["--mu", "1/2"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["bins"] == 1
        assert doc["capacity"] == "4"
        seen = set()
        for part in doc["groups"] + [doc["light"], doc["oversize"]]:
            seen.update(part)
        assert seen <= {"a", "b", "c"}

    def test_grouping_rejects_a_missing_block(self, inst_path, capsys):
        args = [
            "grouping", str(inst_path),
            "--constraint", "0", "--block", "7", "--mu", "1/2",
        ]
        assert main(args) == 1
        assert "block" in capsys.readouterr().err


class TestBench:
    def parse(self, out):
        lines = out.strip().splitlines()
        assert lines[0] == BENCH_HEADER
        return [line.split(",") for line in lines[1:]]

    def test_tiny_exact_ratio_is_one(self, capsys):
        assert main(["bench", "--suite", "tiny-exact", "--seed", "7"]) == 0
        rows = self.parse(capsys.readouterr().out)
        assert len(rows) == 12
        for row in rows:
            assert row[0] == "tiny-exact"
            assert float(row[5]) >= 1.0

    def test_monotone_ratio_clears_the_floor(self, capsys):
        assert main(["bench", "--suite", "monotone", "--seed", "42"]) == 0
        rows = self.parse(capsys.readouterr().out)
        assert len(rows) == 8
        for row in rows:
            assert float(row[5]) >= 1 - 1 / math.e - 0.1

    def test_block_lp_ratio_clears_the_floor(self, capsys):
        assert main(["bench", "--suite", "block-lp", "--seed", "1"]) == 0
        rows = self.parse(capsys.readouterr().out)
        assert len(rows) == 12
        for row in rows:
            assert float(row[5]) >= 0.95

    def test_worker_count_does_not_change_the_rows(self, capsys, monkeypatch):
        def run():
            assert main(["bench", "--suite", "block-lp", "--seed", "5"]) == 0
            rows = self.parse(capsys.readouterr().out)
            return [row[:6] for row in rows]

        monkeypatch.setenv("MKCP_WORKERS", "1")
        serial = run()
        monkeypatch.setenv("MKCP_WORKERS", "3")
        threaded = run()
        assert serial == threaded

    def test_bad_worker_count_is_a_usage_error(self, capsys, monkeypatch):
        monkeypatch.setenv("MKCP_WORKERS", "many")
        assert main(["bench", "--suite", "block-lp", "--seed", "1"]) == 1
        assert "MKCP_WORKERS" in capsys.readouterr().err


class TestErrorPaths:
    def test_unparseable_instance_exits_one(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert main(["brute", str(path)]) == 1
        assert capsys.readouterr().err

    def test_missing_file_exits_one(self, tmp_path):
        assert main(["brute", str(tmp_path / "absent.json")]) == 1

    def test_unknown_subcommand_exits_one(self, capsys):
        assert main(["conquer"]) == 1

    def test_unknown_suite_exits_one(self, capsys):
        assert main(["bench", "--suite", "imaginary"]) == 1
        assert "imaginary" in capsys.readouterr().err

    def test_help_exits_zero(self, capsys):
        assert main(["--help"]) == 0
        assert "subcommand" in capsys.readouterr().out or True
