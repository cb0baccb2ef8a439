"""Run the benchmark suites in-process and summarize the ratio columns.

    python3 demos/bench_run.py
"""
import contextlib
import io
import statistics

from mkcp_kit.cli import main

for suite in ("tiny-exact", "block-lp", "monotone"):
    buffer = io.StringIO()
    with contextlib.redirect_stdout(buffer):
        code = main(["bench", "--suite", suite, "--seed", "42"])
    assert code == 0, f"bench exited with {code}"
    rows = buffer.getvalue().strip().splitlines()[1:]
    ratios = [float(row.split(",")[5]) for row in rows]
    print(f"{suite:>10}: {len(rows)} cases, "
          f"ratio min {min(ratios):.3f} / mean {statistics.fmean(ratios):.3f}")
