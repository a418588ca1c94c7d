"""The ten acceptance criteria, each at its stated tolerance.

Every case prints one PASS/FAIL line straight to the terminal, then asserts
the verdict.
"""

import json
import time

import pytest

from obtuselab import acceptance as A


def _summary(row):
    skip = {"criterion", "title", "passed", "runs", "per_cone", "ray_measure"}
    keep = {k: v for k, v in row.items() if k not in skip}
    return json.dumps(keep, default=str)[:400]


@pytest.mark.slow
@pytest.mark.parametrize("number", range(1, 11))
def test_criterion(number, capsys):
    fn = A.CRITERIA[number - 1]
    t0 = time.perf_counter()
    row = fn()
    secs = time.perf_counter() - t0
    verdict = "PASS" if row["passed"] else "FAIL"
    with capsys.disabled():
        print(f"\ncriterion {number:2d} [{verdict}] {row['title']} ({secs:.1f} s) {_summary(row)}")
    assert row["passed"], json.dumps(row, default=str)
