"""Acceptance run: the ten headline criteria at their stated scales and tolerances.

Each criterion maps onto one verification suite with its default scale.
Run directly (``python3 tests/test_acceptance.py``) for a plain PASS/FAIL
listing; under pytest the same lines appear in the terminal summary.
"""

import sys

import pytest

from trokit.numkernel import Tolerance
from trokit.suites import run_suite

TOL = Tolerance(rank_tol=1e-10, eq_tol=1e-8, gap_tol=1e-6)

CRITERIA = [
    (1, "TRO reflexivity (200 instances, < 60 s)", "tro-reflexive"),
    (2, "ortho-map on commuting projections (200 x 50)", "ortho"),
    (3, "pattern oracle, all 512 3x3 patterns (< 10 s)", "pattern-oracle"),
    (4, "block reconstruction (exhaustive 3x3 + 100 at 6x6)", "blocks"),
    (5, "partial-isometry span (100 TROs)", "isometries"),
    (6, "rank-one sums (100 operators)", "rankone"),
    (7, "upper-triangular 2x2 fixture", "fixture"),
    (8, "cover soundness (100 semi-normalizers)", "sn-cover"),
    (9, "sum analysis fixtures and samples", "sum"),
    (10, "lattice shadow (50 patterns, m <= 4)", "lattice"),
]

RESULTS: list[str] = []


def _line(number, label, rep):
    status = "PASS" if rep.ok else "FAIL"
    line = f"criterion {number:2d} [{status}] {label}: {rep.instances} instances, {rep.wall_time:.2f}s"
    if not rep.ok:
        line += f", first failure {rep.failures[0]}"
    return line


@pytest.mark.parametrize("number,label,suite", CRITERIA, ids=[c[2] for c in CRITERIA])
def test_criterion(number, label, suite):
    rep = run_suite(suite, seed=0, tol=TOL)
    line = _line(number, label, rep)
    RESULTS.append(line)
    print(line)
    assert rep.ok, line


if __name__ == "__main__":
    failed = 0
    for number, label, suite in CRITERIA:
        rep = run_suite(suite, seed=0, tol=TOL)
        print(_line(number, label, rep), flush=True)
        failed += not rep.ok
    sys.exit(1 if failed else 0)
