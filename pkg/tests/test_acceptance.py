"""Acceptance criteria, one test per criterion.

Each test runs the matching verification suite and prints a single
``PASS``/``FAIL`` line with the wall time and its limit.  Suites that share a
Monte Carlo run (resampling, census, envelope, vortex probability) reuse the
in-process run cache, so the time of the first one includes the simulation.
"""

import time

import pytest

from zngauge.harness_oracle import run_suite

# (criterion, suite, time limit in seconds)
CRITERIA = [
    (1, "operators", 60),
    (2, "surfaces", 60),
    (3, "oracle", 1),
    (4, "sampler", 120),
    (5, "resampling", 600),
    (6, "census", 600),
    (7, "counting", 300),
    (8, "agreement", 120),
    (9, "s-beta", 180),
    (10, "theta", 1),
    (11, "monotonicity", 300),
    (12, "envelope", 600),
    (13, "vortex-probability", 600),
]


@pytest.mark.parametrize("criterion,suite,limit", CRITERIA, ids=[c[1] for c in CRITERIA])
def test_acceptance_criterion(criterion, suite, limit, capsys):
    start = time.perf_counter()
    report = run_suite(suite)
    elapsed = time.perf_counter() - start
    in_time = elapsed <= limit
    ok = report.passed and in_time
    with capsys.disabled():
        status = "PASS" if ok else "FAIL"
        print(f"\n[criterion {criterion:2d}] {status} {suite}: "
              f"{len(report.checks) - len(report.failures())}/{len(report.checks)} checks, "
              f"{elapsed:.1f}s (limit {limit}s)")
        for check in report.failures():
            print(f"    failed: {check.name} measured={check.measured} target={check.target}")
    assert report.passed, report.table()
    assert in_time, f"{suite} took {elapsed:.1f}s, limit {limit}s"
