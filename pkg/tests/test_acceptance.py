"""Acceptance criteria at their pinned tolerances, one test per criterion.

Each criterion prints its own pass/fail line (also available through the
CLI: ``twisteta selftest``).  Criterion A3 exercises the flux-response
identity with the bare volume normalization ``h/(2 pi^2)``; the exact
engines refute that constant (see A3b and the specflow module docs), so the
A3 test fails by construction and documents the measured discrepancy.  The
calibrated form A3b passes at the same 1e-8 tolerance on the same sweep,
with the identical spectral-flow bookkeeping.
"""

import pytest

from twisteta.selftest import run_criteria

LIMITS = {  # runtime budgets, seconds
    "A1": 1.0,
    "A2": 30.0,
    "A3": 120.0,
    "A3b": 120.0,
    "A4": 60.0,
    "A5": 60.0,
    "A6": 30.0,
    "A7": 60.0,
}


@pytest.fixture(scope="module")
def results():
    table = {r.ident: r for r in run_criteria()}
    for r in table.values():
        status = "PASS" if r.passed else "FAIL"
        print(f"[{status}] {r.ident} {r.name}: {r.detail} ({r.seconds:.1f}s)")
    return table


def _check(results, ident):
    r = results[ident]
    assert r.seconds < LIMITS[ident], f"{ident} exceeded runtime budget: {r.seconds:.1f}s"
    assert r.passed, f"{ident} {r.name}: {r.detail}"


def test_criterion_1_clifford_algebra(results):
    _check(results, "A1")


def test_criterion_2_eta_oracle(results):
    _check(results, "A2")


def test_criterion_3_spectral_flow_bare_constant(results):
    # Expected to fail: the measured eta response on the unit 3-sphere is
    # t/2 - (2/3) t^3 between crossings (exact Hurwitz continuation,
    # finite-part heat quadrature, and the closed form eta(1/2) = 1/6 all
    # agree), not the bare t of the h/(2 pi^2) normalization.  The check
    # keeps its 1e-8 tolerance, and the failure is the honest outcome.
    _check(results, "A3")


def test_criterion_3_spectral_flow_calibrated(results):
    _check(results, "A3b")


def test_criterion_4_weitzenbock(results):
    _check(results, "A4")


def test_criterion_5_psc_stability(results):
    _check(results, "A5")


def test_criterion_6_conformal_invariance(results):
    _check(results, "A6")


def test_criterion_7_truncation_stability(results):
    _check(results, "A7")
