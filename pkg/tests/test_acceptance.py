"""Acceptance gate: every criterion at its stated tolerance, one line each."""

import pytest

from codseries.verification import CRITERIA, run_criterion

NAMES = [name for name, _ in CRITERIA]


@pytest.mark.parametrize("name", NAMES)
def test_criterion(name):
    result = run_criterion(name, quick=False)
    print(f"{'PASS' if result.passed else 'FAIL'} {result.name}: {result.detail}")
    assert result.passed, result.detail
