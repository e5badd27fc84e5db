"""The fourteen acceptance criteria, one PASS/FAIL line each."""

import pytest

from renflow.acceptance import CRITERIA, run_one


@pytest.mark.parametrize("number", [c[0] for c in CRITERIA],
                         ids=[f"{c[0]:02d}-{c[1].replace(' ', '_')}" for c in CRITERIA])
def test_criterion(number, capsys):
    outcome = run_one(number)
    with capsys.disabled():
        print("\n" + outcome.line())
    assert outcome.passed, outcome.detail
