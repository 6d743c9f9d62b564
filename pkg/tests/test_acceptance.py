"""Acceptance gate: every criterion at its stated tolerance, one line each.

Run with ``pytest -s tests/test_acceptance.py`` to see the lines live; they
are also collected in the terminal summary.
"""

import pytest

from congsiegel.acceptance import CRITERIA, run_criterion

LINES = []


@pytest.fixture(scope="module", autouse=True)
def report_lines():
    yield
    print("\n" + "\n".join(LINES))


@pytest.mark.parametrize("number", list(CRITERIA), ids=[f"c{n:02d}-{CRITERIA[n][0].replace(' ', '-')}" for n in CRITERIA])
def test_criterion(number, capsys):
    result = run_criterion(number)
    LINES.append(result.line())
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.line()
