"""One test per acceptance criterion; each prints its pass/fail line."""

import pytest

from dske.acceptance import CRITERIA, run_criterion


@pytest.mark.parametrize("number", sorted(CRITERIA), ids=lambda n: f"criterion{n}")
def test_criterion(number, capsys):
    result = run_criterion(number)
    with capsys.disabled():
        print("\n" + result.line)
    assert result.passed, result.line
