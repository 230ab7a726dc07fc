"""One pass/fail line per acceptance criterion, collected in the terminal summary."""

import pytest

from vfield_lab.acceptance import CRITERIA, run_criterion


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, acceptance_log):
    result = run_criterion(number)
    print(result.line())
    acceptance_log.append(result.line())
    assert result.passed, result.line()
