"""Acceptance criteria at full size; one PASS/FAIL line per criterion.

Run ``pytest tests/test_acceptance.py -v -s`` to see the lines, or
``blochloc validate`` for the same checks outside pytest.
"""

import pytest

from blochloc import acceptance


@pytest.mark.slow
@pytest.mark.parametrize("check", acceptance.CRITERIA,
                         ids=[c.__name__ for c in acceptance.CRITERIA])
def test_criterion(check):
    result = check(quick=False)
    print(result.line())
    assert result.passed, result.line()
