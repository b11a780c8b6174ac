"""One pass/fail line per acceptance criterion (listed again in the terminal summary).

Run directly (python tests/test_acceptance.py) to print just the lines.
"""
import pytest

from degmhd import acceptance

from conftest import ACCEPTANCE_LINES


@pytest.mark.parametrize("number", sorted(acceptance.CHECKS))
def test_criterion(number, capsys):
    check = acceptance.run_check(number)
    line = check.line()
    ACCEPTANCE_LINES.append(line)
    with capsys.disabled():
        print("\n" + line)
    assert check.passed, line


if __name__ == "__main__":
    import sys
    results = acceptance.run_all()
    for c in results:
        print(c.line())
    sys.exit(0 if all(c.passed for c in results) else 1)
