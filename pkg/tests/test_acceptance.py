"""Acceptance suite: one test per criterion at its stated tolerance.

Each test prints a single ``[PASS]``/``[FAIL]`` line with the measured
numbers, straight to the terminal, so ``pytest -v`` shows them whether or
not the criterion holds. Solves are memoised across criteria, so the whole
module takes several minutes.
"""
import pytest

from fcs_syk import acceptance


@pytest.mark.acceptance
@pytest.mark.parametrize("fn", acceptance.ALL, ids=lambda f: f.__name__.removeprefix("criterion_"))
def test_criterion(fn, capsys):
    c = fn()
    with capsys.disabled():
        print("\n" + c.line())
    assert c.passed, c.line()
