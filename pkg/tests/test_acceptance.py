"""End-to-end acceptance suite.

Runs every verification criterion at its stated tolerance and prints one
pass/fail line per criterion.  The two-component continuation trace is
computed once and shared by criteria 3-7.
"""

import pytest

from segcomp import verify

_CACHE = {}


def _run(index):
    if index not in _CACHE:
        _CACHE[index] = verify.ALL_CRITERIA[index - 1]()
    return _CACHE[index]


@pytest.mark.parametrize("index", range(1, 11))
def test_criterion(index, capfd):
    result = _run(index)
    status = "PASS" if result.passed else "FAIL"
    with capfd.disabled():
        print(f"[{status}] criterion {index} {result.name}: {result.detail}")
    assert result.passed, f"criterion {index} ({result.name}): {result.detail}"
