"""Acceptance criteria 1-20, one test each.

Run standalone with ``python3 tests/test_acceptance.py`` for a plain pass/fail
listing, or through pytest (the summary lines appear at the end of the run).
"""

from __future__ import annotations

import sys
from typing import Dict

import pytest

from evolab import verify

# criterion -> JSON bytes of the first run, reused by the reproducibility check
FIRST_RUN: Dict[int, str] = {}
LINES: Dict[int, str] = {}


def _record(result: verify.CheckResult) -> verify.CheckResult:
    LINES[result.criterion] = result.line()
    print(result.line())
    return result


@pytest.mark.parametrize("criterion", sorted(verify.CHECKS))
def test_criterion(criterion: int) -> None:
    result = verify.CHECKS[criterion]()
    FIRST_RUN[criterion] = verify.to_json([result])
    _record(result)
    assert result.passed, result.detail


def test_criterion_20_reproducibility() -> None:
    first = dict(FIRST_RUN) if len(FIRST_RUN) == len(verify.CHECKS) else None
    result = _record(verify.check_reproducibility(first))
    assert result.passed, result.detail


def main() -> int:
    failed = 0
    for criterion in sorted(verify.CHECKS):
        result = verify.CHECKS[criterion]()
        FIRST_RUN[criterion] = verify.to_json([result])
        failed += not _record(result).passed
    failed += not _record(verify.check_reproducibility(dict(FIRST_RUN))).passed
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
