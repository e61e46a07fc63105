"""Shared test configuration and the acceptance-criterion reporter."""

from __future__ import annotations

import numpy as np
import pytest

_ACCEPTANCE_RESULTS: list[tuple[int, str, bool, str]] = []


def record_criterion(number: int, name: str, passed: bool, detail: str = "") -> None:
    _ACCEPTANCE_RESULTS.append((number, name, passed, detail))


def check_criterion(number: int, name: str, passed: bool, detail: str = "") -> None:
    record_criterion(number, name, passed, detail)
    assert passed, f"criterion {number} ({name}): {detail}"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(_ACCEPTANCE_RESULTS):
        status = "PASS" if passed else "FAIL"
        line = f"[{status}] criterion {number:2d}: {name}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(171717)
