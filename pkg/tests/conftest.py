"""Shared test plumbing.

Acceptance tests register one line each through `record_criterion`; the
collected lines are printed in the terminal summary so every run shows a
pass/fail verdict per criterion regardless of capture settings.
"""

import numpy as np
import pytest

CRITERION_LINES: list = []


def record_criterion(num: int, ok: bool, detail: str) -> None:
    CRITERION_LINES.append((num, ok, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not CRITERION_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for num, ok, detail in sorted(CRITERION_LINES):
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {num}: {verdict} - {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def criterion():
    return record_criterion
