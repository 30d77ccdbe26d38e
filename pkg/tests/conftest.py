from __future__ import annotations

from pathlib import Path

import pytest

GOLDEN_DIR = Path(__file__).parent / "golden"

# filled by test_acceptance, printed once at the end of the run
CRITERIA: dict[str, list[str]] = {}


def pytest_addoption(parser):
    parser.addoption("--regen-golden", action="store_true", default=False,
                     help="rewrite tests/golden from the current code instead of comparing")


@pytest.fixture(scope="session")
def regen_golden(request) -> bool:
    return request.config.getoption("--regen-golden")


@pytest.fixture
def report():
    def add(criterion: str, ok: bool, detail: str):
        line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
        CRITERIA.setdefault(criterion, []).append(line)
        print(line)
        return ok
    return add


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(CRITERIA, key=lambda k: (int("".join(c for c in k if c.isdigit()) or 0), k)):
        for line in CRITERIA[key]:
            terminalreporter.write_line(line)
