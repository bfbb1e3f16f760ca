import json
from pathlib import Path

import pytest

FROZEN = json.loads((Path(__file__).parent / "oracles" / "frozen.json").read_text())

# criterion number -> (title, passed, detail); filled by test_acceptance
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def frozen():
    return FROZEN


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {k}: {title} -- {detail}")
