import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# criterion label -> list of (check name, passed, detail)
ACCEPTANCE = {}


@pytest.fixture
def record():
    def _record(criterion, check, passed, detail=""):
        ACCEPTANCE.setdefault(criterion, []).append((check, bool(passed), detail))
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE):
        rows = ACCEPTANCE[criterion]
        ok = all(p for _, p, _ in rows)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {criterion}")
        for check, passed, detail in rows:
            terminalreporter.write_line(f"        {'ok ' if passed else 'BAD'} {check}: {detail}")
