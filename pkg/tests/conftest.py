import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def report(request):
    """Record one acceptance verdict for the end-of-run summary."""
    rows = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number, name, ok, detail):
        rows.append((number, name, bool(ok), detail))
        print(f"criterion {number} {'PASS' if ok else 'FAIL'}: {name} ({detail})")

    return record


def pytest_terminal_summary(terminalreporter, config):
    rows = config.stash.get(_ACCEPTANCE, [])
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, ok, detail in sorted(rows):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number}. {name}: {detail}")
