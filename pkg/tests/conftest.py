import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

ACCEPTANCE_LINES = []


def pytest_configure(config):
    for name, doc in [
        ("trivial", "closed-form example checked exactly"),
        ("derived", "checked against an independent oracle"),
        ("paper", "value or behaviour stated in the source publication"),
        ("acceptance", "desk-scale acceptance criterion (slow)"),
    ]:
        config.addinivalue_line("markers", f"{name}: {doc}")


@pytest.fixture
def report():
    """Record a one-line acceptance verdict; printed again in the terminal summary."""
    def _report(number, passed, detail):
        line = f"ACCEPTANCE {number:>2} {'PASS' if passed else 'FAIL'}: {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        return passed
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
