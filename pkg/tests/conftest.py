import re

import pytest

VERDICTS: dict = {}


@pytest.fixture
def verdict(request):
    """Record the outcome of one acceptance criterion under ``label``."""

    def record(label, ok, detail=""):
        VERDICTS[label] = (bool(ok), detail)
        print(f"{'PASS' if ok else 'FAIL'} {label} {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(VERDICTS, key=lambda s: (int(re.search(r"\d+", s).group()), s)):
        ok, detail = VERDICTS[label]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {label} {detail}")
