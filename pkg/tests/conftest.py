import pytest

_CRITERIA = {}


@pytest.fixture(scope="session")
def criterion():
    """Record one part of an acceptance criterion: ``criterion(n, name, ok, detail)``."""

    def record(number, name, ok, detail=""):
        _CRITERIA.setdefault(number, []).append((name, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        parts = _CRITERIA[number]
        status = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status}")
        for name, ok, detail in parts:
            terminalreporter.write_line(f"    [{'pass' if ok else 'FAIL'}] {name}: {detail}")
