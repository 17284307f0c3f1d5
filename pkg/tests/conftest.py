import pytest

from acceptance_report import RESULTS


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        ok, detail = RESULTS[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {detail}")


@pytest.fixture
def record():
    def _record(number, ok, detail):
        RESULTS[number] = (bool(ok), detail)
        print(f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {detail}")
        return ok

    return _record
