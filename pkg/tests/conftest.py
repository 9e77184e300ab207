import pytest

ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
    passed = sum(line.startswith("[PASS]") for line in ACCEPTANCE_LINES.values())
    terminalreporter.write_line(f"{passed}/{len(ACCEPTANCE_LINES)} criteria passed")


@pytest.fixture
def record_acceptance():
    def record(result):
        ACCEPTANCE_LINES[result.number] = result.line()
    return record
