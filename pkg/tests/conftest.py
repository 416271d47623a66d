import pytest

# criterion number -> (passed, message), filled in by test_acceptance
ACCEPTANCE: dict = {}


@pytest.fixture
def report():
    def record(number: int, passed: bool, message: str):
        ACCEPTANCE[number] = (bool(passed), message)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, message = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {message}")
