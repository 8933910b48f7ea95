import pytest

ACCEPTANCE = {}


@pytest.fixture
def record():
    """Store ``(number, description, passed, detail)`` for the acceptance summary."""

    def _record(number, description, passed, detail=""):
        ACCEPTANCE[number] = (description, bool(passed), detail)
        print(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {description}  {detail}")

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        description, passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {description}  {detail}")
