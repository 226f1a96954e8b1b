import pytest

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def record():
    """record(n, ok, detail) stores one acceptance line and prints it."""
    def _record(n: int, ok: bool, detail: str = ""):
        ACCEPTANCE[n] = (bool(ok), detail)
        print(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
