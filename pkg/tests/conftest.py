import pytest

_ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record one acceptance verdict: ``acceptance(k, ok, detail)``; asserts ``ok``."""

    def record(k, ok, detail=""):
        _ACCEPTANCE[k] = (bool(ok), detail)
        print(f"criterion {k}: {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, f"criterion {k}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
