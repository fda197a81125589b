import pytest

_ACCEPTANCE: dict[int, str] = {}


class AcceptanceRecorder:
    def __call__(self, number: int, title: str, ok: bool, detail: str = "") -> bool:
        status = "PASS" if ok else "FAIL"
        _ACCEPTANCE[number] = f"criterion {number} [{status}] {title}" + (f": {detail}" if detail else "")
        print(_ACCEPTANCE[number])
        return ok


@pytest.fixture
def acceptance():
    return AcceptanceRecorder()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[number])
