import pytest

_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one acceptance line; returns the pass flag for asserting."""
    def record(number: int, title: str, passed: bool, detail: str = "", skipped: bool = False) -> bool:
        status = "SKIP" if skipped else ("PASS" if passed else "FAIL")
        line = f"[{status}] criterion {number:>2}: {title} -- {detail}"
        _LINES.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
