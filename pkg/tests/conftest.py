import pytest

_LINES: list[str] = []


class Criterion:
    """Collects sub-checks for one acceptance criterion and reports a single line."""

    def __init__(self, label: str):
        self.label = label
        self.failures: list[str] = []
        self.notes: list[str] = []

    def check(self, ok, message: str):
        if not ok:
            self.failures.append(message)
        return bool(ok)

    def note(self, text: str):
        self.notes.append(text)

    def finish(self):
        status = "PASS" if not self.failures else "FAIL"
        detail = "; ".join(self.failures) if self.failures else "; ".join(self.notes)
        line = f"{status} {self.label}" + (f" -- {detail}" if detail else "")
        print(line)
        _LINES.append(line)
        assert not self.failures, line


@pytest.fixture
def criterion():
    made = []

    def make(label):
        c = Criterion(label)
        made.append(c)
        return c

    return make


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
