import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import lines
    out = lines()
    if out:
        terminalreporter.section("acceptance criteria")
        for line in out:
            terminalreporter.write_line(line)
