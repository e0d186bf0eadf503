import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import acceptance_report  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    lines = acceptance_report.summary_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
