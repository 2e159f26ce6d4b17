import logging
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

# the literal-room-chain warning is expected throughout the tests
logging.getLogger("defsched.generator").setLevel(logging.ERROR)


def pytest_terminal_summary(terminalreporter):
    from verdicts import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(LINES):
            terminalreporter.write_line(LINES[k])
