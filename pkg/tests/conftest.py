import sys
from pathlib import Path

from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "default",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

# One verdict line per acceptance criterion, shown in the terminal summary.
ACCEPTANCE_VERDICTS: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_VERDICTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_VERDICTS):
            terminalreporter.write_line(ACCEPTANCE_VERDICTS[number])
