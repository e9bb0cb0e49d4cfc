import os
import re

from hypothesis import HealthCheck, settings

from support import ACCEPTANCE_RESULTS, SEED

settings.register_profile(
    "qpwave",
    deadline=None,
    max_examples=int(os.environ.get("QPWAVE_MAX_EXAMPLES", "60")),
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("qpwave")


def pytest_report_header(config):
    return f"qpwave test seed: {SEED} (set QPWAVE_SEED to change)"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda s: (int(re.match(r"\d+", s).group()), s)):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
