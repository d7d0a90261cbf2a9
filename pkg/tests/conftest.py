import sys

import pytest

from momentdet.moments import clear_cache


@pytest.fixture(autouse=True)
def _fresh_moment_cache():
    clear_cache()
    yield


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
