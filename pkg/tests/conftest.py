import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cities import random_city, tiny_city  # noqa: E402


@pytest.fixture
def tiny():
    return tiny_city()


@pytest.fixture
def city():
    return random_city(7)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
