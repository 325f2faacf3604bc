import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import random_rows  # noqa: E402

from trilab.core import Triangle  # noqa: E402

# (label, passed, detail) lines appended by the acceptance suite
ACCEPTANCE_LINES: list[tuple[str, bool, str]] = []


def random_triangle(seed: int, depth: int) -> Triangle:
    left, right = random_rows(random.Random(seed), depth)
    return Triangle.from_rows(f"random-{seed}", left, right)


@pytest.fixture
def make_random_triangle():
    return random_triangle


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"{label}: {'PASS' if passed else 'FAIL'}  {detail}")
