import numpy as np
import pytest

from mvtsg.game_model import random_policy, random_toy_game


@pytest.fixture
def toy7():
    return random_toy_game(7)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def policy_pair(model, rng):
    return random_policy(model, rng), random_policy(model, rng)


_CRITERIA = {}


@pytest.fixture
def report_criterion():
    """Record one pass/fail line per acceptance criterion; shown in the terminal summary."""
    def record(number, passed, detail=""):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        _CRITERIA[number] = line
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for key in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[key])
