import re
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

from quipi.hamiltonians import build_h2, build_kitaev_ring, build_tfim, random_tfim_parameters, shift_for_ratio
from quipi.solver import parse_state

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

ACCEPTANCE_KEY = pytest.StashKey[list]()


def _criterion_order(line):
    num, tag = re.search(r"criterion (\d+)(\w*)", line).groups()
    return int(num), tag


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=_criterion_order):
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance_log(request):
    return request.config.stash[ACCEPTANCE_KEY]


@pytest.fixture(scope="session")
def h2():
    return build_h2(0.75)


@pytest.fixture(scope="session")
def h2_shifted():
    return build_h2(0.75, shift=1.37)


@pytest.fixture(scope="session")
def singlet():
    return parse_state("01-10", 2)


@pytest.fixture(scope="session")
def tfim_uniform():
    h = build_tfim(3, np.ones(3), np.ones((3, 3)))
    return h.with_shift(shift_for_ratio(h, 0.3))


@pytest.fixture(scope="session")
def tfim_random():
    h = build_tfim(3, *random_tfim_parameters(3, 42))
    return h.with_shift(shift_for_ratio(h, 0.3))


@pytest.fixture(scope="session")
def kitaev():
    h = build_kitaev_ring(3, 1.0, 0.5)
    return h.with_shift(shift_for_ratio(h, 0.5))
