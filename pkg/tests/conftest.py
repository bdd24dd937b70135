import numpy as np
import pytest
from hypothesis import settings

from sklsc.grid import TorusGrid

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture
def circle64():
    return TorusGrid(64)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line, then fail the test if the check or its time budget failed."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number, ok, detail, elapsed, budget):
        in_time = elapsed < budget
        passed = bool(ok) and in_time
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail} [{elapsed:.2f}s < {budget:g}s: {in_time}]"
        lines.append(line)
        print(line)
        assert ok, line
        assert in_time, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
