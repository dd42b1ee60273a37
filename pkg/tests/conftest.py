import numpy as np
import pytest
from hypothesis import settings

from crnentropy.netparse import parse_network
from crnentropy.networks import BUNDLED, bundled_text, cyclic, three_by_three, two_by_two

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def net2():
    return two_by_two()


@pytest.fixture
def net3():
    return three_by_three()


@pytest.fixture
def cycle3():
    return cyclic([1, 1, 1])


@pytest.fixture(params=BUNDLED)
def bundled(request):
    return parse_network(bundled_text(request.param), filename=request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# criterion lines collected by the acceptance suite, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep
