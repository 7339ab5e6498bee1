import pytest

from dunklmax import MultiplicitySetting, dyadic_family

# settings used throughout: rank one with and without weight, a genuinely
# weighted plane, and the classical three-dimensional case
SETTINGS = {
    "d1k0": MultiplicitySetting(1, (0.0,)),
    "d1k1": MultiplicitySetting(1, (1.0,)),
    "d2k05": MultiplicitySetting(2, (0.5, 0.5)),
    "d3k0": MultiplicitySetting(3, (0.0, 0.0, 0.0)),
}


@pytest.fixture(params=list(SETTINGS), ids=list(SETTINGS))
def setting(request):
    return SETTINGS[request.param]


@pytest.fixture(scope="session")
def d1k1():
    return SETTINGS["d1k1"]


@pytest.fixture(scope="session")
def family_d1k1(d1k1):
    return dyadic_family(d1k1)


# PASS/FAIL lines from the acceptance suite, repeated after the test summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
