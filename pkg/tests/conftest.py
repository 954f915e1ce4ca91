import pytest

from fraccond import FracParams, IntervalSet, UniformGrid, WindowConfig, build_bounded

# lines collected by the acceptance tests, echoed in the terminal summary
ACCEPTANCE_LINES = []


def canonical_config():
    return WindowConfig(IntervalSet([(-1, 1)]), IntervalSet([(1.5, 2)]),
                        IntervalSet([(-2, -1.5)]), (-4, 4))


@pytest.fixture(scope="session")
def cfg():
    return canonical_config()


@pytest.fixture(scope="session")
def params():
    return FracParams(0.25)


@pytest.fixture(scope="session")
def bounded_512(cfg, params):
    return build_bounded(cfg, params, UniformGrid(-4, 4, 512))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
