import pytest

from helpers import ACCEPTANCE_LINES, regression_configs
from purcell.model import two_atom


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def reference_two_atom():
    return two_atom(0.05, 3.0, 1.0)


@pytest.fixture(scope="session")
def regression_runs():
    """Density-matrix and amplitude trajectories for every regression scenario.

    Each run uses the default horizon (50 / predicted rate) and step, so it
    covers the whole decay the rate fits see.
    """
    from purcell.lindblad import amplitude_evolve, evolve
    from purcell.rates import default_dt, default_t_end

    runs = {}
    for name, cfg in regression_configs().items():
        t_end, dt = default_t_end(cfg), default_dt(cfg)
        runs[name] = (evolve(cfg, t_end, dt), amplitude_evolve(cfg, t_end, dt))
    return runs
