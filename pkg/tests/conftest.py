import numpy as np
import pytest

from hetsim.montecarlo import RunConfig, run_campaign
from hetsim.radio import ChannelModel, default_mcs_table
from hetsim.scenario import ScenarioConfig


@pytest.fixture(scope="session")
def scenario():
    return ScenarioConfig()


@pytest.fixture(scope="session")
def channel():
    return ChannelModel()


@pytest.fixture(scope="session")
def mcs():
    return default_mcs_table()


@pytest.fixture(scope="session")
def small_campaign(scenario):
    """Reduced campaign shared by module-level tests (60 iters, two loads)."""
    run = RunConfig(
        iterations=60,
        seed=4242,
        offered_load_mbps=(42.0, 66.0),
        scheme="prr:1.0",
        renev_enabled=True,
        donor_floor=0,
        jobs=1,
        message_trace_iterations=2,
    )
    return run_campaign(scenario, run)


@pytest.fixture(scope="session")
def small_campaign_norenev(scenario):
    """Matched-seed twin of small_campaign with transfers disabled."""
    run = RunConfig(
        iterations=60,
        seed=4242,
        offered_load_mbps=(42.0, 66.0),
        scheme="prr:1.0",
        renev_enabled=False,
        donor_floor=0,
        jobs=1,
        message_trace_iterations=2,
    )
    return run_campaign(scenario, run)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Repeat the acceptance ledger after the test table for quick scanning."""
    import sys

    for name in ("test_acceptance", "tests.test_acceptance"):
        mod = sys.modules.get(name)
        if mod is not None and getattr(mod, "RESULTS", None):
            terminalreporter.section("acceptance criteria")
            for line in mod.RESULTS:
                terminalreporter.write_line(line)
            break
