import sys

import pytest

from stratplan.engine import EngineConfig, RoundEngine, initial_world, sim_roots
from stratplan.netadmin import DomainConfig


def run_sim(seed: int = 7, n_roots: int = 20, hosts_per_root: int = 8, **overrides):
    config = EngineConfig(seed=seed, **overrides)
    world = initial_world(config.domain, sim_roots(n_roots, hosts_per_root))
    engine = RoundEngine(config, world)
    return engine, engine.run()


@pytest.fixture(scope="session")
def sim_seed7():
    """The default 20-root simulated investigation, run once per session."""
    return run_sim(7)


@pytest.fixture
def default_config():
    return DomainConfig()


_CRITERION_FAILURES: set[int] = set()


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if report.failed and name.startswith("test_c") and name[6:8].isdigit():
        _CRITERION_FAILURES.add(int(name[6:8]))


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    verdicts = getattr(module, "VERDICTS", None)
    if not verdicts and not _CRITERION_FAILURES:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, 13):
        line = verdicts.get(n) if verdicts else None
        if n in _CRITERION_FAILURES and (line is None or "PASS" in line):
            line = f"criterion {n:2d}: FAIL  (errored before reaching its verdict)"
        terminalreporter.write_line(line or f"criterion {n:2d}: NOT RUN")
