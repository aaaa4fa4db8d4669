import pytest

from malsim import config
from malsim.runner import simulate
from malsim.scheduler import Policy


@pytest.fixture(scope="session")
def replica_cfg():
    return config.load("replicate-paper")


@pytest.fixture(scope="session")
def replica_reports(replica_cfg):
    """One full run of the packaged replication config per policy, shared across test modules."""
    import time

    out = {}
    for policy in Policy:
        t0 = time.perf_counter()
        result = simulate(replica_cfg.with_policy(policy))
        out[policy] = (result, result.report(), time.perf_counter() - t0)
    return out


ACCEPTANCE_LINES: list[str] = []


def record_criterion(name: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
