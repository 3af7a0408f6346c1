from pathlib import Path

import pytest

from cloudburst.netsim import DedicatedLink, SimParams, StorageSite
from cloudburst.pricing import default_catalog
from cloudburst.workload import Job

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"


def make_link(link_id="l1", cap=2, site="UW", provider="GCP", region="US Central", unmetered=False, **kw):
    tier = default_catalog().tier(cap, unmetered)
    return DedicatedLink(link_id, provider, kw.pop("peering", region), region, site, tier, **kw)


def make_job(i, link="l1", start=0.0, compute=0.0, size=2_500_000_000, gpu="T4"):
    return Job(i, gpu, link, start, compute, size)


@pytest.fixture
def uw():
    return StorageSite("UW")


@pytest.fixture
def params():
    return SimParams(timeout_s=3600.0, sample_s=10.0, seed=0)


@pytest.fixture(scope="session")
def scenarios_dir():
    return SCENARIOS


ACCEPTANCE_LINES: list[str] = []


def record(criterion: int, ok: bool, detail: str) -> None:
    """Log one acceptance verdict line and fail the calling test when ``ok`` is false."""
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def mainrun_runs(tmp_path_factory):
    """Main run simulated for seeds 1..5: {seed: (scenario, trace, wall seconds, bundle dir)}."""
    import time

    from cloudburst.bundle import write_bundle
    from cloudburst.netsim import simulate
    from cloudburst.scenario import load_scenario

    base = load_scenario(SCENARIOS / "mainrun.scenario")
    runs = {}
    for seed in range(1, 6):
        scenario = base.with_seed(seed)
        t0 = time.perf_counter()
        trace = simulate(scenario)
        out = tmp_path_factory.mktemp(f"mainrun{seed}")
        write_bundle(out, scenario, trace)
        runs[seed] = (scenario, trace, time.perf_counter() - t0, out)
    return runs
