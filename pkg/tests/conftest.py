import numpy as np
import pytest

from jumprisk.simkit import SimConfig, simulate


def small_config(**kw) -> SimConfig:
    base = dict(n_assets=40, n_days=252, intervals_per_day=13, intervals_per_night=1,
                continuous_vol=0.001, idio_vol=0.0005,
                jump_intensity_per_topic=(0.1,) * 5, jump_size_vol=(0.01,) * 5, seed=3)
    base.update(kw)
    return SimConfig(**base)


@pytest.fixture(scope="session")
def small_world():
    cfg = small_config()
    factor, panel, truth = simulate(cfg)
    return cfg, factor, panel, truth


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


_criteria: dict = {}


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m:
            _criteria[item.nodeid] = [m.args[0], m.args[1], "NOT RUN"]


def pytest_runtest_logreport(report):
    entry = _criteria.get(report.nodeid)
    if entry is None:
        return
    if report.failed:
        entry[2] = "FAIL"
    elif report.when == "call" and report.passed and entry[2] != "FAIL":
        entry[2] = "PASS"
    elif report.skipped:
        entry[2] = "SKIP"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, status in sorted(_criteria.values()):
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {title}")
