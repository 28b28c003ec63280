import os
from pathlib import Path

import numpy as np
import pytest

from maxout_mlp.data import MNIST_FILES

_ACCEPTANCE = {}


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run long-running tests (full MNIST training)")


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="long-running; use --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or (rep.when != "call" and not (rep.failed or rep.skipped)):
        return
    outcomes = _ACCEPTANCE.setdefault(tuple(marker.args), {})
    outcomes[item.nodeid] = rep.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), outcomes in sorted(_ACCEPTANCE.items()):
        results = list(outcomes.values())
        if "failed" in results:
            status = "FAIL"
        elif "passed" not in results:
            status = "SKIP"
        elif "skipped" in results:
            status = f"PASS ({results.count('skipped')} part(s) skipped)"
        else:
            status = "PASS"
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {title}")


def _mnist_dir():
    for candidate in (os.environ.get("MNIST_DIR"), "data/mnist"):
        if not candidate:
            continue
        path = Path(candidate)
        if all((path / n).exists() or (path / f"{n}.gz").exists()
               for n in MNIST_FILES.values()):
            return path
    return None


@pytest.fixture
def mnist_dir():
    path = _mnist_dir()
    if path is None:
        pytest.skip("MNIST IDX files not found; set MNIST_DIR")
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(20130219)
