import collections

import numpy as np
import pytest

from topfiber import kernels
from topfiber.harness import FixtureMissing, load_fixture

BACKENDS = sorted(kernels.BACKENDS)


@pytest.fixture(params=BACKENDS)
def backend(request):
    """Run the test once per available kernel backend."""
    previous = kernels.active_backend()
    kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def dataset_or_skip(name):
    try:
        return load_fixture(name)
    except FixtureMissing as exc:
        pytest.skip(f"fixture missing: {exc}")


# acceptance summary --------------------------------------------------------

_outcomes = collections.defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        reason = ""
        if rep.skipped and isinstance(rep.longrepr, tuple):
            reason = rep.longrepr[2]
        _outcomes[(marker.args[0], marker.args[1])].append((item.name, rep.outcome, reason))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for (number, title), results in sorted(_outcomes.items()):
        states = {o for _, o, _ in results}
        skipped = [(n, r) for n, o, r in results if o == "skipped"]
        if "failed" in states:
            verdict = "FAIL"
        elif states == {"skipped"}:
            verdict = "SKIP"
        elif skipped:
            verdict = "PASS (partial)"
        else:
            verdict = "PASS"
        tr.write_line(f"criterion {number} {title}: {verdict}")
        for name, reason in skipped:
            tr.write_line(f"    skipped {name}: {reason.removeprefix('Skipped: ')}")

