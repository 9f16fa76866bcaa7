import time
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from mmtk.integration import bundle_from_manifest
from mmtk.syntax import load_graph, parse_bundle

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def fixture(name):
    return FIXTURES / name


@pytest.fixture(scope="session")
def peano():
    return load_graph(fixture("peano.mmtx"))


@pytest.fixture(scope="session")
def peano_bundle(peano):
    manifest = parse_bundle(fixture("peano.bundle.mmtx").read_text(), peano)
    return bundle_from_manifest(peano, manifest)


@pytest.fixture(scope="session")
def tg_zfc():
    return load_graph(fixture("tg_zfc.mmtx"))


@pytest.fixture(scope="session")
def rationals():
    return load_graph(fixture("rationals.mmtx"))


@pytest.fixture(scope="session")
def peano_queries(peano):
    from mmtk.syntax import parse_queries

    return parse_queries(fixture("peano.queries.mmtx").read_text(), peano, "cicNat", "zfNat")


# -- acceptance summary ---------------------------------------------------------
# tests marked ``criterion(n, title)`` report one line each at the end of the run

_RESULTS: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): an acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_call(item):
    start = time.perf_counter()
    yield
    item.user_properties.append(("elapsed", time.perf_counter() - start))


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    n, title = marker
    elapsed = dict(report.user_properties).get("elapsed", 0.0)
    entry = _RESULTS.setdefault(n, [True, title, 0.0, 0])
    entry[0] = entry[0] and report.passed
    entry[2] += elapsed
    entry[3] += 1


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep.criterion = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        ok, title, elapsed, count = _RESULTS[n]
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {n}: {title} ({count} checks, {elapsed:.2f} s)")
