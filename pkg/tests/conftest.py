import json
from functools import lru_cache
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "atlas", deadline=None, derandomize=True, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("atlas")

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def oracles():
    return json.loads((DATA / "oracles.json").read_text())


@lru_cache(maxsize=None)
def mesh(kind, resolution=None):
    """Gallery meshes shared across test modules (they are immutable in use)."""
    from atlas.gallery.catalog import gallery_mesh

    return gallery_mesh(kind, resolution)


# -- acceptance reporting -----------------------------------------------------

_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k, title): acceptance criterion k")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is None or (rep.when != "call" and rep.passed):
        return
    k, title = m.args
    entry = _CRITERIA.setdefault(k, {"title": title, "passed": 0, "failed": 0})
    entry["failed" if (rep.failed or rep.skipped) else "passed"] += 1


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        e = _CRITERIA[k]
        verdict = "PASS" if e["failed"] == 0 and e["passed"] else "FAIL"
        terminalreporter.write_line(
            f"criterion {k:2d}: {verdict}  {e['title']} ({e['passed']} passed, {e['failed']} failed)")
