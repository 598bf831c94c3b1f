from __future__ import annotations

import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

CRITERIA = {
    1: "constants: inner and full extremal constants",
    2: "Dickman rho accuracy and self-consistency",
    3: "exact identities: window, divisor-sum, h-convolution",
    4: "oracle equivalence: bnb vs brute, large-prime reduction",
    5: "known small minima",
    6: "positivity and lower bounds",
    7: "rounding step sign property",
    8: "character realization",
    9: "Polya and Turan scans to 1e8, checkpoint resume",
    10: "extremal function values",
    11: "determinism across thread counts",
}

# criterion -> list of (nodeid, outcome)
_results: dict[int, list[tuple[str, str]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_collection_modifyitems(config, items):
    if os.environ.get("TRUNCLAB_STRETCH") == "1":
        return
    skip = pytest.mark.skip(reason="stretch check; set TRUNCLAB_STRETCH=1 to run")
    for item in items:
        if "stretch" in item.keywords:
            item.add_marker(skip)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or "stretch" in item.keywords:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        if hasattr(rep, "wasxfail"):
            state = "xfail"
        else:
            state = rep.outcome
        for n in marker.args:
            _results.setdefault(n, []).append((item.nodeid, state))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(CRITERIA):
        rows = _results.get(n)
        if not rows:
            continue
        if all(s == "passed" for _, s in rows):
            status = "PASS"
        elif all(s == "skipped" for _, s in rows):
            status = "SKIP"
        else:
            status = "FAIL"
        bad = [f"{nid.split('::')[-1]} ({s})" for nid, s in rows if s not in ("passed",)]
        line = f"criterion {n:2d}: {status}  {CRITERIA[n]}"
        if bad:
            line += "  [" + ", ".join(bad) + "]"
        tr.write_line(line)
