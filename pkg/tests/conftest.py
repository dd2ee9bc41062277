from __future__ import annotations

from collections import OrderedDict

import pytest

import segrank.masks
import segrank.matching
import segrank.metrics
from segrank._backend import available_backends, get_kernels

_ACCEPTANCE: "OrderedDict[str, dict]" = OrderedDict()


@pytest.fixture(params=available_backends())
def backend(request, monkeypatch):
    """Run the test once per available kernel backend."""
    mod = get_kernels(request.param)
    for target in (segrank.masks, segrank.matching, segrank.metrics):
        monkeypatch.setattr(target, "kernels", mod)
    return request.param


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    ident, title = marker.args
    entry = _ACCEPTANCE.setdefault(ident, {"title": title, "ok": True, "ran": False})
    if report.when == "call":
        entry["ran"] = True
    if report.failed or (report.when == "call" and report.skipped):
        entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for ident, entry in sorted(_ACCEPTANCE.items(), key=lambda kv: int(kv[0].lstrip("AC"))):
        status = "PASS" if entry["ok"] and entry["ran"] else "FAIL"
        terminalreporter.write_line(f"{status}  {ident:<5} {entry['title']}")
