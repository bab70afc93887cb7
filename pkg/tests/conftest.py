import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

CRITERIA = {
    1: "Haar round trip and Parseval",
    2: "product expansion identity",
    3: "bmo -> BMO embedding ratio",
    4: "tensor strictness witness",
    5: "multiplier necessity and LMO scaling identity",
    6: "Haar multiplier T1",
    7: "L2 bounds of the bilinear family",
    8: "LMO tail vs Carleson consistency",
    9: "heuristic open-set search soundness",
    10: "experiment reproducibility",
}

_results = {}
_notes = {}


@pytest.fixture
def record(request):
    """Attach a short measured summary to the criterion line."""
    marker = request.node.get_closest_marker("criterion")

    def _record(text):
        if marker is not None:
            _notes.setdefault(marker.args[0], []).append(text)
    return _record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when not in ("setup", "call"):
        return
    if rep.when == "call" or rep.failed:
        n = marker.args[0]
        _results[n] = _results.get(n, True) and rep.passed


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        if n not in _results:
            continue
        status = "PASS" if _results[n] else "FAIL"
        note = "; ".join(_notes.get(n, []))
        line = f"criterion {n:2d} {status}  {CRITERIA[n]}"
        terminalreporter.write_line(line + (f"  [{note}]" if note else ""))
