import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from extremeabc import _backend  # noqa: E402

BACKENDS = ["python"]
try:
    from extremeabc import _kernels  # noqa: F401
    BACKENDS.insert(0, "cython")
except ImportError:
    pass


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run the test once per available kernel implementation."""
    monkeypatch.setattr(_backend, "impl", _backend.kernels(request.param))
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# ------------------------------------------------------- acceptance reporting
# Tests marked ``criterion(n)`` are rolled up into one PASS/FAIL line per n.

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and rep.passed):
        return
    entry = _CRITERIA.setdefault(mark.args[0], {"ok": True, "notes": []})
    if not rep.passed:
        entry["ok"] = False
    if rep.when == "call":
        entry["notes"].extend(v for k, v in item.user_properties if k == "detail")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        entry = _CRITERIA[n]
        notes = "; ".join(entry["notes"])
        terminalreporter.write_line(
            f"criterion {n:>2}: {'PASS' if entry['ok'] else 'FAIL'}" + (f"  ({notes})" if notes else ""))
