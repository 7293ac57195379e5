import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from mmtk.core import one_point, validate_space  # noqa: E402


def two_point(d, w=(0.5, 0.5)):
    return validate_space([[0.0, d], [d, 0.0]], list(w), ["a", "b"])


def line_space(xs, w=None):
    xs = np.asarray(xs, dtype=float)
    w = np.full(len(xs), 1.0 / len(xs)) if w is None else np.asarray(w, float)
    return validate_space(np.abs(xs[:, None] - xs[None, :]), w)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def point():
    return one_point()


_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    num = report.user_properties and dict(report.user_properties).get("criterion")
    if num:
        _CRITERIA[num[0]] = (num[1], report.outcome.upper() if report.outcome != "passed" else "PASS")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m:
            item.user_properties.append(("criterion", (m.kwargs["number"], m.kwargs["title"])))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        title, outcome = _CRITERIA[num]
        status = "PASS" if outcome == "PASS" else "FAIL"
        terminalreporter.write_line(f"criterion {num:2d}: {status}  {title}")
