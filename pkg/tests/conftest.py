from pathlib import Path

import pytest

from bidlearn.market import load_instance

ROOT = Path(__file__).resolve().parents[1]
TABLE1_PATH = ROOT / "instances" / "paper_table1.json"

_criteria: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marker = report.user_properties and dict(report.user_properties).get("criterion")
    if not marker:
        return
    number, title = marker
    status = "PASS" if report.outcome == "passed" else "FAIL"
    previous = _criteria.get(number)
    # a criterion split over several tests fails if any part fails
    if previous and previous[0] == "FAIL":
        status = "FAIL"
    _criteria[number] = (status, title)


@pytest.fixture(autouse=True)
def _record_criterion(request):
    marker = request.node.get_closest_marker("criterion")
    if marker is not None:
        request.node.user_properties.append(("criterion", tuple(marker.args)))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        status, title = _criteria[number]
        terminalreporter.write_line(f"criterion {number}: {status}  {title}")


@pytest.fixture(scope="session")
def table1():
    return load_instance(TABLE1_PATH)
