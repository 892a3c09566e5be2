import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

DATA = Path(__file__).resolve().parents[1] / "src" / "nlocal" / "data"

_RESULTS: dict[str, tuple[str, str, str]] = {}


@pytest.fixture
def data_dir():
    return DATA


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when not in ("setup", "call"):
        return
    number, title = marker.args
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    if rep.failed or rep.when == "call":
        status = "PASS" if rep.passed else "FAIL"
        _RESULTS[str(number)] = (status, title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS, key=int):
        status, title, detail = _RESULTS[number]
        line = f"{status} [{number}] {title}"
        if detail:
            line += f" :: {detail}"
        terminalreporter.write_line(line)
