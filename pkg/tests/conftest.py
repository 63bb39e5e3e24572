import pytest

from finsynth.modelfile import load, shipped_models


@pytest.fixture(scope="session")
def model_files():
    return {name: load(name) for name in shipped_models()}


@pytest.fixture(scope="session")
def set2(model_files):
    return model_files["set-2chain"].model


@pytest.fixture(scope="session")
def set3(model_files):
    return model_files["set-3chain"].model


@pytest.fixture(scope="session")
def diamond(model_files):
    return model_files["set-diamond"].model


@pytest.fixture(scope="session")
def arrow_model(model_files):
    return model_files["arrow-3-2"].model


# -- acceptance summary: one line per criterion --------------------------------

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion reported in the summary")


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None or call.when != "call":
        return
    number, title = mark.args
    _CRITERIA[number] = (title, "PASS" if call.excinfo is None else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, verdict = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {verdict}  {title}")
