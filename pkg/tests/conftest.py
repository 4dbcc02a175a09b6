import pytest

from golden_scene import ACCEPTANCE_LINES, make_golden_scene


@pytest.fixture(scope="session")
def golden(tmp_path_factory):
    return make_golden_scene(tmp_path_factory.mktemp("golden"))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
