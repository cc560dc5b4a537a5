import json
import pathlib
import sys

import pytest

HERE = pathlib.Path(__file__).parent
sys.path.insert(0, str(HERE))


@pytest.fixture(scope="session")
def calib():
    return json.loads((HERE / "fixtures" / "calibration.json").read_text())


ACCEPTANCE: dict = {}


@pytest.fixture
def criterion():
    """record(name, ok, detail): one result line per acceptance criterion."""
    def record(name, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {name}: {detail}"
        ACCEPTANCE[name] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for name in sorted(ACCEPTANCE, key=lambda k: (len(k), k)):
            terminalreporter.write_line(ACCEPTANCE[name])
