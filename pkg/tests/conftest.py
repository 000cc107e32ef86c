import sys

import numpy as np
import pytest

@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(key=1234))


@pytest.fixture
def outdir(tmp_path, monkeypatch):
    monkeypatch.setenv("FRACTALVDC_OUTPUT_DIR", str(tmp_path))
    return tmp_path


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    RESULTS = mod.RESULTS
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[key])
