import numpy as np
import pytest

SEED = 20261018


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


@pytest.fixture(params=["1", "0"], ids=["numba", "numpy"])
def backend(request, monkeypatch):
    monkeypatch.setenv("OUBL_NUMBA", request.param)
    return request.param


_ACCEPTANCE = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion and print it."""

    def _report(criterion, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
