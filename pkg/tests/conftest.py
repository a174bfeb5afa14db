import numpy as np
import pytest
import scipy.linalg as sla

from dicke_hp.operators import ladder

_ACCEPTANCE_LINES = []


def expm_displacement(x, n_max):
    """Brute-force oracle: expm of x (a^dag - a) on a truncated ladder."""
    a = ladder(n_max)
    return sla.expm(x * (a.T - a))


@pytest.fixture
def record_acceptance():
    def record(label, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}"
        print(line)
        _ACCEPTANCE_LINES.append(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
