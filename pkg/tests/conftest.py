import sys

import numpy as np
import pytest


@pytest.fixture
def gen():
    return np.random.default_rng(20240611)


def kron_all(*mats):
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def werner_pt_eigs(p):
    """Analytic spectrum of the partial transpose of p psi- + (1-p) I/4."""
    return np.array([(1 + p) / 4] * 3 + [(1 - 3 * p) / 4])


def werner_spectrum(p):
    return np.array([(1 + 3 * p) / 4] + [(1 - p) / 4] * 3)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.LINES:
        return
    terminalreporter.section("acceptance")
    for n in sorted(mod.LINES):
        terminalreporter.write_line(mod.LINES[n])
