"""Shared fixtures and the acceptance-criteria reporter.

Acceptance tests record one line per criterion through the
``acceptance`` fixture; the lines are echoed in a terminal section at the
end of the run so the pass/fail status of every criterion is visible in
one place regardless of verbosity settings.
"""

import numpy as np
import pytest

import trispec as ts
from trispec.torus import UniformGrid

_ACCEPTANCE_LINES = []


class AcceptanceRecorder:
    def check(self, criterion: int, passed: bool, detail: str):
        status = "PASS" if passed else "FAIL"
        _ACCEPTANCE_LINES.append(f"{status} criterion {criterion}: {detail}")
        assert passed, f"criterion {criterion}: {detail}"


@pytest.fixture
def acceptance():
    return AcceptanceRecorder()


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES,
                           key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def quad32():
    return UniformGrid(32)


@pytest.fixture(scope="session")
def cos_model_critical(quad32):
    """Reference model with even form factors at the critical coupling."""
    m = ts.reference_cos_model(1.0, 1.0)
    mu0 = ts.mu_zero(m, 1, quad32)
    return m.with_couplings(mu0, mu0)


@pytest.fixture(scope="session")
def sin_model_critical(quad32):
    """Reference model with odd form factors at the critical coupling."""
    m = ts.reference_sin_model(1.0, 1.0)
    mu0 = ts.mu_zero(m, 1, quad32)
    return m.with_couplings(mu0, mu0)


@pytest.fixture(scope="session")
def reference_params():
    """Asymptotics parameters of the reference dispersion:
    (l1, l2, l) = (2, 2, -1)."""
    return ts.sobolev_params(2.0, 2.0, -1.0)
