import numpy as np
import pytest

from gats.rng import Stream


@pytest.fixture
def rs(request):
    """A stream keyed by the test's name, so each test has its own data."""
    return Stream(0, request.node.name)


def rand_stiefel(rs, n, r):
    Q, R = np.linalg.qr(rs.normal((n, r)))
    return Q * np.sign(np.diag(R))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
