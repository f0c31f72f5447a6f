import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("lapbc", max_examples=60, deadline=None, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lapbc")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two_vertex():
    from lapbc.graph import WeightedGraph
    return WeightedGraph.checked([("x", 1.0, 0.0), ("y", 1.0, 0.0)], [("x", "y", 1.0)])


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
