import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def torus_1x2():
    from collapse_lab.families import flat_torus

    return flat_torus(1.0, 2.0, 8, 8)


@pytest.fixture(scope="session")
def klein_01():
    from collapse_lab.families import flat_klein_bottle

    return flat_klein_bottle(0.1, 40, 4)


@pytest.fixture(scope="session")
def folded_pipeline():
    from collapse_lab.families import folded_torus
    from collapse_lab.homology import shortest_basis
    from collapse_lab.surgery import separating_loop

    s = folded_torus(0.9, 0.05, 32, 40)
    basis = shortest_basis(s)
    return s, basis, separating_loop(s, basis)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for num in sorted(lines):
            terminalreporter.write_line(lines[num])
