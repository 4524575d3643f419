import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from eisndt.mesh import build_mesh
from eisndt.scene import Scene, builtin_model

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

R = 0.1


@pytest.fixture(scope="session")
def disk():
    return Scene(R)


@pytest.fixture(scope="session")
def disk_mesh(disk):
    return build_mesh(disk, 0.01)


@pytest.fixture(scope="session")
def dihedral_mesh(disk):
    """Homogeneous disk mesh invariant under the 32 symmetries of the electrode layout."""
    return build_mesh(disk, 0.01, symmetry="dihedral")


@pytest.fixture(scope="session")
def model1():
    return builtin_model(1)


@pytest.fixture(scope="session")
def model1_interface_mesh(model1):
    return build_mesh(model1, 0.005, crack_mode="interface")


@pytest.fixture(scope="session")
def coarse_inverse_mesh(disk):
    return build_mesh(disk, 0.01)


def circle_points(n, radius=R, offset=0.0):
    t = offset + 2 * math.pi * np.arange(n) / n
    return radius * np.column_stack([np.cos(t), np.sin(t)])


ACCEPTANCE_LINES = []


@pytest.fixture
def report(capsys):
    """Print one PASS/FAIL line for an acceptance criterion and return the verdict."""
    def emit(name, ok, detail):
        line = f"{name}: {'PASS' if ok else 'FAIL'} | {detail}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok
    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
