import pytest

from revqe.geometry import SurfaceSpec, build_profile


@pytest.fixture(scope="session")
def sphere():
    return build_profile(SurfaceSpec.round_sphere(4000))


@pytest.fixture(scope="session")
def ellipsoid():
    return build_profile(SurfaceSpec.ellipsoid(2.0, 4000))


@pytest.fixture(scope="session")
def small_sphere():
    return build_profile(SurfaceSpec.round_sphere(512))


_ACCEPTANCE = []


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in _ACCEPTANCE:
        terminalreporter.write_line(line)
