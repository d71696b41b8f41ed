import numpy as np
import pytest

from lightcone import atlas as A
from lightcone import catalogue as C
from lightcone import core


@pytest.fixture(scope="session")
def mink2():
    return core.minkowski(2)


@pytest.fixture(scope="session")
def beem():
    return core.beem3(0.05)


@pytest.fixture(scope="session")
def odd():
    return C.odd_perturbed()


@pytest.fixture(scope="session")
def sphere3():
    return A.sample_pair(3)


@pytest.fixture(scope="session")
def mink2_atlas(mink2, sphere3):
    return A.build_atlas(mink2, sphere3[0])


@pytest.fixture(scope="session")
def beem_atlas(beem, sphere3):
    return A.build_atlas(beem, sphere3[0])


@pytest.fixture(scope="session")
def beem_atlas_fine(beem, sphere3):
    return A.build_atlas(beem, sphere3[1])


@pytest.fixture(scope="session")
def odd_atlas(odd, sphere3):
    return A.build_atlas(odd, sphere3[0])


@pytest.fixture(scope="session")
def future():
    """Component id of the cone around +e0 for a given atlas."""
    def locate(atlas):
        e0 = np.zeros(atlas.sample.dimension)
        e0[0] = 1.0
        return atlas.locate(e0)
    return locate


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# acceptance verdict lines ----------------------------------------------------------

_VERDICTS = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def verdict_log(request):
    return request.config.stash.setdefault(_VERDICTS, [])


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
