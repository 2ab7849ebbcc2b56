import pytest

from scalarflat.angular import AngularGrid
from scalarflat.fields import RadialGrid
from scalarflat.link_geometry import solve_scalar_flat_radii
from scalarflat.spectrum import ModeBasis, select_threshold


@pytest.fixture(scope="session")
def link21():
    return solve_scalar_flat_radii(2, 1)


@pytest.fixture(scope="session")
def link44():
    return solve_scalar_flat_radii(4, 4)


@pytest.fixture(scope="session")
def sel21(link21):
    return select_threshold(link21, 4)


@pytest.fixture(scope="session")
def basis21(link21):
    return ModeBasis(link21, AngularGrid.for_link(link21, 17), 4)


@pytest.fixture(scope="session")
def radial65():
    return RadialGrid(1e-3, 65)
