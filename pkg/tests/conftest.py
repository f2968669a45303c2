import pytest

from shapefall import derive_mass_params, find_periodic_brake

EQUAL = derive_mass_params(1.0, 1.0, 1.0)
UNEQUAL = derive_mass_params(1.0, 2.0, 10.0)


@pytest.fixture(scope="session")
def mp_equal():
    return EQUAL


@pytest.fixture(scope="session")
def mp_unequal():
    return UNEQUAL


@pytest.fixture(scope="session")
def periodic_orbit():
    # the full shooting run costs ~30 s; share it across the session
    return find_periodic_brake(1.0)
