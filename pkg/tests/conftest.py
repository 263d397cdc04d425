import pytest

from rfol.datagen import gen_advection1


@pytest.fixture(scope="session")
def advection1_split():
    data = gen_advection1(1200, 40, 0)
    return data.subset(slice(0, 1000)), data.subset(slice(1000, None))
