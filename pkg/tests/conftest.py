import pathlib

import pytest

from psrplan.cassandra import load_pomdp

DATA = pathlib.Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def tiger():
    return load_pomdp(DATA / "tiger.POMDP")


@pytest.fixture(scope="session")
def fair_coin():
    return load_pomdp(DATA / "fair_coin.POMDP")
