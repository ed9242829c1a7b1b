import pytest

from ttlab import fixtures


@pytest.fixture(scope="session")
def fib():
    return fixtures.load("fib").rep


@pytest.fixture(scope="session")
def fib2():
    return fixtures.load("fib2").rep


@pytest.fixture(scope="session")
def geom():
    return fixtures.load("geom").rep


@pytest.fixture(scope="session")
def tower():
    return fixtures.load("tower").rep


@pytest.fixture(scope="session")
def tower_qe():
    return fixtures.load("tower_qe").rep


@pytest.fixture(scope="session")
def ident():
    return fixtures.load("ident").rep
