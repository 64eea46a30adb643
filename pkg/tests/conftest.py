import pytest

from hetsched.power import PowerFunction

KINDS = {
    "poly2": PowerFunction.polynomial(2.0),
    "poly3": PowerFunction.polynomial(3.0),
    "poly1.3": PowerFunction.polynomial(1.3),
    "affine_quadratic": PowerFunction.affine([0.0, 1.0]),
    "affine_linear_term": PowerFunction.affine([0.5, 1.0, 0.25]),
    "table": PowerFunction.table([(1, 1), (2, 4), (3, 9)]),
    "table_steep": PowerFunction.table([(0.5, 0.1), (1.0, 1.0), (4.0, 30.0)]),
}


@pytest.fixture(params=sorted(KINDS))
def pf(request):
    return KINDS[request.param]


@pytest.fixture
def s2():
    return PowerFunction.polynomial(2.0)


@pytest.fixture
def s3():
    return PowerFunction.polynomial(3.0)
