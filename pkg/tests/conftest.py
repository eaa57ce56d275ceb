import pytest

from pvlattice.algnum import build_context
from pvlattice.refine import (
    bernoulli_mask,
    build_mask,
    cantor_mask,
    haar_mask,
    negative_rho_mask,
)


@pytest.fixture(scope="session")
def golden():
    return build_context((-1, -1))


@pytest.fixture(scope="session")
def neg_golden():
    return build_context((-1, 1))


@pytest.fixture(scope="session")
def nonunit():
    return build_context((2, -4))


@pytest.fixture(scope="session")
def cubic_2247():
    return build_context((1, -1, -2))


@pytest.fixture(scope="session")
def plastic():
    return build_context((-1, -1, 0))


@pytest.fixture(scope="session")
def quartic():
    return build_context((-1, 0, 0, -1))


@pytest.fixture(scope="session")
def haar():
    return haar_mask()


@pytest.fixture(scope="session")
def cantor():
    return cantor_mask()


@pytest.fixture(scope="session")
def golden_bernoulli(golden):
    return bernoulli_mask(golden)


@pytest.fixture(scope="session")
def growing(haar):
    return negative_rho_mask()


@pytest.fixture(scope="session")
def two_frequency(golden):
    # translations 0, 1, lambda: rank 2 over Q; coefficients keep |P| > 0 on
    # the torus so both Mahler routes converge fast
    phi = golden.lam
    return build_mask(
        golden,
        (0.9, 0.5, phi - 1.4),
        (golden.zero(), golden.one(), golden.lambda_elem()),
    )


@pytest.fixture(scope="session")
def example_masks(haar, cantor, golden_bernoulli, growing):
    return [haar, cantor, golden_bernoulli, growing]
