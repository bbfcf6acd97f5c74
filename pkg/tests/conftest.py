import pytest

from hedgehog import Params, RadialGrid, default_grid, solve_profile


def _solve(a2, b2=1.0, c2=1.0, n=8000):
    p = Params(a2, b2, c2)
    return solve_profile(p, default_grid(p, n))


@pytest.fixture(scope="session")
def prof_ref():
    return _solve(0.0)


@pytest.fixture(scope="session")
def prof_ref_uniform():
    return solve_profile(Params(0.0, 1.0, 1.0), RadialGrid.uniform(60.0, 8000))


@pytest.fixture(scope="session")
def prof_stable():
    return _solve(0.05)


@pytest.fixture(scope="session")
def prof_unstable():
    return _solve(1.0, b2=0.01)


@pytest.fixture(scope="session")
def prof_small():
    return _solve(0.01)


@pytest.fixture(scope="session")
def prof_small_coarse():
    return _solve(0.01, n=2000)
