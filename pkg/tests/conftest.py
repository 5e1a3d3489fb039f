import pytest

from src.grid import PeriodicGrid, RadialGrid
from src.groundstate import solve_scalar_w
from src.params import ProblemParams, ReducedCoupling, validate
from src.petviashvili import Normalization, PetviashviliOptions


@pytest.fixture(scope="session")
def grid5():
    return RadialGrid(5, 16.0, 8000)


@pytest.fixture(scope="session")
def w52(grid5):
    """Scalar profile for (N, p) = (5, 2) with its diagnostics."""
    return solve_scalar_w(grid5, 5, 2.0, PetviashviliOptions(tol=1e-10, max_iter=2000, normalization=Normalization.SHARED))


@pytest.fixture
def box4():
    return PeriodicGrid(4, 16, 10.0)


@pytest.fixture
def critical_pair():
    """N = 4, p = p_* = 2, two components with beta = 0.5."""
    return validate(ProblemParams.from_reduced(4, 2.0, ReducedCoupling((1.0, 1.0), 0.5)), allow_out_of_range=True)
