import numpy as np
import pytest

from segcomp import FieldSet, Grid, ModelParams


@pytest.fixture
def params_a() -> ModelParams:
    """Single-species setup with the (0.2, 0.8) constant equilibrium."""
    return ModelParams(N=1, D=1.0, lam=1.0, mu=1.0, d=[1.0], omega=[0.2],
                       k=[1.0], a=[[0.0]], beta=0.0, delta=0.2)


@pytest.fixture
def grid_a() -> Grid:
    return Grid((1.0,), (201,))


@pytest.fixture
def state_a(params_a, grid_a) -> FieldSet:
    """The exact constant equilibrium on the unit interval."""
    return FieldSet.constant(grid_a, 0.2, [0.8])


@pytest.fixture
def params_two() -> ModelParams:
    return ModelParams(N=2, D=1.0, lam=1.0, mu=1.0, d=[1.0, 1.0],
                       omega=[0.2, 0.2], k=[1.0, 1.0],
                       a=[[0.0, 1.0], [1.0, 0.0]], beta=10.0, delta=0.2)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(42)
