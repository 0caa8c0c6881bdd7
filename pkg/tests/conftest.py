import numpy as np
import pytest

from gbq.spectral import Field, make_grid
from gbq.ground_state import petviashvili


@pytest.fixture(scope="session")
def grid_2pi():
    return make_grid(1, [256], [2 * np.pi])


@pytest.fixture(scope="session")
def gs1():
    """Reference d=1, alpha=3 ground state on the canonical 2048/80 box."""
    grid = make_grid(1, [2048], [80.0])
    return petviashvili(grid, 3.0, tol=1e-13)


@pytest.fixture(scope="session")
def gs1_coarse():
    """Same profile on a 1024-point grid, for cheap evolution tests."""
    grid = make_grid(1, [1024], [80.0])
    return petviashvili(grid, 3.0, tol=1e-13)


def random_band_limited(grid, rng, band, real=True):
    """Random field with spectrum supported in 0 < |k| <= band."""
    spec = np.zeros(grid.shape, dtype=np.complex128)
    sel = (grid.k_abs <= band) & (grid.k_abs > 0)
    count = int(sel.sum())
    spec[sel] = rng.standard_normal(count) + 1j * rng.standard_normal(count)
    field = Field(grid, spec, "spectral").physical()
    if real:
        field = Field(grid, field.values.real)
    return field
