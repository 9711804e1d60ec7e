import numpy as np
import pytest

from qnlab.grid import RealField, TorusGrid


@pytest.fixture
def grid256() -> TorusGrid:
    return TorusGrid(1, 256)


def trig_poly(grid: TorusGrid, rng: np.random.Generator, modes: int = 5,
              amp: float = 1.0, zero_mean: bool = False) -> RealField:
    """Random real band-limited field, optionally mean-free."""
    x = grid.coords()
    vals = np.zeros(grid.shape)
    for _ in range(modes):
        k = [int(rng.integers(1, 5)) for _ in range(grid.dim)]
        phase = rng.uniform(0, 2 * np.pi)
        c = amp * rng.standard_normal() / modes
        arg = sum(2 * np.pi * ki * xi for ki, xi in zip(k, x)) + phase
        vals += c * np.cos(arg)
    if not zero_mean:
        vals += amp
    else:
        vals -= vals.mean()
    return RealField(grid, vals)


def smooth_density(grid: TorusGrid, rng: np.random.Generator, amp: float = 0.6,
                   modes: int = 4) -> RealField:
    """Random smooth strictly positive probability density."""
    f = trig_poly(grid, rng, modes=modes, amp=amp, zero_mean=True)
    vals = np.exp(f.values)
    vals /= vals.mean()
    return RealField(grid, vals)
