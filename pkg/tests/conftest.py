import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bo3.spectral import RealField, make_grid


@pytest.fixture
def grid2pi():
    return make_grid(256, 2.0 * np.pi)


@pytest.fixture
def grid_rig():
    """The standard measurement grid."""
    return make_grid(1024, 256.0 * np.pi)


def random_bandlimited_field(grid, seed, bandlimit=None, mean_free=True):
    """Seeded random real field, hard-bandlimited to |xi| <= bandlimit."""
    rng = np.random.default_rng(seed)
    if bandlimit is None:
        bandlimit = grid.xi_max / 3.0
    half = grid.n // 2
    spec = np.zeros(grid.n, dtype=complex)
    keep = np.abs(grid.xi[1:half]) <= bandlimit
    coeff = (rng.normal(size=half - 1) + 1j * rng.normal(size=half - 1)) * keep
    spec[1:half] = coeff
    spec[-(half - 1):] = np.conj(coeff[::-1])
    if not mean_free:
        spec[0] = rng.normal() * grid.n
    vals = np.fft.ifft(spec).real
    peak = np.max(np.abs(vals))
    return RealField(grid, vals / (peak + 1e-300))
