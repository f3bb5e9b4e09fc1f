"""bo3: a pseudo-spectral laboratory for the third-order Benjamin-Ono equation.

Core layers:

* :mod:`bo3.spectral`    periodic grids, fields, multipliers, dyadic analysis
* :mod:`bo3.flows`       right-hand sides and the exact dispersive propagator
* :mod:`bo3.stepper`     integrating-factor RK4 time integration
* :mod:`bo3.invariants`  conserved energies, vector fields, modified energy
* :mod:`bo3.normalform`  band normal form, gauge, cubic-residual experiments
* :mod:`bo3.dispersion`  region decomposition and weighted decay measurements
* :mod:`bo3.experiments` canonical experiment suites with manifests
"""

__version__ = "0.1.0"

from .spectral import (  # noqa: F401
    ComplexField,
    DyadicBand,
    FrequencyEnvelope,
    RealField,
    SpectralGrid,
    make_grid,
)
from .flows import FlowKind  # noqa: F401
from .stepper import SolverConfig, Trajectory, integrate  # noqa: F401
