"""Periodic pseudo-spectral core.

Grids, grid functions with cached spectra, Fourier multipliers, the Hilbert
transform, derivatives and antiderivatives, smooth dyadic (Littlewood-Paley)
projections, Sobolev/Besov norms and frequency envelopes.

Conventions
-----------
* The domain is ``[-L/2, L/2)`` sampled at ``n`` equispaced points; ``n`` is a
  power of two.  Wavenumbers are the exact integer multiples of ``2*pi/L`` in
  FFT order, with the Nyquist mode tracked explicitly.
* ``spectrum`` is the plain unnormalized DFT of ``values`` (numpy convention).
* Every multiplier with an odd symbol (and every symbol with nonzero imaginary
  part) zeroes the Nyquist mode so real fields stay real.
* Norms carry the quadrature weight ``L/n`` so that ``sobolev_norm(f, 0)``
  equals the continuum L2 norm over one period.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GridError",
    "MeanError",
    "BandError",
    "SpectralGrid",
    "RealField",
    "ComplexField",
    "DyadicBand",
    "FrequencyEnvelope",
    "make_grid",
    "field_from_values",
    "apply_symbol",
    "hilbert",
    "derivative",
    "antiderivative",
    "dealiased_product",
    "refine",
    "smoothstep",
    "dyadic_bump",
    "band_multiplier",
    "below_multiplier",
    "range_multiplier",
    "half_multiplier",
    "resolved_bands",
    "project_band",
    "project_below",
    "project_range",
    "mean",
    "l2_norm",
    "sup_norm",
    "sobolev_norm",
    "besov_norm",
    "envelope",
]


class GridError(ValueError):
    """Invalid grid construction parameters."""


class MeanError(ValueError):
    """Operation requires a mean-free field; carries the offending mean."""

    def __init__(self, mean_value: float, tolerance: float):
        self.mean_value = mean_value
        self.tolerance = tolerance
        super().__init__(
            f"field mean {mean_value:.3e} exceeds tolerance {tolerance:.3e}"
        )


class BandError(ValueError):
    """Dyadic band outside the resolved range of the grid."""


# Relative tolerance used to decide whether a field counts as mean-free.
MEAN_RTOL = 1e-10


class SpectralGrid:
    """Uniform periodic grid on ``[-L/2, L/2)`` with cached wavenumbers."""

    __slots__ = ("n", "length", "spacing", "x", "xi", "nyquist_index", "_sgn")

    def __init__(self, n: int, length: float):
        if not isinstance(n, (int, np.integer)) or n < 8 or (n & (n - 1)) != 0:
            raise GridError(f"point count must be a power of two >= 8, got {n!r}")
        length = float(length)
        if not np.isfinite(length) or length <= 0.0:
            raise GridError(f"domain length must be positive and finite, got {length!r}")
        self.n = int(n)
        self.length = length
        self.spacing = length / n
        self.x = -0.5 * length + self.spacing * np.arange(n)
        self.x.setflags(write=False)
        self.xi = 2.0 * np.pi * np.fft.fftfreq(n, d=self.spacing)
        self.xi.setflags(write=False)
        self.nyquist_index = n // 2
        self._sgn = np.sign(self.xi)
        self._sgn.setflags(write=False)

    @property
    def xi_max(self) -> float:
        """Largest resolved wavenumber magnitude, ``pi*n/L``."""
        return np.pi * self.n / self.length

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SpectralGrid)
            and other.n == self.n
            and other.length == self.length
        )

    def __hash__(self):
        return hash((self.n, self.length))

    def __repr__(self):
        return f"SpectralGrid(n={self.n}, length={self.length:.6g})"


def make_grid(n: int, length: float) -> SpectralGrid:
    """Build a grid with the exact wavenumber ladder ``2*pi*m/L``."""
    return SpectralGrid(n, length)


class _Field:
    """Grid function with lazily cached spectrum.  Immutable after creation."""

    __slots__ = ("grid", "values", "_spectrum")

    def __init__(self, grid: SpectralGrid, values, spectrum=None):
        self.grid = grid
        v = np.asarray(values)
        if v.shape != (grid.n,):
            raise ValueError(f"expected {grid.n} samples, got shape {v.shape}")
        self.values = v
        self.values.setflags(write=False)
        self._spectrum = spectrum
        if spectrum is not None:
            self._spectrum.setflags(write=False)

    @property
    def spectrum(self):
        # Lazy DFT cache; safe under concurrent reads since the computed array
        # is identical regardless of which thread stores it first.
        if self._spectrum is None:
            s = np.fft.fft(self.values)
            s.setflags(write=False)
            self._spectrum = s
        return self._spectrum


class RealField(_Field):
    """Real-valued grid function; its spectrum is Hermitian-symmetric."""

    def __init__(self, grid, values, spectrum=None):
        v = np.asarray(values, dtype=float)
        super().__init__(grid, v, spectrum)

    @classmethod
    def from_spectrum(cls, grid: SpectralGrid, spectrum) -> "RealField":
        s = np.asarray(spectrum, dtype=complex)
        v = np.fft.ifft(s)
        # absolute floor keeps all-roundoff (empty) spectra acceptable
        if np.max(np.abs(v.imag)) > 1e-8 * np.max(np.abs(v.real)) + 1e-13:
            raise ValueError("spectrum is not Hermitian-symmetric to tolerance")
        return cls(grid, v.real, s.copy())


class ComplexField(_Field):
    """Complex-valued grid function (no symmetry constraint)."""

    def __init__(self, grid, values, spectrum=None):
        v = np.asarray(values, dtype=complex)
        super().__init__(grid, v, spectrum)

    @classmethod
    def from_spectrum(cls, grid: SpectralGrid, spectrum) -> "ComplexField":
        s = np.asarray(spectrum, dtype=complex)
        return cls(grid, np.fft.ifft(s), s.copy())


def field_from_values(grid: SpectralGrid, values):
    """Wrap samples in a RealField or ComplexField depending on dtype."""
    v = np.asarray(values)
    if np.iscomplexobj(v):
        return ComplexField(grid, v)
    return RealField(grid, v)


def _like(f, grid, spectrum):
    """Rebuild a field of the same kind as ``f`` from a spectrum."""
    if isinstance(f, RealField):
        return RealField.from_spectrum(grid, spectrum)
    return ComplexField.from_spectrum(grid, spectrum)


def mean(f) -> float:
    return float(np.mean(f.values.real)) if isinstance(f, RealField) else complex(np.mean(f.values))


def l2_norm(f) -> float:
    """Continuum L2 norm over one period (trapezoid-exact for trig polys)."""
    return float(np.sqrt(f.grid.spacing * np.sum(np.abs(f.values) ** 2)))


def sup_norm(f) -> float:
    return float(np.max(np.abs(f.values)))


def _mean_tolerance(f) -> float:
    return MEAN_RTOL * l2_norm(f)


def require_mean_free(f) -> None:
    m = abs(np.mean(np.asarray(f.values)))
    tol = _mean_tolerance(f)
    if m > tol:
        raise MeanError(float(m), tol)


# ---------------------------------------------------------------------------
# Multipliers


def _is_odd_symbol(grid: SpectralGrid, sym: np.ndarray) -> bool:
    # compare m(-xi) against -m(xi) on the paired bins (Nyquist excluded)
    rev = np.empty_like(sym)
    rev[0] = sym[0]
    rev[1:] = sym[:0:-1]
    scale = np.max(np.abs(sym)) + 1e-300
    mask = np.ones(grid.n, dtype=bool)
    mask[grid.nyquist_index] = False
    return bool(np.all(np.abs(rev[mask] + sym[mask]) <= 1e-12 * scale))


def apply_symbol(f, symbol) -> ComplexField:
    """Apply a Fourier multiplier ``xi -> symbol(xi)`` to a field.

    The multiplier must be finite on every grid wavenumber.  The Nyquist mode
    is zeroed whenever the symbol is odd or has imaginary content anywhere.
    Always returns a ComplexField; use the dedicated operators for
    real-preserving multipliers.
    """
    grid = f.grid
    sym = np.asarray(symbol(grid.xi) if callable(symbol) else symbol, dtype=complex)
    if sym.shape != (grid.n,):
        raise ValueError(f"symbol must produce {grid.n} values")
    if not np.all(np.isfinite(sym)):
        bad = grid.xi[~np.isfinite(sym)][:1]
        raise ValueError(f"symbol is not finite at wavenumber {bad}")
    out = sym * f.spectrum
    if np.any(sym.imag != 0.0) or _is_odd_symbol(grid, sym):
        out[grid.nyquist_index] = 0.0
    return ComplexField.from_spectrum(grid, out)


def hilbert(f: RealField) -> RealField:
    """Hilbert transform: multiplier ``-i*sgn(xi)``; kills the zero mode."""
    grid = f.grid
    out = (-1j * grid._sgn) * f.spectrum
    out[grid.nyquist_index] = 0.0
    return _like(f, grid, out)


def derivative(f, order: int = 1):
    """Spectral derivative of order 1..4; odd orders zero the Nyquist mode."""
    if order not in (1, 2, 3, 4):
        raise ValueError(f"derivative order must be in 1..4, got {order}")
    grid = f.grid
    out = (1j * grid.xi) ** order * f.spectrum
    if order % 2 == 1:
        out[grid.nyquist_index] = 0.0
    return _like(f, grid, out)


def antiderivative(f: RealField) -> RealField:
    """Zero-mean antiderivative: multiplier ``1/(i*xi)``, zero mode mapped to 0.

    Requires the input to be mean-free (relative tolerance ``MEAN_RTOL``);
    raises MeanError carrying the offending mean otherwise.
    """
    require_mean_free(f)
    grid = f.grid
    out = np.zeros(grid.n, dtype=complex)
    nz = grid.xi != 0.0
    out[nz] = f.spectrum[nz] / (1j * grid.xi[nz])
    out[grid.nyquist_index] = 0.0
    return _like(f, grid, out)


# ---------------------------------------------------------------------------
# Dealiased products and spectral refinement


def pad_spectrum(spec: np.ndarray, n: int, factor: int) -> np.ndarray:
    """Zero-pad an n-point spectrum to ``factor*n`` bins (drops the Nyquist)."""
    half = n // 2
    out = np.zeros(factor * n, dtype=complex)
    out[:half] = spec[:half] * factor
    out[-half + 1:] = spec[-half + 1:] * factor
    return out


def truncate_spectrum(spec: np.ndarray, n: int, factor: int) -> np.ndarray:
    """Inverse of pad_spectrum: keep the low ``n`` bins, zero the Nyquist."""
    half = n // 2
    out = np.zeros(n, dtype=complex)
    out[:half] = spec[:half] / factor
    out[-half + 1:] = spec[-half + 1:] / factor
    return out


def dealiased_product(f, g):
    """Pointwise product with 2x zero-padding.

    Quadratic interactions of resolved modes are computed exactly and then
    projected back onto the grid's band, which is the sharp version of the
    two-thirds rule.
    """
    grid = f.grid
    if g.grid != grid:
        raise ValueError("fields live on different grids")
    n = grid.n
    pu = np.fft.ifft(pad_spectrum(f.spectrum, n, 2))
    pv = np.fft.ifft(pad_spectrum(g.spectrum, n, 2))
    real_out = isinstance(f, RealField) and isinstance(g, RealField)
    if isinstance(f, RealField):
        pu = pu.real
    if isinstance(g, RealField):
        pv = pv.real
    big = np.fft.fft(pu * pv)
    out = truncate_spectrum(big, n, 2)
    if real_out:
        return RealField.from_spectrum(grid, out)
    return ComplexField.from_spectrum(grid, out)


def refine(f, factor: int = 2):
    """Trigonometric interpolation of a field onto a ``factor`` times finer grid."""
    grid = f.grid
    fine = SpectralGrid(factor * grid.n, grid.length)
    spec = pad_spectrum(f.spectrum, grid.n, factor)
    if isinstance(f, RealField):
        return RealField.from_spectrum(fine, spec)
    return ComplexField.from_spectrum(fine, spec)


# ---------------------------------------------------------------------------
# Dyadic (Littlewood-Paley) machinery


def smoothstep(u):
    """C^3 polynomial step: 0 for u <= 0, 1 for u >= 1, fixed formula."""
    u = np.clip(u, 0.0, 1.0)
    return u**4 * (35.0 - 84.0 * u + 70.0 * u**2 - 20.0 * u**3)


def dyadic_bump(u):
    """Even bump: identically 1 on [-1, 1], supported on [-2, 2]."""
    return smoothstep(2.0 - np.abs(np.asarray(u, dtype=float)))


@dataclass(frozen=True)
class DyadicBand:
    """Dyadic frequency band ``|xi| ~ 2**k`` with an optional sign half."""

    k: int
    half: str = "both"

    def __post_init__(self):
        if self.k < 0:
            raise BandError(f"band index must be nonnegative, got {self.k}")
        if self.half not in ("both", "plus", "minus"):
            raise BandError(f"half must be both/plus/minus, got {self.half!r}")


def resolved_bands(grid: SpectralGrid) -> range:
    """Band indices k with 2**k within the grid's resolved range."""
    return range(0, int(np.floor(np.log2(grid.xi_max))) + 1)


def _check_band(grid: SpectralGrid, k: int) -> None:
    if k < 0 or 2.0**k > grid.xi_max:
        raise BandError(f"band {k} outside resolved range of {grid!r}")


def band_multiplier(grid: SpectralGrid, k: int) -> np.ndarray:
    """Smooth projector onto the band ``|xi| ~ 2**k`` (block |xi|<~1 for k=0)."""
    _check_band(grid, k)
    if k == 0:
        return dyadic_bump(grid.xi)
    return dyadic_bump(grid.xi / 2.0**k) - dyadic_bump(grid.xi / 2.0 ** (k - 1))


def below_multiplier(grid: SpectralGrid, k: int) -> np.ndarray:
    """Cumulative projector onto bands < k."""
    if k <= 0:
        return dyadic_bump(2.0 * grid.xi)
    return dyadic_bump(grid.xi / 2.0 ** (k - 1))


def range_multiplier(grid: SpectralGrid, k1: int, k2: int) -> np.ndarray:
    """Projector onto bands strictly between k1 and k2."""
    return below_multiplier(grid, k2) - below_multiplier(grid, k1 + 1)


def half_multiplier(grid: SpectralGrid, half: str) -> np.ndarray:
    if half == "both":
        return np.ones(grid.n)
    if half == "plus":
        return (grid.xi > 0.0).astype(float)
    return (grid.xi < 0.0).astype(float)


def _apply_mask(f, mask: np.ndarray, force_complex: bool):
    out = mask * f.spectrum
    if force_complex or isinstance(f, ComplexField):
        return ComplexField.from_spectrum(f.grid, out)
    return RealField.from_spectrum(f.grid, out)


def project_band(f, band):
    """Littlewood-Paley projection; half-projections return ComplexField."""
    if isinstance(band, int):
        band = DyadicBand(band)
    mask = band_multiplier(f.grid, band.k)
    if band.half != "both":
        mask = mask * half_multiplier(f.grid, band.half)
    return _apply_mask(f, mask, force_complex=band.half != "both")


def project_below(f, k: int):
    """Cumulative projection onto bands < k."""
    return _apply_mask(f, below_multiplier(f.grid, k), force_complex=False)


def project_range(f, ks):
    """Projection onto bands strictly between ks[0] and ks[1]."""
    k1, k2 = ks
    return _apply_mask(f, range_multiplier(f.grid, k1, k2), force_complex=False)


# ---------------------------------------------------------------------------
# Norms and envelopes


def sobolev_norm(f, s: float, homogeneous: bool = False) -> float:
    """Sobolev norm from the weighted Plancherel sum.

    Weight is ``|xi|`` (homogeneous) or ``sqrt(1 + xi^2)`` (inhomogeneous);
    the normalization makes s = 0 agree with the continuum L2 norm.  A
    homogeneous norm with s <= 0 requires a mean-free field.
    """
    grid = f.grid
    power = np.abs(f.spectrum) ** 2
    if homogeneous:
        if s <= 0.0:
            require_mean_free(f)
        nz = grid.xi != 0.0
        total = np.sum(np.abs(grid.xi[nz]) ** (2.0 * s) * power[nz])
    else:
        total = np.sum((1.0 + grid.xi**2) ** s * power)
    return float(np.sqrt(grid.length * total)) / grid.n


def band_l2_norms(f) -> np.ndarray:
    """L2 norms of every resolved Littlewood-Paley piece."""
    grid = f.grid
    power = np.abs(f.spectrum) ** 2
    scale = grid.length / grid.n**2
    out = []
    for k in resolved_bands(grid):
        m = band_multiplier(grid, k)
        out.append(np.sqrt(scale * np.sum(m**2 * power)))
    return np.asarray(out)


def besov_norm(f, s: float) -> float:
    """sup over resolved bands of ``2**(s k) * ||P_k f||_L2``."""
    norms = band_l2_norms(f)
    ks = np.arange(norms.size)
    return float(np.max(2.0 ** (s * ks) * norms)) if norms.size else 0.0


@dataclass(frozen=True)
class FrequencyEnvelope:
    """Slowly varying majorant of the dyadic L2 norms of a field."""

    delta: float
    c: np.ndarray

    def is_slowly_varying(self, rtol: float = 1e-12) -> bool:
        ks = np.arange(self.c.size)
        ratio_bound = 2.0 ** (self.delta * np.abs(ks[:, None] - ks[None, :]))
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(self.c[None, :] > 0, self.c[:, None] / self.c[None, :], 0.0)
        return bool(np.all(ratios <= ratio_bound * (1.0 + rtol)))

    def majorizes(self, f, rtol: float = 1e-12) -> bool:
        return bool(np.all(band_l2_norms(f) <= self.c * (1.0 + rtol) + 1e-300))


def envelope(f, delta: float) -> FrequencyEnvelope:
    """Minimal slowly varying envelope ``c_k = sup_j 2**(-delta|j-k|) ||P_j f||``."""
    if not (0.0 < delta <= 0.5):
        raise ValueError(f"delta must lie in (0, 1/2], got {delta}")
    norms = band_l2_norms(f)
    ks = np.arange(norms.size)
    weights = 2.0 ** (-delta * np.abs(ks[:, None] - ks[None, :]))
    c = np.max(weights * norms[None, :], axis=1)
    return FrequencyEnvelope(delta, c)
