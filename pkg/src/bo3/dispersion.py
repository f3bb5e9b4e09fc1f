"""Region decomposition, weighted decay measurements and space-time bounds.

For positive times the line splits into a right-moving oscillatory region, a
self-similar core of width ``t**(1/3)`` and a left elliptic region with
enhanced decay.  This module classifies grid points accordingly, measures the
Airy-scaled weighted amplitudes of a trajectory (globally and per region),
fits the linear flow's sup-norm decay exponent, and evaluates the bilinear
space-time smoothing ratio for frequency-separated waves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import spectral
from .flows import airy_propagate, airy_symbol
from .invariants import edge_fraction
from .spectral import DyadicBand, RealField, derivative, l2_norm, project_band

__all__ = [
    "jbracket",
    "RegionMask",
    "classify",
    "DecayReport",
    "decay_weights",
    "airy_decay_fit",
    "WrapAroundError",
    "bilinear_strichartz_ratio",
    "refined_sup",
]

REGIONS = ("hyperbolic", "self_similar", "elliptic")


def jbracket(x, t: float):
    """Airy-scaled distance weight ``sqrt(x^2 + t^(2/3))``."""
    if t <= 0.0:
        raise ValueError(f"jbracket needs t > 0, got {t}")
    return np.sqrt(np.asarray(x, dtype=float) ** 2 + t ** (2.0 / 3.0))


@dataclass(frozen=True)
class RegionMask:
    grid: spectral.SpectralGrid
    t: float
    c_region: float
    labels: np.ndarray  # one of REGIONS per point

    def mask(self, region: str) -> np.ndarray:
        return self.labels == region


def classify(grid: spectral.SpectralGrid, t: float, c_region: float = 1.0) -> RegionMask:
    """Label every grid point by its region at time t."""
    if t <= 0.0:
        raise ValueError(f"classify needs t > 0, got {t}")
    edge = c_region * t ** (1.0 / 3.0)
    labels = np.full(grid.n, "self_similar", dtype=object)
    labels[grid.x >= edge] = "hyperbolic"
    labels[grid.x <= -edge] = "elliptic"
    return RegionMask(grid, t, c_region, labels)


def refined_sup(values: np.ndarray) -> float:
    """Grid sup with a three-point parabolic refinement of the peak."""
    a = np.abs(values)
    j = int(np.argmax(a))
    n = a.size
    lo, mid, hi = a[(j - 1) % n], a[j], a[(j + 1) % n]
    denom = lo - 2.0 * mid + hi
    if denom < 0.0:
        return float(mid - 0.125 * (lo - hi) ** 2 / denom)
    return float(mid)


@dataclass
class DecayReport:
    """Weighted-amplitude suprema per frame and region, plus fitted exponents.

    ``rows`` carry, for each frame and region (including ``global`` and the
    alternate-exponent variants suffixed ``+delta``), the weighted sup of the
    state and of its derivative, and in the elliptic region the log-normalized
    channels.  ``exponents`` holds fitted time exponents of the plain sups in
    the hyperbolic region.
    """

    delta: float
    c_region: float
    rows: list
    exponents: dict


def _weighted_channels(fld: RealField, t: float, delta: float, mask_obj: RegionMask):
    grid = fld.grid
    jb = jbracket(grid.x, t)
    fx = derivative(fld).values
    phi_w = t**0.25 * jb ** (0.25 - delta) * np.abs(fld.values)
    phix_w = t**0.75 * jb ** (-0.25 - delta) * np.abs(fx)
    phi_w_alt = t**0.25 * jb ** (0.25 + delta) * np.abs(fld.values)
    phix_w_alt = t**0.75 * jb ** (-0.25 + delta) * np.abs(fx)
    logarg = t ** (-1.0 / 3.0) * jb
    loggable = logarg >= 2.0
    rows = []
    for region in REGIONS + ("global",):
        sel = np.ones(grid.n, dtype=bool) if region == "global" else mask_obj.mask(region)
        if not np.any(sel):
            continue
        ell_phi = ell_phix = np.nan
        if region == "elliptic":
            esel = sel & loggable
            if np.any(esel):
                logs = np.log(logarg[esel])
                ell_phi = float(np.max(jb[esel] * np.abs(fld.values[esel]) / logs))
                ell_phix = float(
                    np.max(t**0.5 * jb[esel] ** 0.5 * np.abs(fx[esel]) / logs)
                )
        rows.append({
            "t": t,
            "region": region,
            "weighted_phi_sup": float(np.max(phi_w[sel])),
            "weighted_phix_sup": float(np.max(phix_w[sel])),
            "elliptic_phi_over_log": ell_phi,
            "elliptic_phix_over_log": ell_phix,
        })
        rows.append({
            "t": t,
            "region": region + "+delta",
            "weighted_phi_sup": float(np.max(phi_w_alt[sel])),
            "weighted_phix_sup": float(np.max(phix_w_alt[sel])),
            "elliptic_phi_over_log": np.nan,
            "elliptic_phix_over_log": np.nan,
        })
    return rows


def decay_weights(traj, delta: float = 0.05, c_region: float = 1.0) -> DecayReport:
    """Measure the Airy-weighted amplitude channels along a trajectory.

    Frames at t = 0 are skipped (the weights are singular there).  Both
    placements of the small exponent ``delta`` are computed and labeled.
    """
    rows = []
    hyp_t, hyp_phi, hyp_phix = [], [], []
    for t, fld in traj.frames:
        if t <= 0.0:
            continue
        mask_obj = classify(fld.grid, t, c_region)
        rows.extend(_weighted_channels(fld, t, delta, mask_obj))
        sel = mask_obj.mask("hyperbolic")
        if np.any(sel):
            hyp_t.append(t)
            hyp_phi.append(np.max(np.abs(fld.values[sel])) + 1e-300)
            hyp_phix.append(np.max(np.abs(derivative(fld).values[sel])) + 1e-300)
    exponents = {}
    if len(hyp_t) >= 3:
        lt = np.log(hyp_t)
        exponents["hyperbolic_phi"] = float(np.polyfit(lt, np.log(hyp_phi), 1)[0])
        exponents["hyperbolic_phix"] = float(np.polyfit(lt, np.log(hyp_phix), 1)[0])
    return DecayReport(delta, c_region, rows, exponents)


class WrapAroundError(RuntimeError):
    """The evolution reached the periodic seam; the measurement stops."""

    def __init__(self, time: float, fraction: float):
        self.time = time
        self.fraction = fraction
        super().__init__(
            f"edge energy fraction {fraction:.2e} at t = {time:.6g}; "
            "domain too small for this horizon"
        )


def airy_decay_fit(f0: RealField, times, edge_tol: float = 0.05):
    """Fitted slope of ``log sup|phi(t)|`` against ``log t`` for the linear flow.

    The data must be mean-free, bandlimited and centered; the domain has to be
    large enough that nothing reaches the seam.  Wrap-around is detected as
    edge energy growing beyond ``edge_tol`` (and beyond three times its
    initial share, so domain-filling data is not rejected); the first
    contaminated time aborts the fit.  Returns ``(slope, times, sups)``.
    """
    times = [float(t) for t in times]
    if len(times) < 2:
        raise ValueError("need at least two sample times")
    spectral.require_mean_free(f0)
    frac0 = edge_fraction(f0)
    threshold = max(edge_tol, 3.0 * frac0)
    sups = []
    for t in times:
        u = airy_propagate(f0, t)
        frac = edge_fraction(u)
        if frac > threshold:
            raise WrapAroundError(t, frac)
        sups.append(refined_sup(u.values))
    slope = float(np.polyfit(np.log(times), np.log(sups), 1)[0])
    return slope, np.asarray(times), np.asarray(sups)


def bilinear_strichartz_ratio(
    j: int,
    k: int,
    f: RealField,
    g: RealField,
    t_end: float,
    halves=("both", "both"),
    samples: int = 64,
) -> float:
    """Normalized space-time L2 norm of a product of two free waves.

    Computes ``||u_j u_k||_{L2([0,t_end] x R)} * 2**max(j,k) / (||P_j f|| ||P_k g||)``
    with exact propagation and composite-trapezoid time quadrature.  The two
    blocks need frequency separation: either ``|j - k| > 2`` or the same band
    split into opposite sign halves.
    """
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    if abs(j - k) <= 2 and not (j == k and set(halves) == {"plus", "minus"}):
        raise ValueError(
            "bands must satisfy |j - k| > 2, or be equal with opposite halves"
        )
    if samples < 2:
        raise ValueError("need at least two time samples")
    grid = f.grid
    pj = project_band(f, DyadicBand(j, halves[0]))
    pk = project_band(g, DyadicBand(k, halves[1]))
    nj, nk = l2_norm(pj), l2_norm(pk)
    if nj == 0.0 or nk == 0.0:
        return 0.0
    ts = np.linspace(0.0, t_end, samples)
    vals = []
    for t in ts:
        sym = airy_symbol(grid, t)
        uj = np.fft.ifft(sym * pj.spectrum)
        uk = np.fft.ifft(sym * pk.spectrum)
        vals.append(grid.spacing * np.sum(np.abs(uj * uk) ** 2))
    integral = float(np.trapezoid(vals, ts))
    return float(np.sqrt(integral) * 2.0 ** max(j, k) / (nj * nk))
