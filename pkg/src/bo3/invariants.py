"""Conserved and almost-conserved functionals.

The three classical energies of the hierarchy, the linear vector field
``L = x + 3t d_xx`` and its nonlinear counterpart, and the modified
(quadratic plus cubic-corrected) energy used to monitor the linearized flow
at low regularity.  All x-weighted functionals use the centered coordinate
and are only meaningful while the state stays away from the periodic seam;
a support-leakage warning fires otherwise.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import spectral
from .spectral import (
    RealField,
    dealiased_product,
    derivative,
    hilbert,
    l2_norm,
    sobolev_norm,
)

__all__ = [
    "SupportLeakageWarning",
    "EDGE_TOL",
    "e0",
    "e1",
    "e2",
    "edge_fraction",
    "l_vector_field",
    "l_nonlinear",
    "ModifiedEnergy",
    "modified_energy",
    "fractional_derivative",
    "EnergySeries",
    "track",
    "track_pair",
    "CHANNELS",
    "PAIR_CHANNELS",
]


class SupportLeakageWarning(UserWarning):
    """Too much of the field's energy sits near the periodic seam."""


# Fraction of ||phi||^2 allowed in the outer tenth of the domain before
# x-weighted functionals are flagged as untrustworthy.
EDGE_TOL = 1e-6


def _quad(f: RealField) -> float:
    return float(f.grid.spacing * np.sum(f.values))


def e0(phi: RealField) -> float:
    """integral of phi^2."""
    return float(phi.grid.spacing * np.sum(phi.values**2))


def e1(phi: RealField) -> float:
    """integral of phi H(phi_x) - phi^3 / 3."""
    cross = dealiased_product(phi, hilbert(derivative(phi)))
    cubic = dealiased_product(dealiased_product(phi, phi), phi)
    return _quad(cross) - _quad(cubic) / 3.0


def e2(phi: RealField) -> float:
    """integral of phi_x^2 - (3/4) phi^2 H(phi_x) + phi^4 / 8."""
    px = derivative(phi)
    sq = dealiased_product(phi, phi)
    cross = dealiased_product(sq, hilbert(px))
    quart = dealiased_product(sq, sq)
    return e0(px) - 0.75 * _quad(cross) + 0.125 * _quad(quart)


def edge_fraction(phi) -> float:
    """Share of ||phi||^2 in the outer 10 percent of the domain."""
    n = phi.grid.n
    k = n // 20
    power = np.abs(phi.values) ** 2
    total = float(np.sum(power))
    if total == 0.0:
        return 0.0
    return float(np.sum(power[:k]) + np.sum(power[-k:])) / total


def _warn_if_leaking(phi, what: str) -> None:
    frac = edge_fraction(phi)
    if frac > EDGE_TOL:
        warnings.warn(
            f"{what}: {frac:.2e} of the field's energy lies in the outer 10% "
            "of the domain; x-weighted values are unreliable",
            SupportLeakageWarning,
            stacklevel=3,
        )


def l_vector_field(phi: RealField, t: float) -> RealField:
    """``x phi + 3 t phi_xx`` with the centered coordinate."""
    _warn_if_leaking(phi, "l_vector_field")
    vals = phi.grid.x * phi.values + 3.0 * t * derivative(phi, 2).values
    return RealField(phi.grid, vals)


def l_nonlinear(phi: RealField, t: float) -> RealField:
    """Nonlinear companion of the vector field.

    ``x phi + 3t phi_xx - (3t/4) phi^3 + (9t/4)[phi H phi_x + H(phi phi_x)]``.
    The coefficients are pinned by requiring the result to solve the backward
    adjoint linearized equation exactly along the nonlinear flow (see the
    corresponding test), which is what makes its critical-norm boundedness a
    meaningful diagnostic.
    """
    _warn_if_leaking(phi, "l_nonlinear")
    px = derivative(phi)
    cubic = dealiased_product(dealiased_product(phi, phi), phi)
    g = dealiased_product(phi, hilbert(px)).values + hilbert(dealiased_product(phi, px)).values
    vals = (
        phi.grid.x * phi.values
        + 3.0 * t * derivative(phi, 2).values
        - 0.75 * t * cubic.values
        + 2.25 * t * g
    )
    return RealField(phi.grid, vals)


# ---------------------------------------------------------------------------
# Modified energy for the linearized flow at critical regularity


def fractional_derivative(v: RealField, power: float) -> RealField:
    """Apply ``|D|**power``: multiplier ``|xi|**power``, zero mode annihilated."""
    grid = v.grid
    out = np.zeros(grid.n, dtype=complex)
    nz = grid.xi != 0.0
    out[nz] = np.abs(grid.xi[nz]) ** power * v.spectrum[nz]
    return RealField.from_spectrum(grid, out)


def _high_cut(fld: RealField, t: float, c_cut: float) -> RealField:
    """Smooth projection onto wavenumbers above ``c_cut * t**(-1/3)``."""
    grid = fld.grid
    theta = c_cut * t ** (-1.0 / 3.0)
    mask = 1.0 - spectral.dyadic_bump(grid.xi / theta)
    return RealField.from_spectrum(grid, mask * fld.spectrum)


@dataclass(frozen=True)
class ModifiedEnergy:
    total: float
    quadratic: float
    cubic: float


def modified_energy(y: RealField, phi: RealField, t: float, c_cut: float = 1.0) -> ModifiedEnergy:
    """Quadratic energy of ``y`` plus its cubic high-frequency correction.

    The correction couples the pieces of ``y`` and ``phi`` above the moving
    cutoff ``c_cut * t**(-1/3)`` and is built so that its time derivative
    cancels the leading quadratic growth of ``||y||^2`` along the linearized
    flow.  Requires t > 0 because of the cutoff.
    """
    if t <= 0.0:
        raise ValueError(f"modified energy needs t > 0, got {t}")
    if y.grid != phi.grid:
        raise ValueError("fields live on different grids")
    quadratic = l2_norm(y) ** 2
    y_hi = _high_cut(y, t, c_cut)
    phi_hi = _high_cut(phi, t, c_cut)
    a = fractional_derivative(y_hi, -0.5)          # |D|^(-1/2) y_hi
    b = hilbert(fractional_derivative(y_hi, 0.5))  # H |D|^(1/2) y_hi
    c = hilbert(a)                            # H |D|^(-1/2) y_hi
    dinv = spectral.antiderivative(phi_hi)
    hphi = hilbert(phi_hi)
    up = fractional_derivative(y_hi, 0.5)          # |D|^(1/2) y_hi
    term1 = dealiased_product(a, dealiased_product(b, dinv))
    term2 = dealiased_product(a, dealiased_product(c, hphi))
    term3 = dealiased_product(up, dealiased_product(c, dinv))
    cubic = -0.125 * (_quad(term1) + _quad(term2) + _quad(term3))
    return ModifiedEnergy(quadratic + cubic, quadratic, cubic)


# ---------------------------------------------------------------------------
# Channel tracking


@dataclass
class EnergySeries:
    """Named diagnostic channels sampled along a trajectory."""

    times: np.ndarray
    channels: dict
    reference: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, vals in self.channels.items():
            if len(vals) != len(self.times):
                raise ValueError(f"channel {name!r} length mismatch")

    def drift(self, name: str) -> float:
        """max |value - value(0)| / |value(0)| for one channel."""
        vals = np.asarray(self.channels[name], dtype=float)
        ref = self.reference.get(name, vals[0])
        if ref == 0.0:
            raise ZeroDivisionError(f"channel {name!r} starts at zero")
        return float(np.max(np.abs(vals - ref)) / abs(ref))

    def to_rows(self):
        names = sorted(self.channels)
        yield ["t"] + names
        for i, t in enumerate(self.times):
            yield [t] + [self.channels[n][i] for n in names]


CHANNELS = {
    "E0": lambda phi, t: e0(phi),
    "E1": lambda phi, t: e1(phi),
    "E2": lambda phi, t: e2(phi),
    "L2": lambda phi, t: l2_norm(phi),
    "H1": lambda phi, t: sobolev_norm(phi, 1.0),
    "Hhalf_hom": lambda phi, t: sobolev_norm(phi, 0.5, homogeneous=True),
    "lnl_half_norm": lambda phi, t: (
        sobolev_norm(l_nonlinear(phi, t), 0.5, homogeneous=True) if t > 0.0 else np.nan
    ),
    "l_vf_norm": lambda phi, t: l2_norm(l_vector_field(phi, t)),
}

PAIR_CHANNELS = {
    "v_l2": lambda phi, v, t: l2_norm(v),
    "y_l2": lambda phi, v, t: l2_norm(fractional_derivative(v, -0.5)),
    "modified_energy": lambda phi, v, t: (
        modified_energy(fractional_derivative(v, -0.5), phi, t).total if t > 0.0 else np.nan
    ),
    "modified_energy_cubic": lambda phi, v, t: (
        modified_energy(fractional_derivative(v, -0.5), phi, t).cubic if t > 0.0 else np.nan
    ),
}


def track(traj, channels) -> EnergySeries:
    """Evaluate named single-field channels at every frame of a trajectory."""
    funcs = {}
    for name in channels:
        if name not in CHANNELS:
            raise KeyError(f"unknown channel {name!r}")
        funcs[name] = CHANNELS[name]
    times = traj.times
    out = {name: [] for name in funcs}
    for t, fld in traj.frames:
        for name, fn in funcs.items():
            out[name].append(fn(fld, t))
    series = {name: np.asarray(vals) for name, vals in out.items()}
    return EnergySeries(times, series, {n: series[n][0] for n in series})


def track_pair(phi_traj, v_traj, channels) -> EnergySeries:
    """Evaluate coupled (background, linearized) channels frame by frame."""
    if len(phi_traj.frames) != len(v_traj.frames):
        raise ValueError("trajectories have different frame counts")
    funcs = {}
    for name in channels:
        if name not in PAIR_CHANNELS:
            raise KeyError(f"unknown channel {name!r}")
        funcs[name] = PAIR_CHANNELS[name]
    times = phi_traj.times
    out = {name: [] for name in funcs}
    for (t, phi), (_t2, v) in zip(phi_traj.frames, v_traj.frames):
        for name, fn in funcs.items():
            out[name].append(fn(phi, v, t))
    series = {name: np.asarray(vals) for name, vals in out.items()}
    return EnergySeries(times, series, {n: series[n][0] for n in series})
