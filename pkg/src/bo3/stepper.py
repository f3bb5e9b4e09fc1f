"""Time integration with the stiff dispersive part handled exactly.

The scheme is integrating-factor RK4: the state is advanced in the frame of
the exact linear propagator (a pure phase multiplier), and classical RK4 is
applied to the transformed nonlinearity.  Linear flows are propagated exactly
in one multiplier application per snapshot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import flows
from .spectral import RealField, SpectralGrid, require_mean_free

__all__ = [
    "SolverConfig",
    "Trajectory",
    "BlowUpError",
    "integrate",
    "integrate_linearized_pair",
    "convergence_order",
    "ConvergenceResult",
]


class BlowUpError(RuntimeError):
    """Non-finite values appeared during integration."""

    def __init__(self, time: float):
        self.time = time
        super().__init__(f"solution lost finiteness at t = {time:.6g}")


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 1e-4
    t_end: float = 1.0
    scheme: str = "if_rk4"
    snapshot_stride: int = 1
    dealias: bool = True
    tail_tol: float = 1e-8

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_end < 0.0:
            raise ValueError(f"t_end must be nonnegative, got {self.t_end}")
        if self.snapshot_stride < 1:
            raise ValueError(f"snapshot_stride must be >= 1, got {self.snapshot_stride}")
        if self.scheme != "if_rk4":
            raise ValueError(f"unknown scheme {self.scheme!r}")


@dataclass
class Trajectory:
    """Time-stamped frames produced by the integrator."""

    frames: list  # list of (time, RealField)
    config: SolverConfig
    kind_tag: str = "third_order_bo"
    warnings: list = field(default_factory=list)  # list of (time, kind)

    def __post_init__(self):
        times = [t for t, _ in self.frames]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("frame times must be strictly increasing")
        grids = {f.grid for _, f in self.frames}
        if len(grids) > 1:
            raise ValueError("all frames must share one grid")

    @property
    def times(self) -> np.ndarray:
        return np.asarray([t for t, _ in self.frames])

    @property
    def grid(self) -> SpectralGrid:
        return self.frames[0][1].grid

    def final(self) -> RealField:
        return self.frames[-1][1]

    def at(self, t: float, atol: float = 1e-9) -> RealField:
        for s, f in self.frames:
            if abs(s - t) <= atol:
                return f
        raise KeyError(f"no frame at t = {t}")


def _rk4_step(s, h, efull, ehalf, nl):
    """One integrating-factor RK4 step of width h on the spectrum s."""
    n1 = nl(s)
    n2 = nl(ehalf * (s + 0.5 * h * n1))
    n3 = nl(ehalf * s + 0.5 * h * n2)
    n4 = nl(efull * s + h * ehalf * n3)
    return efull * s + (h / 6.0) * (efull * n1 + 2.0 * ehalf * (n2 + n3) + n4)


def _snapshot_plan(t_end: float, dt: float):
    n_steps = max(1, int(round(t_end / dt)))
    if abs(n_steps * dt - t_end) > 1e-9 * max(1.0, t_end):
        n_steps = int(math.ceil(t_end / dt - 1e-12))
    return n_steps, t_end / n_steps


def _march(grid, s0, t0, t_span, config, nl, record):
    """March a spectrum from t0 over t_span (signed), recording snapshots."""
    n_steps, h_abs = _snapshot_plan(abs(t_span), config.dt)
    h = math.copysign(h_abs, t_span) if t_span != 0.0 else 0.0
    lam = flows.linear_symbol(record["lin_tag"], grid)
    s = np.array(s0, dtype=complex)
    record["emit"](t0, s)
    if t_span == 0.0:
        return
    efull = np.exp(lam * h)
    ehalf = np.exp(lam * (h / 2.0))
    for j in range(1, n_steps + 1):
        s = _rk4_step(s, h, efull, ehalf, nl)
        t = t0 + j * h
        if not np.all(np.isfinite(s)):
            raise BlowUpError(t)
        if j % config.snapshot_stride == 0 or j == n_steps:
            record["emit"](t, s)


def integrate(kind: flows.FlowKind, f0: RealField, config: SolverConfig) -> Trajectory:
    """Integrate one flow from initial data ``f0``.

    Linear flows use the exact propagator per snapshot.  Nonlinear flows
    require mean-free data.  Non-finite values abort with the blow-up time;
    under-resolution only accumulates warnings on the trajectory.
    """
    grid = f0.grid
    tag = kind.tag
    if tag == "airy":
        if config.t_end == 0.0:
            return Trajectory([(0.0, f0)], config, tag)
        n_snaps = max(1, int(round(config.t_end / (config.dt * config.snapshot_stride))))
        times = np.linspace(0.0, config.t_end, n_snaps + 1)
        frames = [(float(t), flows.airy_propagate(f0, float(t))) for t in times]
        return Trajectory(frames, config, tag)

    require_mean_free(f0)
    ws = flows._workspace(grid, config.dealias)

    if tag in ("benjamin_ono", "third_order_bo"):
        frames, warns = [], []

        def emit(t, s):
            fld = RealField.from_spectrum(grid, s)
            if flows.spectral_tail_fraction(fld) > config.tail_tol:
                warns.append((t, "resolution"))
            frames.append((t, fld))

        nl = lambda s: flows.nonlinear_spectrum(tag, ws, s)
        _march(grid, f0.spectrum, 0.0, config.t_end, config,
               nl, {"emit": emit, "lin_tag": tag})
        return Trajectory(frames, config, tag, warns)

    # linearized kinds co-evolve the background state with the same stages so
    # there is no interpolation error between the two solutions
    background = kind.background
    if background.grid != grid:
        raise ValueError("background trajectory lives on a different grid")
    t_lo, t_hi = background.times[0], background.times[-1]
    if t_lo > 0.0 or t_hi < config.t_end - 1e-12:
        raise ValueError("background trajectory does not cover the window")

    if tag == "linearized_tbo":
        phi_traj, v_traj = integrate_linearized_pair(
            background.frames[0][1], f0, config
        )
        return v_traj

    # adjoint runs backward from the final background state
    if abs(t_hi - config.t_end) > 1e-9:
        raise ValueError("adjoint integration needs a background frame at t_end")
    phi_T = background.at(float(background.times[-1]))
    pair = _coupled_march(
        grid, phi_T.spectrum, f0.spectrum, config, ws,
        t0=config.t_end, t_span=-config.t_end, second_tag="adjoint_linearized_tbo",
    )
    frames = [(t, w) for (t, _phi, w) in pair["frames"]]
    frames.reverse()
    return Trajectory(frames, config, tag, pair["warnings"])


def _coupled_march(grid, s_phi0, s_sec0, config, ws, t0, t_span, second_tag):
    """March (phi, secondary) with shared RK4 stages; returns recorded frames."""
    n_steps, h_abs = _snapshot_plan(abs(t_span), config.dt)
    h = math.copysign(h_abs, t_span)
    lam = flows.linear_symbol("third_order_bo", grid)
    efull = np.exp(lam * h)
    ehalf = np.exp(lam * (h / 2.0))

    def nl_block(block):
        s_p, s_s = block
        return (
            flows.nonlinear_spectrum("third_order_bo", ws, s_p),
            flows.nonlinear_spectrum(second_tag, ws, s_s, s_background=s_p),
        )

    def axpy(block, scale, incr):
        return (block[0] + scale * incr[0], block[1] + scale * incr[1])

    def apply(mult, block):
        return (mult * block[0], mult * block[1])

    frames, warns = [], []

    def emit(t, block):
        phi = RealField.from_spectrum(grid, block[0])
        sec = RealField.from_spectrum(grid, block[1])
        if flows.spectral_tail_fraction(phi) > config.tail_tol:
            warns.append((t, "resolution"))
        frames.append((t, phi, sec))

    block = (np.array(s_phi0, dtype=complex), np.array(s_sec0, dtype=complex))
    emit(t0, block)
    for j in range(1, n_steps + 1):
        n1 = nl_block(block)
        n2 = nl_block(apply(ehalf, axpy(block, 0.5 * h, n1)))
        n3 = nl_block(axpy(apply(ehalf, block), 0.5 * h, n2))
        n4 = nl_block(axpy(apply(efull, block), h, apply(ehalf, n3)))
        block = (
            efull * block[0] + (h / 6.0) * (efull * n1[0] + 2.0 * ehalf * (n2[0] + n3[0]) + n4[0]),
            efull * block[1] + (h / 6.0) * (efull * n1[1] + 2.0 * ehalf * (n2[1] + n3[1]) + n4[1]),
        )
        t = t0 + j * h
        if not (np.all(np.isfinite(block[0])) and np.all(np.isfinite(block[1]))):
            raise BlowUpError(t)
        if j % config.snapshot_stride == 0 or j == n_steps:
            emit(t, block)
    return {"frames": frames, "warnings": warns}


def integrate_linearized_pair(phi0: RealField, v0: RealField, config: SolverConfig):
    """Co-evolve the nonlinear state and its linearization with shared stages."""
    if phi0.grid != v0.grid:
        raise ValueError("fields live on different grids")
    require_mean_free(phi0)
    ws = flows._workspace(phi0.grid, config.dealias)
    out = _coupled_march(
        phi0.grid, phi0.spectrum, v0.spectrum, config, ws,
        t0=0.0, t_span=config.t_end, second_tag="linearized_tbo",
    )
    phi_frames = [(t, p) for (t, p, _v) in out["frames"]]
    v_frames = [(t, v) for (t, _p, v) in out["frames"]]
    phi_traj = Trajectory(phi_frames, config, "third_order_bo", list(out["warnings"]))
    v_traj = Trajectory(v_frames, config, "linearized_tbo", list(out["warnings"]))
    return phi_traj, v_traj


def integrate_backward(kind: flows.FlowKind, fT: RealField, t_end: float, config: SolverConfig) -> RealField:
    """March a plain flow backward from t_end to 0; used by reversal checks."""
    grid = fT.grid
    ws = flows._workspace(grid, config.dealias)
    store = {}

    def emit(t, s):
        store["last"] = (t, s)

    nl = lambda s: flows.nonlinear_spectrum(kind.tag, ws, s)
    _march(grid, fT.spectrum, t_end, -t_end, config, nl,
           {"emit": emit, "lin_tag": kind.tag})
    return RealField.from_spectrum(grid, store["last"][1])


@dataclass(frozen=True)
class ConvergenceResult:
    order: float  # fitted slope; inf means errors at round-off; nan means non-monotone
    dts: tuple
    errors: tuple

    @property
    def label(self) -> str:
        if math.isinf(self.order):
            return "exact"
        if math.isnan(self.order):
            return "non-monotone"
        return f"{self.order:.3f}"


def convergence_order(kind: flows.FlowKind, f0: RealField, t_end: float, dt_list) -> ConvergenceResult:
    """Self-convergence study against a reference at the finest dt / 8."""
    dts = sorted(float(d) for d in dt_list)
    if len(dts) < 3:
        raise ValueError("need at least three dt values")

    def final_state(dt):
        cfg = SolverConfig(dt=dt, t_end=t_end, snapshot_stride=10**9)
        return integrate(kind, f0, cfg).final()

    ref = final_state(dts[0] / 8.0)
    scale = np.max(np.abs(ref.values)) + 1e-300
    errors = []
    for dt in dts:
        fin = final_state(dt)
        errors.append(float(np.max(np.abs(fin.values - ref.values))))
    errors_arr = np.asarray(errors)
    if np.all(errors_arr < 1e-12 * scale):
        return ConvergenceResult(math.inf, tuple(dts), tuple(errors))
    if np.any(np.diff(errors_arr) <= 0.0):
        return ConvergenceResult(math.nan, tuple(dts), tuple(errors))
    slope = float(np.polyfit(np.log(dts), np.log(errors_arr), 1)[0])
    return ConvergenceResult(slope, tuple(dts), tuple(errors))
