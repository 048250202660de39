"""Strang split-step Fourier integrator for the semiclassical cubic NLS

    i*eps*du/dt + (eps^2/2) Lap(u) = |u|^2 u

on a periodic grid. eps = 1 recovers the unscaled defocusing equation.
Both substeps are exact flows (a unitary spectral multiplier and a
pointwise phase rotation), so mass is conserved to roundoff and the only
time-stepping error is the splitting commutator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteError, ResolutionError
from .grid import PHYSICAL, Field, SobolevIndex, lp_norm, norm, tail_fraction

MAX_STEPS = 5_000_000


@dataclass
class NlsState:
    t: float
    u: Field
    eps: float

    def __post_init__(self):
        if not 0 < self.eps <= 1:
            raise ValueError(f"eps must lie in (0, 1], got {self.eps!r}")


@dataclass(frozen=True)
class NlsRunConfig:
    dt: float
    T: float
    save_every: int = 1
    tail_tol: float = 1e-6

    def __post_init__(self):
        # Negative dt with negative T runs the reversible flow backward.
        if self.dt == 0 or not np.isfinite(self.dt):
            raise ValueError(f"dt must be nonzero and finite, got {self.dt!r}")
        if self.T == 0 or not np.isfinite(self.T):
            raise ValueError(f"T must be nonzero and finite, got {self.T!r}")
        if self.dt * self.T < 0:
            raise ValueError(f"dt = {self.dt} must carry the sign of the horizon T = {self.T}")
        if abs(self.dt) > abs(self.T) * (1 + 1e-12):
            raise ValueError(f"dt = {self.dt} exceeds the horizon T = {self.T}")
        if self.T / self.dt > MAX_STEPS:
            raise ValueError(
                f"T/dt = {self.T / self.dt:.3g} exceeds the step budget {MAX_STEPS}"
            )
        if not self.save_every >= 1:
            raise ValueError(f"save_every must be >= 1, got {self.save_every!r}")


def default_dt(grid, eps, safety=0.5):
    """Step resolving both the O(1/eps) nonlinear phase rate and the
    fastest resolved kinetic phase: safety * min(eps*dx, dx^2/eps)."""
    dx = grid.spacing
    return safety * min(eps * dx, dx * dx / eps)


def _kinetic(values, grid, eps, tau):
    vhat = np.fft.fftn(values)
    vhat *= np.exp(-0.5j * eps * tau * grid.k_squared)
    return np.fft.ifftn(vhat)


def _nonlinear(values, eps, tau):
    return values * np.exp(-1j * (tau / eps) * np.abs(values) ** 2)


def kinetic_substep(state: NlsState, tau) -> NlsState:
    """Exact flow of i*eps*du/dt = -(eps^2/2) Lap(u) over tau.

    Substeps act as operator pieces: the clock is advanced by strang_step.
    """
    u = state.u
    return NlsState(state.t, Field(u.grid, _kinetic(u.values, u.grid, state.eps, tau)), state.eps)


def nonlinear_substep(state: NlsState, tau) -> NlsState:
    """Exact flow of i*eps*du/dt = |u|^2 u over tau; |u| is pointwise invariant."""
    u = state.u
    return NlsState(state.t, Field(u.grid, _nonlinear(u.values, state.eps, tau)), state.eps)


def strang_step(state: NlsState, dt) -> NlsState:
    """Second-order composition: kinetic half, nonlinear full, kinetic half."""
    out = kinetic_substep(state, dt / 2)
    out = nonlinear_substep(out, dt)
    out = kinetic_substep(out, dt / 2)
    out.t = state.t + dt
    return out


def mass(f: Field) -> float:
    """int |u|^2 dx by grid quadrature."""
    if f.space != PHYSICAL:
        raise ValueError("mass expects a physical-space field")
    return float(np.sum(np.abs(f.values) ** 2) * f.grid.quad_weight)


def semiclassical_energy(state: NlsState) -> float:
    """eps^2 * int |grad u|^2 + int |u|^4, conserved by the exact flow."""
    grad_sq = norm(state.u, SobolevIndex(1.0, homogeneous=True)) ** 2
    return state.eps**2 * grad_sq + lp_norm(state.u, 4) ** 4


def _check_resolution(values, grid, tail_tol, t):
    frac = tail_fraction(Field(grid, values, PHYSICAL))
    if frac > tail_tol:
        raise ResolutionError(
            f"spectral tail fraction {frac:.3e} exceeds {tail_tol:.1e} at t = {t:.6g}; "
            "oscillations are under-resolved on this grid",
            tail_fraction=frac,
            t=t,
        )


def solve_nls(u0: Field, eps, config: NlsRunConfig, observer=None):
    """Integrate from u0 to T, returning snapshots every save_every steps.

    dt is adjusted to the nearest divisor of T so the run lands exactly on
    the horizon. The final state is always saved. The observer, when given,
    is called as observer(t, state) at every save.

    Raises ResolutionError if the spectral tail guard trips at any saved
    time (including t = 0) and NonFiniteError on NaN/overflow, carrying the
    last good snapshot.
    """
    if u0.space != PHYSICAL:
        raise ValueError("solve_nls expects a physical-space initial field")
    n_steps = max(1, round(config.T / config.dt))
    dt = config.T / n_steps
    grid = u0.grid

    _check_resolution(u0.values, grid, config.tail_tol, 0.0)

    half_mult = np.exp(-0.25j * eps * dt * grid.k_squared)
    u = u0.values.copy()
    snapshots = []

    def save(step, values):
        t = step * dt
        _check_resolution(values, grid, config.tail_tol, t)
        state = NlsState(t, Field(grid, values.copy()), eps)
        snapshots.append(state)
        if observer is not None:
            observer(t, state)

    save(0, u)
    for step in range(1, n_steps + 1):
        uhat = np.fft.fftn(u)
        u = np.fft.ifftn(uhat * half_mult)
        u *= np.exp(-1j * (dt / eps) * np.abs(u) ** 2)
        uhat = np.fft.fftn(u)
        u = np.fft.ifftn(uhat * half_mult)
        if not np.all(np.isfinite(u.real)) or not np.all(np.isfinite(u.imag)):
            raise NonFiniteError(
                f"non-finite values at step {step} (t = {step * dt:.6g})",
                last_state=snapshots[-1],
                t=step * dt,
            )
        if step % config.save_every == 0 or step == n_steps:
            save(step, u)
    return snapshots
