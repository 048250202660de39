"""Periodic spectral grid: transforms, derivatives, and Sobolev norms.

Conventions (fixed once, used everywhere):

* Domain is [-L, L)^n sampled at N points per axis, dx = 2L/N.
* Wavenumbers per axis are kappa_m = pi*m/L for m in [-N/2, N/2),
  stored in FFT order.
* The forward transform carries the trapezoidal quadrature weight dx^n
  together with the phase for the x = -L origin, so spectral values
  approximate the continuum integral  fhat(k) = int f(x) e^{-ikx} dx.
* Parseval then reads  int |f|^2 dx = sum_k |fhat(k)|^2 * mu  with
  mu = (2L)^{-n}, and all Sobolev norms are weighted spectral sums.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

# Default memory budget: complex128 fields of this size are ~0.5 GiB.
DEFAULT_MAX_POINTS = 2**25

# Boundary decay tolerance for constructed data; periodization error
# below this is negligible against all solver tolerances.
DECAY_TOL = 1e-12

PHYSICAL = "physical"
SPECTRAL = "spectral"


@dataclass(frozen=True)
class Grid:
    """Precomputed spectral machinery for [-L, L)^n, immutable and shareable."""

    dim: int
    half_width: float
    points_per_axis: int

    @property
    def spacing(self):
        return 2.0 * self.half_width / self.points_per_axis

    @property
    def shape(self):
        return (self.points_per_axis,) * self.dim

    @property
    def num_points(self):
        return self.points_per_axis**self.dim

    @property
    def k_max(self):
        """Nyquist magnitude pi*N/(2L) per axis."""
        return np.pi * self.points_per_axis / (2.0 * self.half_width)

    @property
    def quad_weight(self):
        """dx^n, the physical-space quadrature weight."""
        return self.spacing**self.dim

    @property
    def parseval_weight(self):
        """(2L)^{-n}, the spectral quadrature weight mu."""
        return (2.0 * self.half_width) ** -self.dim

    @cached_property
    def x_axes(self):
        x = -self.half_width + self.spacing * np.arange(self.points_per_axis)
        return (x,) * self.dim

    @cached_property
    def k_axes(self):
        k = 2.0 * np.pi * np.fft.fftfreq(self.points_per_axis, d=self.spacing)
        return (k,) * self.dim

    def axis_view(self, arr, axis):
        """Reshape a per-axis 1-D array for broadcasting over the grid."""
        shp = [1] * self.dim
        shp[axis] = self.points_per_axis
        return arr.reshape(shp)

    @cached_property
    def k_squared(self):
        """|kappa|^2 over the full grid, FFT order."""
        out = np.zeros(self.shape)
        for ax in range(self.dim):
            out = out + self.axis_view(self.k_axes[ax] ** 2, ax)
        return out

    @cached_property
    def spectral_phase(self):
        """Per-mode sign (-1)^m accounting for the x = -L origin."""
        m = np.rint(np.fft.fftfreq(self.points_per_axis) * self.points_per_axis)
        sign = np.where(m.astype(int) % 2 == 0, 1.0, -1.0)
        out = np.ones(self.shape)
        for ax in range(self.dim):
            out = out * self.axis_view(sign, ax)
        return out

    @cached_property
    def grad_multipliers(self):
        """i*kappa per axis with the unpaired Nyquist mode zeroed."""
        out = []
        for ax in range(self.dim):
            k = self.k_axes[ax].copy()
            k[self.points_per_axis // 2] = 0.0
            out.append(1j * self.axis_view(k, ax))
        return tuple(out)

    @cached_property
    def dealias_mask(self):
        """Two-thirds rule mask: True on kept modes, per axis."""
        out = np.ones(self.shape, dtype=bool)
        for ax in range(self.dim):
            cutoff = (2.0 / 3.0) * np.abs(self.k_axes[ax]).max()
            out = out & self.axis_view(np.abs(self.k_axes[ax]) <= cutoff, ax)
        return out

    def meshgrid(self):
        return np.meshgrid(*self.x_axes, indexing="ij")


def make_grid(dim, half_width, points_per_axis, max_points=DEFAULT_MAX_POINTS):
    """Build a Grid for [-L, L)^dim with N points per axis.

    N must be a power of two >= 8 so that dx*N == 2L holds exactly in
    binary floating point.
    """
    if not isinstance(dim, (int, np.integer)) or not 1 <= dim <= 3:
        raise ValueError(f"dim must be an integer in [1, 3], got {dim!r}")
    if not half_width > 0:
        raise ValueError(f"half_width must be positive, got {half_width!r}")
    n = int(points_per_axis)
    if n != points_per_axis or n < 8 or n & (n - 1) != 0:
        raise ValueError(
            f"points_per_axis must be a power of two >= 8, got {points_per_axis!r}"
        )
    if n**dim > max_points:
        raise ValueError(
            f"grid of {n}^{dim} = {n**dim} points exceeds the memory budget of "
            f"{max_points} points"
        )
    return Grid(dim=int(dim), half_width=float(half_width), points_per_axis=n)


@dataclass
class Field:
    """Complex samples on a Grid, tagged physical or spectral."""

    grid: Grid
    values: np.ndarray
    space: str = PHYSICAL

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {self.values.shape} does not match grid {self.grid.shape}"
            )
        if self.space not in (PHYSICAL, SPECTRAL):
            raise ValueError(f"unknown space tag {self.space!r}")

    def copy(self):
        return Field(self.grid, self.values.copy(), self.space)


def _require_space(f, space, op):
    if f.space != space:
        raise ValueError(f"{op} expects a {space}-space field, got {f.space}")


def transform(f: Field) -> Field:
    """Physical -> spectral, continuum-integral normalization."""
    _require_space(f, PHYSICAL, "transform")
    g = f.grid
    fhat = np.fft.fftn(f.values) * (g.quad_weight * g.spectral_phase)
    return Field(g, fhat, SPECTRAL)


def inverse_transform(f: Field) -> Field:
    """Spectral -> physical, inverse of transform."""
    _require_space(f, SPECTRAL, "inverse_transform")
    g = f.grid
    vals = np.fft.ifftn(f.values * g.spectral_phase / g.quad_weight)
    return Field(g, vals, PHYSICAL)


def gradient(f: Field) -> list[Field]:
    """Spectral gradient of the trigonometric interpolant, one Field per axis."""
    _require_space(f, PHYSICAL, "gradient")
    g = f.grid
    fhat = np.fft.fftn(f.values)
    return [
        Field(g, np.fft.ifftn(mult * fhat), PHYSICAL) for mult in g.grad_multipliers
    ]


def laplacian(f: Field) -> Field:
    """Spectral Laplacian via the -|kappa|^2 multiplier."""
    _require_space(f, PHYSICAL, "laplacian")
    g = f.grid
    fhat = np.fft.fftn(f.values)
    return Field(g, np.fft.ifftn(-g.k_squared * fhat), PHYSICAL)


@dataclass(frozen=True)
class SobolevIndex:
    """Selects the spectral weight: L2 (s=0), H^s, homogeneous H^s, or
    the eps-scaled H^s_eps with weight (1 + |eps*k|^2)^s."""

    s: float = 0.0
    homogeneous: bool = False
    eps_scaled: float | None = None

    def __post_init__(self):
        if not np.isfinite(self.s) or self.s < 0:
            raise ValueError(f"Sobolev order s must be finite and >= 0, got {self.s!r}")
        if self.eps_scaled is not None:
            if not 0 < self.eps_scaled <= 1:
                raise ValueError(f"eps must lie in (0, 1], got {self.eps_scaled!r}")
            if self.homogeneous:
                raise ValueError("eps-scaled homogeneous norm is not defined")

    def weight(self, k_squared):
        if self.eps_scaled is not None:
            return (1.0 + self.eps_scaled**2 * k_squared) ** self.s
        if self.homogeneous:
            # 0^0 == 1 makes s = 0 coincide with L2, as it should.
            return k_squared**self.s
        return (1.0 + k_squared) ** self.s


def norm(f: Field, index: SobolevIndex = SobolevIndex()) -> float:
    """Exact spectral evaluation of the selected Sobolev norm."""
    if f.space == PHYSICAL:
        f = transform(f)
    g = f.grid
    w = index.weight(g.k_squared)
    return float(np.sqrt(np.sum(w * np.abs(f.values) ** 2) * g.parseval_weight))


def lp_norm(f: Field, p: float) -> float:
    """Physical-space L^p norm by dx^n quadrature (used for quartic energies)."""
    _require_space(f, PHYSICAL, "lp_norm")
    return float((np.sum(np.abs(f.values) ** p) * f.grid.quad_weight) ** (1.0 / p))


def make_gaussian(grid, amplitude=1.0, width=1.0, center=0.0, decay_tol=DECAY_TOL):
    """Canonical smooth rapidly-decaying datum: amplitude * exp(-|x-c|^2/w^2).

    Rejects combinations whose boundary samples exceed decay_tol * amplitude,
    since then the periodic domain is too small to stand in for free space.
    """
    if not width > 0:
        raise ValueError(f"width must be positive, got {width!r}")
    centers = np.broadcast_to(np.atleast_1d(np.asarray(center, dtype=float)), (grid.dim,))
    r2 = np.zeros(grid.shape)
    for ax in range(grid.dim):
        r2 = r2 + grid.axis_view((grid.x_axes[ax] - centers[ax]) ** 2, ax)
    vals = amplitude * np.exp(-r2 / width**2)
    f = Field(grid, vals, PHYSICAL)
    check_boundary_decay(f, tol=abs(amplitude) * decay_tol)
    return f


def boundary_max(f: Field) -> float:
    """Largest |value| on the outermost shell of grid points."""
    mask = np.zeros(f.grid.shape, dtype=bool)
    for ax in range(f.grid.dim):
        sl = [slice(None)] * f.grid.dim
        sl[ax] = 0
        mask[tuple(sl)] = True
        sl[ax] = -1
        mask[tuple(sl)] = True
    return float(np.abs(f.values[mask]).max())


def check_boundary_decay(f: Field, tol):
    b = boundary_max(f)
    if b > tol:
        raise ValueError(
            f"boundary decay check failed: max boundary sample {b:.3e} > {tol:.3e}; "
            "the domain is too small for this datum"
        )


def tail_fraction(f: Field) -> float:
    """Fraction of spectral mass above the two-thirds cutoff (resolution guard)."""
    if f.space == PHYSICAL:
        f = transform(f)
    power = np.abs(f.values) ** 2
    total = power.sum()
    if total == 0.0:
        return 0.0
    return float(power[~f.grid.dealias_mask].sum() / total)


def resample(f: Field, points_per_axis) -> Field:
    """Trigonometric interpolation onto a grid with a different N.

    Modes are matched by wavenumber (the integral-normalized coefficients
    carry over unchanged); new modes are zero, dropped modes must be empty
    for the result to be exact, so only use this on resolved fields.
    """
    src = f if f.space == SPECTRAL else transform(f)
    g = f.grid
    new_grid = make_grid(g.dim, g.half_width, points_per_axis)
    shifted = np.fft.fftshift(src.values)
    out = np.zeros(new_grid.shape, dtype=np.complex128)
    n_old, n_new = g.points_per_axis, new_grid.points_per_axis
    half = min(n_old, n_new) // 2
    take = tuple(slice(n_old // 2 - half, n_old // 2 + half) for _ in range(g.dim))
    put = tuple(slice(n_new // 2 - half, n_new // 2 + half) for _ in range(g.dim))
    out[put] = shifted[take]
    res = Field(new_grid, np.fft.ifftshift(out), SPECTRAL)
    return res if f.space == SPECTRAL else inverse_transform(res)


FIELD_SCHEMA_VERSION = 1


def save_field(f: Field, path_base):
    """Write <base>.json (header) and <base>.csv with (index, re, im) rows."""
    header = {
        "schema_version": FIELD_SCHEMA_VERSION,
        "dim": f.grid.dim,
        "half_width": f.grid.half_width,
        "points_per_axis": f.grid.points_per_axis,
        "space": f.space,
    }
    with open(f"{path_base}.json", "w") as fh:
        json.dump(header, fh, sort_keys=True, indent=2)
        fh.write("\n")
    flat = f.values.reshape(-1)
    with open(f"{path_base}.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "re", "im"])
        for i, v in enumerate(flat):
            w.writerow([i, format(v.real, ".17g"), format(v.imag, ".17g")])


def load_field(path_base) -> Field:
    with open(f"{path_base}.json") as fh:
        header = json.load(fh)
    if header.get("schema_version") != FIELD_SCHEMA_VERSION:
        raise ValueError(f"unsupported field schema version {header.get('schema_version')!r}")
    grid = make_grid(header["dim"], header["half_width"], header["points_per_axis"])
    vals = np.zeros(grid.num_points, dtype=np.complex128)
    with open(f"{path_base}.csv", newline="") as fh:
        rows = csv.reader(fh)
        next(rows)
        count = 0
        for row in rows:
            vals[int(row[0])] = float(row[1]) + 1j * float(row[2])
            count += 1
    if count != grid.num_points:
        raise ValueError(f"field dump has {count} rows, expected {grid.num_points}")
    return Field(grid, vals.reshape(grid.shape), header["space"])
