"""Spectral representation of periodic vector fields and the operators on them.

Fields live on a cubic box [0, L)^3 sampled at n collocation points per axis.
A velocity field is stored either as point values (PhysicalField) or as
Fourier coefficients (SpectralField) on the integer lattice k, with the
angular wavenumber xi = (2*pi/L) * k.

Transform convention (fixed; everything else in the package relies on it):

    forward:   u_hat(k) = (L/n)^3 * sum_x u(x) exp(-i x . xi_k)
    inverse:   u(x)     = (1/L^3) * sum_k u_hat(k) exp(+i x . xi_k)

The forward transform is the quadrature of the integral transform
integral u(x) exp(-i x . xi) dx over the box, so a constant field c has
u_hat(0) = c * L^3.  Under this convention Parseval reads

    integral |u|^2 dx = (1/L^3) * sum_k |u_hat(k)|^2

and all norms below include that 1/L^3 factor, which makes the spectral
L^2 norm equal to the physical one (equal-weight quadrature, exact for
band-limited fields).

Array layout: coefficient and value arrays have shape (3, n, n, n); axis 0
is the vector component, axes 1..3 follow numpy's FFT ordering
(k = 0, 1, ..., n/2-1, -n/2, ..., -1).

All operations are pure functions: they never mutate their inputs and
return fresh arrays.  Kernel parallelism (FFT worker threads) is
controlled by the EDNS_THREADS environment variable; results do not
depend on the worker count because the transforms are deterministic and
all reductions use numpy's fixed pairwise summation.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as _fft

from .errors import DimensionMismatchError, NonHermitianError

TWO_PI = 2.0 * math.pi


def _workers() -> int:
    """FFT worker thread count: EDNS_THREADS if set, else the hardware count."""
    env = os.environ.get("EDNS_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class GridSpec:
    """Cubic periodic grid: n_per_axis points on a box of side box_length.

    friedrich_radius is the spectral truncation radius: coefficients with
    |xi| >= friedrich_radius are treated as zero.  It defaults to
    (n/3)*(2*pi/L), which coincides with the spherical dealiasing cutoff,
    so low-pass truncation and dealiasing are a single mask.  A smaller
    radius may be configured; a larger one would leave aliased modes in
    quadratic products and is rejected.
    """

    n_per_axis: int
    box_length: float = TWO_PI
    friedrich_radius: float | None = None

    def __post_init__(self):
        n = self.n_per_axis
        if n < 4 or (n & (n - 1)) != 0:
            raise ValueError(f"n_per_axis must be a power of two >= 4, got {n}")
        if not (self.box_length > 0.0):
            raise ValueError(f"box_length must be positive, got {self.box_length}")
        limit = self.dealias_radius
        if self.friedrich_radius is None:
            object.__setattr__(self, "friedrich_radius", limit)
        else:
            r = float(self.friedrich_radius)
            if not (0.0 < r <= limit * (1.0 + 1e-12)):
                raise ValueError(
                    f"friedrich_radius must lie in (0, {limit:.6g}] "
                    f"(the dealiasing cutoff), got {r}"
                )
            object.__setattr__(self, "friedrich_radius", r)

    @property
    def dealias_radius(self) -> float:
        """Spherical cutoff (n/3)*(2*pi/L) below which quadratic products are alias-free."""
        return (self.n_per_axis / 3.0) * (TWO_PI / self.box_length)

    @property
    def dx(self) -> float:
        return self.box_length / self.n_per_axis

    @property
    def cell_volume(self) -> float:
        return self.dx**3

    @property
    def volume(self) -> float:
        return self.box_length**3


@dataclass(frozen=True)
class WaveVector:
    """One lattice mode: integer triple k and its angular wavenumber split."""

    k: tuple[int, int, int]
    xi: tuple[float, float, float]
    xi_h: tuple[float, float]  # horizontal part (xi_1, xi_2)
    xi_3: float


def wavevector(grid: GridSpec, k: tuple[int, int, int]) -> WaveVector:
    n = grid.n_per_axis
    for ki in k:
        if abs(ki) > n // 2:
            raise ValueError(f"mode {k} outside lattice for n={n}")
    scale = TWO_PI / grid.box_length
    xi = tuple(scale * ki for ki in k)
    return WaveVector(k=tuple(k), xi=xi, xi_h=(xi[0], xi[1]), xi_3=xi[2])


def mode_index(grid: GridSpec, k: tuple[int, int, int]) -> tuple[int, int, int]:
    """Array index of mode k in FFT ordering."""
    n = grid.n_per_axis
    for ki in k:
        if abs(ki) > n // 2:
            raise ValueError(f"mode {k} outside lattice for n={n}")
    return tuple(ki % n for ki in k)


@lru_cache(maxsize=None)
def _xi_axes(n: int, box_length: float):
    """Angular wavenumbers along one axis, FFT order, as broadcastable arrays."""
    k = _fft.fftfreq(n, d=1.0 / n)  # 0, 1, ..., n/2-1, -n/2, ..., -1 (floats)
    xi = (TWO_PI / box_length) * k
    return (
        xi.reshape(n, 1, 1),
        xi.reshape(1, n, 1),
        xi.reshape(1, 1, n),
    )


@lru_cache(maxsize=None)
def _xi_sq(n: int, box_length: float):
    x1, x2, x3 = _xi_axes(n, box_length)
    return x1**2 + x2**2 + x3**2


@lru_cache(maxsize=None)
def _xi_h_sq(n: int, box_length: float):
    x1, x2, _ = _xi_axes(n, box_length)
    return x1**2 + x2**2


@lru_cache(maxsize=None)
def _ball_mask(n: int, box_length: float, radius: float):
    """Boolean mask of modes with |xi| < radius (strict)."""
    return _xi_sq(n, box_length) < radius * radius


def xi_arrays(grid: GridSpec):
    """The three broadcastable wavenumber arrays (xi_1, xi_2, xi_3)."""
    return _xi_axes(grid.n_per_axis, grid.box_length)


@dataclass(frozen=True)
class SpectralField:
    """Fourier coefficients of a 3-vector field, shape (3, n, n, n) complex.

    hermitian is a carried contract, not a per-construction check: True
    promises u_hat(-k) == conj(u_hat(k)) so the physical field is real.
    Use hermitian_defect() to audit a field when in doubt.
    """

    grid: GridSpec
    coeffs: np.ndarray
    hermitian: bool = True

    def __post_init__(self):
        n = self.grid.n_per_axis
        arr = np.asarray(self.coeffs, dtype=np.complex128)
        if arr.shape != (3, n, n, n):
            raise DimensionMismatchError(
                f"coefficient array has shape {arr.shape}, expected {(3, n, n, n)}"
            )
        object.__setattr__(self, "coeffs", arr)


@dataclass(frozen=True)
class PhysicalField:
    """Point values of a real 3-vector field, shape (3, n, n, n) float."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        n = self.grid.n_per_axis
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.shape != (3, n, n, n):
            raise DimensionMismatchError(
                f"value array has shape {arr.shape}, expected {(3, n, n, n)}"
            )
        object.__setattr__(self, "values", arr)


def _same_grid(a, b):
    if a.grid != b.grid:
        raise DimensionMismatchError(f"fields on different grids: {a.grid} vs {b.grid}")


def forward_transform(f: PhysicalField) -> SpectralField:
    """Physical values -> Fourier coefficients (quadrature of the integral transform)."""
    grid = f.grid
    coeffs = _fft.fftn(f.values, axes=(1, 2, 3), workers=_workers())
    coeffs *= grid.cell_volume
    return SpectralField(grid=grid, coeffs=coeffs, hermitian=True)


def inverse_transform(F: SpectralField) -> PhysicalField:
    """Fourier coefficients -> physical values.

    Requires a Hermitian field (the result must be real); the imaginary
    round-off residue of the inverse FFT is discarded.
    """
    if not F.hermitian:
        raise NonHermitianError(
            "inverse_transform requires hermitian coefficients (real field)"
        )
    grid = F.grid
    vals = _fft.ifftn(F.coeffs, axes=(1, 2, 3), workers=_workers())
    vals = vals.real * (grid.n_per_axis**3 / grid.volume)
    return PhysicalField(grid=grid, values=vals)


def conjugate_reflection(coeffs: np.ndarray) -> np.ndarray:
    """conj(c(-k)) on the FFT lattice; equals c(k) itself for a real field."""
    flipped = np.roll(coeffs[..., ::-1, ::-1, ::-1], shift=(1, 1, 1),
                      axis=(-3, -2, -1))
    return np.conj(flipped)


def hermitian_defect(F: SpectralField) -> float:
    """max_k |u_hat(-k) - conj(u_hat(k))|, zero for a genuinely real field."""
    return float(np.max(np.abs(conjugate_reflection(F.coeffs) - F.coeffs)))


def velocity_and_gradients(F: SpectralField):
    """Physical velocity and its nine spectral derivatives in one batch.

    Returns (u, (d1 u, d2 u, d3 u)); each entry is a PhysicalField whose
    values are the exact derivatives of the band-limited field sampled at
    the collocation points.
    """
    grid = F.grid
    n = grid.n_per_axis
    x1, x2, x3 = _xi_axes(n, grid.box_length)
    stacked = np.empty((3, 3, n, n, n), dtype=np.complex128)
    for i, xi in enumerate((x1, x2, x3)):
        stacked[i] = F.coeffs * (1j * xi)
    scale = n**3 / grid.volume
    vals = _fft.ifftn(stacked, axes=(2, 3, 4), workers=_workers()).real * scale
    u = inverse_transform(F)
    grads = tuple(PhysicalField(grid=grid, values=vals[i]) for i in range(3))
    return u, grads


def leray_project(F: SpectralField) -> SpectralField:
    """Project onto divergence-free fields: u_hat -= xi (xi . u_hat)/|xi|^2.

    The mean mode (xi = 0) passes through unchanged.
    """
    grid = F.grid
    x1, x2, x3 = _xi_axes(grid.n_per_axis, grid.box_length)
    xi_sq = _xi_sq(grid.n_per_axis, grid.box_length)
    c = F.coeffs
    dot = x1 * c[0] + x2 * c[1] + x3 * c[2]
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(xi_sq > 0.0, dot / np.where(xi_sq > 0.0, xi_sq, 1.0), 0.0)
    out = np.empty_like(c)
    out[0] = c[0] - x1 * scale
    out[1] = c[1] - x2 * scale
    out[2] = c[2] - x3 * scale
    return SpectralField(grid=grid, coeffs=out, hermitian=F.hermitian)


def friedrich_truncate(F: SpectralField, radius: float | None = None) -> SpectralField:
    """Zero every coefficient with |xi| >= radius (default: the grid's radius)."""
    grid = F.grid
    r = grid.friedrich_radius if radius is None else float(radius)
    if not (r > 0.0):
        raise ValueError(f"truncation radius must be positive, got {r}")
    mask = _ball_mask(grid.n_per_axis, grid.box_length, r)
    return SpectralField(grid=grid, coeffs=F.coeffs * mask, hermitian=F.hermitian)


def derivative(F: SpectralField, axis: int) -> SpectralField:
    """Spectral partial derivative along axis in {1, 2, 3}: multiply by i*xi_axis."""
    if axis not in (1, 2, 3):
        raise ValueError(f"axis must be 1, 2 or 3, got {axis}")
    grid = F.grid
    xi = _xi_axes(grid.n_per_axis, grid.box_length)[axis - 1]
    return SpectralField(grid=grid, coeffs=F.coeffs * (1j * xi), hermitian=F.hermitian)


def divergence(F: SpectralField) -> np.ndarray:
    """Spectral divergence sum_i i*xi_i u_hat_i, returned as a scalar coefficient array."""
    grid = F.grid
    x1, x2, x3 = _xi_axes(grid.n_per_axis, grid.box_length)
    c = F.coeffs
    return 1j * (x1 * c[0] + x2 * c[1] + x3 * c[2])


def l2_inner(F: SpectralField, G: SpectralField) -> float:
    """Real L^2 inner product integral f . g dx via Parseval."""
    _same_grid(F, G)
    s = np.sum(F.coeffs * np.conj(G.coeffs))
    return float(s.real) / F.grid.volume


def _norm_from_weight(F: SpectralField, weight) -> float:
    power = np.sum(weight * (F.coeffs.real**2 + F.coeffs.imag**2))
    return math.sqrt(float(power) / F.grid.volume)


def _check_zero_modes(F: SpectralField, mask, what: str):
    full = np.broadcast_to(mask, F.coeffs.shape[1:])
    bad = float(np.max(np.abs(F.coeffs[:, full]))) if np.any(full) else 0.0
    scale = float(np.max(np.abs(F.coeffs))) if F.coeffs.size else 0.0
    if bad > 1e-13 * max(scale, 1e-300):
        raise ValueError(
            f"negative-order homogeneous norm undefined: nonzero {what} "
            f"(magnitude {bad:.3g})"
        )


def sobolev_norm(F: SpectralField, s: float, homogeneous: bool = False) -> float:
    """Isotropic Sobolev norm of order s.

    Inhomogeneous weight (1 + |xi|^2)^s; homogeneous weight |xi|^(2s) with
    the mean mode excluded (for s < 0 the mean mode must vanish).
    s = 0 gives the plain L^2 norm in either flavor.
    """
    grid = F.grid
    xi_sq = _xi_sq(grid.n_per_axis, grid.box_length)
    if not homogeneous:
        return _norm_from_weight(F, (1.0 + xi_sq) ** s)
    if s == 0:
        return _norm_from_weight(F, 1.0)
    zero = xi_sq == 0.0
    if s < 0:
        _check_zero_modes(F, zero, "mean mode")
    w = np.where(zero, 1.0, xi_sq) ** s
    w = np.where(zero, 0.0, w)
    return _norm_from_weight(F, w)


def aniso_norm(
    F: SpectralField, s1: float, s2: float, homogeneous: bool = False
) -> float:
    """Anisotropic Sobolev norm: horizontal order s1, vertical order s2.

    Inhomogeneous weight (1 + |xi_h|^2)^s1 (1 + xi_3^2)^s2; the homogeneous
    variant uses |xi_h|^(2 s1) |xi_3|^(2 s2), excluding the zero planes
    (which must vanish when the corresponding order is negative).
    """
    grid = F.grid
    n, L = grid.n_per_axis, grid.box_length
    xi_h_sq = _xi_h_sq(n, L)
    xi3 = _xi_axes(n, L)[2]
    xi3_sq = xi3**2
    if not homogeneous:
        w = (1.0 + xi_h_sq) ** s1 * (1.0 + xi3_sq) ** s2
        return _norm_from_weight(F, w)

    def factor(sq, s, what):
        if s == 0:
            return np.ones_like(sq)
        zero = sq == 0.0
        if s < 0:
            _check_zero_modes(F, zero, what)
        w = np.where(zero, 1.0, sq) ** s
        return np.where(zero, 0.0, w)

    w = factor(xi_h_sq, s1, "horizontal mean plane") * factor(
        xi3_sq, s2, "vertical mean plane"
    )
    return _norm_from_weight(F, w)
