"""Shared builders and independently-coded reference oracles.

The oracles here implement the defining formulas directly (explicit DFT
summation, explicit convolution sums, scalar bisection) so the fast
production paths are checked against code that shares none of their
machinery.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from edns import (
    GridSpec,
    PhysicalField,
    SpectralField,
    forward_transform,
    sobolev_norm,
)

TWO_PI = 2.0 * math.pi


def make_grid(n: int = 8, L: float = TWO_PI, radius: float | None = None) -> GridSpec:
    if radius is None:
        return GridSpec(n_per_axis=n, box_length=L)
    return GridSpec(n_per_axis=n, box_length=L, friedrich_radius=radius)


def random_physical(grid: GridSpec, seed: int, scale: float = 1.0) -> PhysicalField:
    rng = np.random.default_rng(seed)
    n = grid.n_per_axis
    return PhysicalField(grid=grid, values=scale * rng.standard_normal((3, n, n, n)))


def random_spectral(grid: GridSpec, seed: int, scale: float = 1.0) -> SpectralField:
    # forward transform of a real field is Hermitian by construction
    return forward_transform(random_physical(grid, seed, scale))


def mode_index(n: int, k: int) -> int:
    return k % n


def single_mode(grid: GridSpec, k: tuple[int, int, int], c) -> SpectralField:
    """Hermitian field with coefficient c at k and conj(c) at -k (3-vector c)."""
    n = grid.n_per_axis
    coeffs = np.zeros((3, n, n, n), dtype=np.complex128)
    i = tuple(mode_index(n, ki) for ki in k)
    j = tuple(mode_index(n, -ki) for ki in k)
    coeffs[(slice(None),) + i] = np.asarray(c, dtype=np.complex128)
    coeffs[(slice(None),) + j] += np.conj(np.asarray(c, dtype=np.complex128))
    return SpectralField(grid=grid, coeffs=coeffs, hermitian=True)


def field_dist(F: SpectralField, G: SpectralField) -> float:
    diff = SpectralField(grid=F.grid, coeffs=F.coeffs - G.coeffs, hermitian=True)
    return sobolev_norm(diff, 0.0)


def brute_dft(values: np.ndarray, L: float) -> np.ndarray:
    """Direct O(n^6) evaluation of u_hat(k) = (L/n)^3 sum_x u(x) e^{-i xi_k . x}.

    Output is laid out in FFT storage order; feasible for n = 4 only.
    """
    n = values.shape[-1]
    x = np.arange(n) * (L / n)
    kfreq = np.fft.fftfreq(n, d=1.0 / n)
    out = np.zeros(values.shape, dtype=np.complex128)
    w = (L / n) ** 3
    for i1, k1 in enumerate(kfreq):
        for i2, k2 in enumerate(kfreq):
            for i3, k3 in enumerate(kfreq):
                phase = np.exp(
                    -1j * (TWO_PI / L) * (
                        k1 * x[:, None, None]
                        + k2 * x[None, :, None]
                        + k3 * x[None, None, :]
                    )
                )
                out[..., i1, i2, i3] = w * np.sum(values * phase, axis=(-3, -2, -1))
    return out


def convolution_advection(F: SpectralField) -> SpectralField:
    """Direct convolution-sum evaluation of -P 1_{|xi|<R} (u . grad u)^hat.

    (u_m d_m u_j)^(k) = (1/L^3) sum_{p+q=k} u_m(p) (i xi_m(q)) u_j(q),
    summed over the exact integer lattice (no wraparound): inside the
    truncation ball the dealiased pseudo-spectral product must agree with
    this sum to round-off.
    """
    grid = F.grid
    n, L = grid.n_per_axis, grid.box_length
    kf = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    support = np.argwhere(np.any(np.abs(F.coeffs) > 0.0, axis=0))
    conv = np.zeros_like(F.coeffs)
    two_pi_L = TWO_PI / L
    half = n // 2
    for ip in support:
        up = F.coeffs[:, ip[0], ip[1], ip[2]]
        kp = np.array([kf[ip[0]], kf[ip[1]], kf[ip[2]]])
        for iq in support:
            uq = F.coeffs[:, iq[0], iq[1], iq[2]]
            kq = np.array([kf[iq[0]], kf[iq[1]], kf[iq[2]]])
            ks = kp + kq
            if np.any(ks < -half) or np.any(ks > half - 1):
                continue
            xi_q = two_pi_L * kq
            scal = 1j * (up @ xi_q)
            idx = tuple(int(v) % n for v in ks)
            conv[(slice(None),) + idx] += scal * uq / L**3
    # truncation mask and divergence-free projection, from the definitions
    xi = [two_pi_L * kf.reshape([-1 if a == d else 1 for a in range(3)])
          for d in range(3)]
    xi_sq = xi[0] ** 2 + xi[1] ** 2 + xi[2] ** 2
    mask = np.sqrt(xi_sq) < grid.friedrich_radius
    conv *= mask
    dot = xi[0] * conv[0] + xi[1] * conv[1] + xi[2] * conv[2]
    denom = np.where(xi_sq > 0.0, xi_sq, 1.0)
    proj = conv - np.stack([xi[d] * dot / denom for d in range(3)])
    proj[:, 0, 0, 0] = conv[:, 0, 0, 0]
    return SpectralField(grid=grid, coeffs=-proj, hermitian=True)


@pytest.fixture
def grid8() -> GridSpec:
    return make_grid(8)


@pytest.fixture
def grid16() -> GridSpec:
    return make_grid(16)
