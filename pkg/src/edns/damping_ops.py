"""Pointwise exponential damping: the term, its dissipation functionals, solvers.

The damping force is alpha * (exp(beta*|u|^2) - 1) * u, evaluated pointwise
on the collocation grid.  expm1 is used throughout so the small-velocity
regime (beta*|u|^2 << 1) keeps full relative accuracy.

The dissipation functionals collected here are the integrands that appear
in the energy budgets:

    d0   = || (exp(beta|u|^2)-1) |u|^2      ||_L1
    d1   = || (exp(beta|u|^2)-1) |grad u|^2 ||_L1
    d2   = || exp(beta|u|^2) |grad(|u|^2)|^2 ||_L1
    d1_v = || (exp(beta|u|^2)-1) |d3 u|^2   ||_L1
    d2_v = || exp(beta|u|^2) (d3(|u|^2))^2  ||_L1

Integrals are equal-weight quadrature sums with weight (L/n)^3 (the
trapezoid rule on a periodic grid).  Gradients are expected as exact
spectral derivatives sampled at the collocation points, so grad(|u|^2)
is formed by the pointwise chain rule 2 * sum_j u_j grad u_j, which is
exact at the grid points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NewtonConvergenceError, OverflowGuardError
from .spectral_core import PhysicalField

# log of the largest finite double is about 709.78; stay under it.
_MAX_GUARD = math.log(np.finfo(np.float64).max)


@dataclass(frozen=True)
class DampingParams:
    """Damping strength alpha, exponential rate beta, and the overflow guard.

    Any point with beta*|u|^2 above overflow_guard is treated as detected
    blow-up rather than silently producing inf.  alpha = 0 switches the
    damping off entirely (plain Navier-Stokes), which the integrator uses
    as a reduction check.
    """

    alpha: float = 1.0
    beta: float = 1.0
    overflow_guard: float = 700.0

    def __post_init__(self):
        if self.alpha < 0.0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")
        if not (self.beta > 0.0):
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not (0.0 < self.overflow_guard < _MAX_GUARD):
            raise ValueError(
                f"overflow_guard must lie in (0, {_MAX_GUARD:.2f}), "
                f"got {self.overflow_guard}"
            )


@dataclass(frozen=True)
class DampingFunctionals:
    d0: float
    d1: float
    d2: float
    d1_v: float
    d2_v: float


def _speed_sq(u: PhysicalField) -> np.ndarray:
    v = u.values
    return v[0] * v[0] + v[1] * v[1] + v[2] * v[2]


def _guard_exponent(s_beta: np.ndarray, p: DampingParams):
    m = float(np.max(s_beta)) if s_beta.size else 0.0
    if not np.isfinite(m) or m > p.overflow_guard:
        raise OverflowGuardError(m, p.overflow_guard)


def damping_term(u: PhysicalField, p: DampingParams) -> PhysicalField:
    """alpha * (exp(beta|u|^2) - 1) * u, pointwise."""
    s = _speed_sq(u)
    _guard_exponent(p.beta * s, p)
    g = p.alpha * np.expm1(p.beta * s)
    return PhysicalField(grid=u.grid, values=g * u.values)


def damping_functionals(
    u: PhysicalField, grad_u: tuple[PhysicalField, PhysicalField, PhysicalField],
    p: DampingParams,
) -> DampingFunctionals:
    """All five dissipation functionals in one pass.

    grad_u = (d1 u, d2 u, d3 u), each a 3-vector field of spectral
    derivatives sampled on the grid.
    """
    s = _speed_sq(u)
    bs = p.beta * s
    _guard_exponent(bs, p)
    g1 = np.expm1(bs)
    g2 = np.exp(bs)
    w = u.grid.cell_volume

    grad_sq = np.zeros_like(s)
    for df in grad_u:
        gv = df.values
        grad_sq += gv[0] * gv[0] + gv[1] * gv[1] + gv[2] * gv[2]

    uv = u.values

    def pump(df):  # d(|u|^2) along one direction, by the pointwise chain rule
        gv = df.values
        return 2.0 * (uv[0] * gv[0] + uv[1] * gv[1] + uv[2] * gv[2])

    d3v = grad_u[2].values
    d3u_sq = d3v[0] * d3v[0] + d3v[1] * d3v[1] + d3v[2] * d3v[2]
    pump_sq = sum(pump(df) ** 2 for df in grad_u)
    pump3 = pump(grad_u[2])

    return DampingFunctionals(
        d0=float(np.sum(g1 * s)) * w,
        d1=float(np.sum(g1 * grad_sq)) * w,
        d2=float(np.sum(g2 * pump_sq)) * w,
        d1_v=float(np.sum(g1 * d3u_sq)) * w,
        d2_v=float(np.sum(g2 * pump3 * pump3)) * w,
    )


def series_check(u: PhysicalField, p: DampingParams, K: int):
    """Compare d0 against its Taylor partial sums.

    Pointwise, (exp(beta s)-1) s = sum_{k>=1} beta^k/k! s^(k+1), so

        d0 = sum_{k>=1} beta^k/k! * || |u| ||_{L^{2k+2}}^{2k+2}.

    Returns (direct, partial_sums) where partial_sums[j-1] holds the sum
    of the first j terms, j = 1..K.  Partial sums are nondecreasing and
    bounded above by the direct value (every term is nonnegative).
    """
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    s = _speed_sq(u)
    _guard_exponent(p.beta * s, p)
    w = u.grid.cell_volume
    direct = float(np.sum(np.expm1(p.beta * s) * s)) * w

    partial = np.empty(K, dtype=np.float64)
    coef = 1.0
    s_pow = s.copy()  # s^k, starting at k = 1
    total = 0.0
    for k in range(1, K + 1):
        coef *= p.beta / k
        total += coef * float(np.sum(s_pow * s)) * w
        partial[k - 1] = total
        if k < K:
            s_pow *= s
    return direct, partial


def implicit_damping_solve(
    u_star: PhysicalField, dt: float, p: DampingParams,
    tol: float = 1e-13, max_iter: int = 100,
) -> PhysicalField:
    """Solve u + dt * alpha * (exp(beta|u|^2)-1) u = u_star pointwise.

    The damping acts along the velocity direction, so the vector equation
    reduces per point to a scalar one for the magnitude m = |u|:

        m * (1 + dt * alpha * expm1(beta m^2)) = m_star,

    whose left side is strictly increasing and convex in m, giving a
    unique root in [0, m_star].  A Newton iteration started at m_star is
    monotone for this shape; a bisection bracket is kept as a safeguard
    and any Newton step leaving the bracket is replaced by its midpoint.
    Convergence is relative: |step| <= tol * m_star per point.

    The output is parallel to u_star with a ratio in [0, 1], so the
    solve never increases any pointwise speed (unconditionally
    dissipative).  dt = 0 or alpha = 0 returns u_star unchanged.
    """
    if dt < 0.0:
        raise ValueError(f"dt must be nonnegative, got {dt}")
    if dt == 0.0 or p.alpha == 0.0:
        return PhysicalField(grid=u_star.grid, values=u_star.values.copy())

    m_star = np.sqrt(_speed_sq(u_star))
    _guard_exponent(p.beta * m_star**2, p)

    c = dt * p.alpha
    beta = p.beta

    def phi_and_slope(m):
        e = np.expm1(beta * m * m)
        phi = m * (1.0 + c * e) - m_star
        slope = 1.0 + c * (e + 2.0 * beta * m * m * (e + 1.0))
        return phi, slope

    lo = np.zeros_like(m_star)
    hi = m_star.copy()
    m = m_star.copy()
    active = m_star > 0.0

    for _ in range(max_iter):
        phi, slope = phi_and_slope(m)
        step = phi / slope
        m_new = m - step
        outside = (m_new < lo) | (m_new > hi)
        m_new = np.where(outside, 0.5 * (lo + hi), m_new)
        # maintain the bracket from the sign of phi at the new iterate
        phi_new, _ = phi_and_slope(m_new)
        lo = np.where(phi_new < 0.0, m_new, lo)
        hi = np.where(phi_new >= 0.0, m_new, hi)
        moved = np.abs(m_new - m)
        m = m_new
        active = active & (moved > tol * m_star)
        if not bool(np.any(active)):
            break
    else:
        raise NewtonConvergenceError(
            f"implicit damping solve did not converge in {max_iter} iterations "
            f"({int(np.sum(active))} points still active)"
        )

    ratio = np.where(m_star > 0.0, m / np.where(m_star > 0.0, m_star, 1.0), 0.0)
    return PhysicalField(grid=u_star.grid, values=u_star.values * ratio)
