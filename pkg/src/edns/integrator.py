"""Time integration of the damped Navier-Stokes system on the periodic box.

The integrated system is the spectrally truncated

    d/dt u_hat = -(nu_h |xi_h|^2 + nu_3 xi_3^2) u_hat
                 - P J [ u . grad u + alpha (exp(beta|u|^2) - 1) u ]^hat

where P is the divergence-free projection and J the low-pass/dealias mask.
The pressure acts through P on the full nonlinearity, damping included,
exactly as in the truncated system the energy estimates are proved for.

One step is an integrating-factor midpoint rule (scheme id "IFRK2"): the
viscous semigroup is applied exactly through its diagonal exponential
symbol, and the projected nonlinearity (advection plus damping) is
advanced by the explicit midpoint rule inside that frame:

    k1 = N(u_n)
    u_mid = E(dt/2) (u_n + dt/2 k1)
    u_{n+1} = E(dt) u_n + dt E(dt/2) N(u_mid)

with E(s) = exp(-s (nu_h |xi_h|^2 + nu_3 xi_3^2)).  The step is closed by
a divergence-free re-projection and low-pass truncation (numerical
hygiene; both are already invariants of the stage function).  The rule is
second order in dt, and the automatic step size keeps the explicit
damping stage well inside its stability region via the cap
dt <= cfl_safety / (alpha beta) * exp(-beta max|u|^2).

A pointwise implicit treatment of the damping alone is deliberately not
composed around this step: the damping direction is not divergence-free,
so a split damping substep bypasses the pressure and caps the observable
convergence at first order.  The implicit pointwise solver lives in
damping_ops and remains available for stiff standalone experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .damping_ops import DampingParams, damping_term
from .errors import BlowUpError, OverflowGuardError
from .spectral_core import (
    GridSpec,
    PhysicalField,
    SpectralField,
    _ball_mask,
    _xi_axes,
    _xi_h_sq,
    conjugate_reflection,
    forward_transform,
    friedrich_truncate,
    inverse_transform,
    leray_project,
    sobolev_norm,
    velocity_and_gradients,
)

DT_FLOOR = 1e-12


@dataclass(frozen=True)
class FluidParams:
    """Viscosities (horizontal nu_h, vertical nu_3) and the damping parameters."""

    nu_h: float = 1.0
    nu_3: float = 1.0
    damping: DampingParams = DampingParams()

    def __post_init__(self):
        if not (self.nu_h > 0.0):
            raise ValueError(f"nu_h must be positive, got {self.nu_h}")
        if self.nu_3 < 0.0:
            raise ValueError(f"nu_3 must be nonnegative, got {self.nu_3}")

    @property
    def isotropic(self) -> bool:
        return self.nu_h == self.nu_3


@dataclass(frozen=True)
class StepperConfig:
    """Step-size policy.

    dt is a fixed positive value, or "auto" to take the explicit-stage
    stability bound (cfl_dt) capped by the accuracy ceiling dt_max each
    step.  A fixed dt is used as given.
    """

    dt: float | str = "auto"
    cfl_safety: float = 0.5
    scheme: str = "IFRK2"
    dt_max: float = 1e-2

    def __post_init__(self):
        if isinstance(self.dt, str):
            if self.dt != "auto":
                raise ValueError(f'dt must be a positive number or "auto", got {self.dt!r}')
        elif not (self.dt > 0.0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (0.0 < self.cfl_safety <= 1.0):
            raise ValueError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if self.scheme != "IFRK2":
            raise ValueError(f"unknown scheme {self.scheme!r} (supported: IFRK2)")
        if not (self.dt_max > 0.0):
            raise ValueError(f"dt_max must be positive, got {self.dt_max}")


@dataclass(frozen=True)
class SimulationState:
    t: float
    u_hat: SpectralField
    step_index: int = 0


# ---------------------------------------------------------------------------
# initial conditions

def taylor_green(grid: GridSpec, amplitude: float = 1.0) -> SpectralField:
    """Taylor-Green vortex scaled to the box period.

    u = A ( sin t1 cos t2 cos t3, -cos t1 sin t2 cos t3, 0 ) with
    t_i = 2 pi x_i / L.  Exactly divergence-free; kinetic energy
    ||u||_{L^2}^2 = A^2 L^3 / 4.
    """
    n = grid.n_per_axis
    theta = 2.0 * math.pi * np.arange(n) / n
    s1, c1 = np.sin(theta).reshape(n, 1, 1), np.cos(theta).reshape(n, 1, 1)
    s2, c2 = np.sin(theta).reshape(1, n, 1), np.cos(theta).reshape(1, n, 1)
    c3 = np.cos(theta).reshape(1, 1, n)
    vals = np.empty((3, n, n, n))
    vals[0] = amplitude * s1 * c2 * c3
    vals[1] = -amplitude * c1 * s2 * c3
    vals[2] = 0.0
    return forward_transform(PhysicalField(grid=grid, values=vals))


def random_divfree(
    grid: GridSpec, seed: int, spectrum_slope: float = 0.0,
    band: tuple[int, int] = (1, 4),
) -> SpectralField:
    """Random divergence-free field supported on integer shells band[0] <= |k| <= band[1].

    Coefficients are complex Gaussian, conjugate-symmetrized, shaped by
    |k|^spectrum_slope, projected divergence-free, low-pass truncated, and
    normalized to unit L^2 norm.  Deterministic in the seed.
    """
    lo, hi = band
    if not (0 < lo <= hi):
        raise ValueError(f"band must satisfy 0 < lo <= hi, got {band}")
    n = grid.n_per_axis
    rng = np.random.default_rng(seed)
    c = rng.standard_normal((3, n, n, n)) + 1j * rng.standard_normal((3, n, n, n))
    c = 0.5 * (c + conjugate_reflection(c))

    k = np.fft.fftfreq(n, d=1.0 / n)
    kk = np.sqrt(
        k.reshape(n, 1, 1) ** 2 + k.reshape(1, n, 1) ** 2 + k.reshape(1, 1, n) ** 2
    )
    shell = (kk >= lo) & (kk <= hi)
    weight = np.where(shell, np.where(kk > 0.0, kk, 1.0) ** spectrum_slope, 0.0)
    c *= weight

    F = friedrich_truncate(
        leray_project(SpectralField(grid=grid, coeffs=c, hermitian=True))
    )
    norm = sobolev_norm(F, 0.0)
    if norm <= 0.0:
        raise ValueError(
            f"band {band} leaves no energy inside the truncation radius "
            f"{grid.friedrich_radius:.6g}"
        )
    return SpectralField(grid=grid, coeffs=F.coeffs / norm, hermitian=True)


def perturb(u: SpectralField, delta: float, seed: int) -> SpectralField:
    """u plus delta times a unit-norm random divergence-free field.

    The perturbed field is exactly delta away from u in L^2.
    delta = 0 returns an identical copy.
    """
    if delta < 0.0:
        raise ValueError(f"delta must be nonnegative, got {delta}")
    if delta == 0.0:
        return SpectralField(grid=u.grid, coeffs=u.coeffs.copy(),
                             hermitian=u.hermitian)
    noise = random_divfree(u.grid, seed, spectrum_slope=0.0, band=(1, 4))
    return SpectralField(grid=u.grid, coeffs=u.coeffs + delta * noise.coeffs,
                         hermitian=u.hermitian)


# ---------------------------------------------------------------------------
# right-hand side

def _projected_rhs(u_hat: SpectralField, damping: DampingParams | None) -> SpectralField:
    """-P J (u . grad u [+ damping]) evaluated pseudo-spectrally."""
    grid = u_hat.grid
    u, grads = velocity_and_gradients(u_hat)
    if not np.all(np.isfinite(u.values)):
        raise BlowUpError("non-finite physical velocity values")
    uv = u.values
    total = np.empty_like(uv)
    for j in range(3):
        total[j] = (
            uv[0] * grads[0].values[j]
            + uv[1] * grads[1].values[j]
            + uv[2] * grads[2].values[j]
        )
    if damping is not None and damping.alpha > 0.0:
        total += damping_term(u, damping).values

    G = forward_transform(PhysicalField(grid=grid, values=total))
    mask = _ball_mask(grid.n_per_axis, grid.box_length, grid.friedrich_radius)
    masked = SpectralField(grid=grid, coeffs=G.coeffs * mask, hermitian=True)
    projected = leray_project(masked)
    return SpectralField(grid=grid, coeffs=-projected.coeffs, hermitian=True)


def nonlinear_term(u_hat: SpectralField) -> SpectralField:
    """Dealiased, divergence-free-projected advection term -P J (u . grad u)."""
    return _projected_rhs(u_hat, damping=None)


# ---------------------------------------------------------------------------
# stepping

def _viscous_symbol(grid: GridSpec, params: FluidParams) -> np.ndarray:
    n, L = grid.n_per_axis, grid.box_length
    xi3 = _xi_axes(n, L)[2]
    return params.nu_h * _xi_h_sq(n, L) + params.nu_3 * xi3**2


def cfl_dt(state: SimulationState, params: FluidParams, cfg: StepperConfig) -> float:
    """Stability bound on the step size from the explicit stages.

    Advective bound cfl_safety * dx / max|u|, further capped by
    cfl_safety/(alpha beta) * exp(-beta max|u|^2) so the explicitly
    integrated damping stays accurate and stable.  A zero field has no
    explicit-stage constraint and gets dt_max.  Viscosity needs no bound
    (the exponential factor is exact).  A result below 1e-12 is treated
    as blow-up.  The dt_max accuracy ceiling is applied by resolve_dt,
    not here.
    """
    grid = state.u_hat.grid
    u = inverse_transform(state.u_hat)
    v = u.values
    speed_sq = float(np.max(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]))
    if not np.isfinite(speed_sq):
        raise BlowUpError("non-finite velocity in step-size control",
                          last_state=state)
    vmax = math.sqrt(speed_sq)
    if vmax == 0.0:
        return cfg.dt_max

    dt = cfg.cfl_safety * grid.dx / vmax
    d = params.damping
    if d.alpha > 0.0:
        exponent = d.beta * speed_sq
        cap = 0.0 if exponent > 700.0 else (
            cfg.cfl_safety / (d.alpha * d.beta) * math.exp(-exponent)
        )
        dt = min(dt, cap)
    if dt < DT_FLOOR:
        raise BlowUpError(
            f"step size collapsed to {dt:.3g} (max speed {vmax:.3g})",
            last_state=state,
        )
    return dt


def _advance(state: SimulationState, params: FluidParams, dt: float) -> SimulationState:
    grid = state.u_hat.grid
    sym = _viscous_symbol(grid, params)
    e_half = np.exp(-0.5 * dt * sym)
    damping = params.damping
    try:
        k1 = _projected_rhs(state.u_hat, damping)
        mid = SpectralField(
            grid=grid,
            coeffs=e_half * (state.u_hat.coeffs + 0.5 * dt * k1.coeffs),
            hermitian=True,
        )
        k2 = _projected_rhs(mid, damping)
    except OverflowGuardError as exc:
        raise BlowUpError(str(exc), last_state=state) from exc
    except BlowUpError as exc:
        raise BlowUpError(str(exc), last_state=state) from exc

    new = e_half * e_half * state.u_hat.coeffs + dt * e_half * k2.coeffs
    out = friedrich_truncate(
        leray_project(SpectralField(grid=grid, coeffs=new, hermitian=True))
    )
    return SimulationState(t=state.t + dt, u_hat=out,
                           step_index=state.step_index + 1)


def resolve_dt(state: SimulationState, params: FluidParams,
               cfg: StepperConfig) -> float:
    """Step size for the next step: the stability bound under the dt_max
    accuracy ceiling in auto mode, the configured value otherwise."""
    if cfg.dt == "auto":
        return min(cfl_dt(state, params, cfg), cfg.dt_max)
    return float(cfg.dt)


def step(state: SimulationState, params: FluidParams,
         cfg: StepperConfig) -> SimulationState:
    """Advance one step of size cfg.dt (or the automatic bound)."""
    return _advance(state, params, resolve_dt(state, params, cfg))


def prepare_initial_state(u0: SpectralField) -> SimulationState:
    """Clean an initial field (low-pass + divergence-free) and wrap it at t = 0."""
    clean = leray_project(friedrich_truncate(u0))
    return SimulationState(t=0.0, u_hat=clean, step_index=0)


def run(u0: SpectralField, params: FluidParams, cfg: StepperConfig,
        t_end: float, sample_every: int = 1, t_start: float = 0.0):
    """Integrate from t_start (default 0) to t_end; returns (rows, final state).

    A ledger row is recorded internally at every step so the running
    integrals keep single-step trapezoid accuracy; the returned rows are
    the samples (every sample_every steps, plus the initial time and the
    final time).  Running integrals start at zero at t_start.  On
    detected blow-up the error carries the rows collected so far and the
    last valid state.
    """
    from .energy_ledger import record

    if not (t_end > t_start):
        raise ValueError(f"t_end must exceed t_start, got {t_end} <= {t_start}")
    if sample_every < 1:
        raise ValueError(f"sample_every must be >= 1, got {sample_every}")

    clean = leray_project(friedrich_truncate(u0))
    state = SimulationState(t=t_start, u_hat=clean, step_index=0)
    prev = record(state, params, None)
    emitted = [prev]
    eps = 1e-12 * max(abs(t_end), 1.0)
    while state.t < t_end - eps:
        try:
            dt = min(resolve_dt(state, params, cfg), t_end - state.t)
            state = _advance(state, params, dt)
        except BlowUpError as exc:
            raise BlowUpError(str(exc), last_state=exc.last_state or state,
                              rows=emitted) from exc
        row = record(state, params, prev)
        prev = row
        done = state.t >= t_end - eps
        if done or state.step_index % sample_every == 0:
            emitted.append(row)
    return emitted, state
