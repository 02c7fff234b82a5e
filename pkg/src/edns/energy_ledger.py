"""Energy bookkeeping and the a priori inequality checks.

Every step of a run is reduced to one LedgerRow: the time, six squared
norms, the five damping dissipation functionals, and running trapezoid
integrals of all eleven quantities.  The verifiers below consume rows
(live or re-read from CSV) and score each inequality by its worst
relative margin

    rel_margin = (RHS - LHS) / max(RHS, 1e-30)

over the sampled times; a check passes when rel_margin >= -tol.  The
default tol = 1e-3 absorbs time-discretization and quadrature error of a
second-order run at sane step sizes.

Checked inequalities (ids in INEQUALITY_IDS):

  EQTH1   ||u(t)||^2 + 2 int (nu_h ||grad_h u||^2 + nu_3 ||d3 u||^2)
                     + 2 alpha int d0                     <= ||u0||^2
  EQTH2   ||grad u(t)||^2 + int ||lap u||^2 + alpha beta int d2
                     + alpha int d1    <= ||grad u0||^2 exp(t/(alpha beta^2))
  EQTH3   same LHS <= ||grad u0||^2 + ||u0||^2/(alpha beta^2)
  EQTH21  the EQTH1 budget read on a nu_3 = 0 run
  EQTH22  ||d3 u(t)||^2 + int ||grad_h d3 u||^2 + alpha int d1_v
                     + alpha beta int d2_v
                                 <= ||d3 u0||^2 exp(6 t/(alpha beta^2))
  STABILITY_ISO  ||u - v||^2(t) <= delta^2 exp(18 t/(alpha beta^2))
  CONTINUITY     adjacent-sample norm increments stay Lipschitz and jump-free

EQTH1/EQTH21 use the viscosity-weighted dissipation, which reduces
verbatim to the unit-viscosity statements on the runs they are proved
for and stays an exact budget for every other viscosity pair.  EQTH2 and
EQTH3 are only meaningful at nu_h = nu_3 = 1 and EQTH22 at nu_h = 1,
nu_3 = 0; the verifiers enforce those preconditions.

CSV layout: '#'-prefixed "key = value" metadata lines (grid, viscosities,
damping parameters, enabled checks), one fixed header row, then one data
row per sample with every float printed to 17 significant digits so a
re-read reproduces the verdicts bit-exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields as dc_fields

import numpy as np

from .damping_ops import DampingFunctionals, damping_functionals
from .errors import EdnsError
from .integrator import (
    FluidParams,
    SimulationState,
    StepperConfig,
    _advance,
    perturb,
    prepare_initial_state,
    resolve_dt,
)
from .spectral_core import (
    SpectralField,
    _xi_axes,
    _xi_h_sq,
    _xi_sq,
    sobolev_norm,
    velocity_and_gradients,
)

INEQUALITY_IDS = (
    "EQTH1", "EQTH2", "EQTH3", "EQTH21", "EQTH22", "STABILITY_ISO", "CONTINUITY",
)

_EPS_DENOM = 1e-30
DEFAULT_TOL = 1e-3

CSV_COLUMNS = (
    "t",
    "l2_sq", "grad_sq", "grad_h_sq", "d3_sq", "lap_sq", "grad_h_d3_sq",
    "d0", "d1", "d2", "d1_v", "d2_v",
    "cum_l2_sq", "cum_grad_sq", "cum_grad_h_sq", "cum_d3_sq", "cum_lap_sq",
    "cum_grad_h_d3_sq", "cum_d0", "cum_d1", "cum_d2", "cum_d1_v", "cum_d2_v",
)


@dataclass(frozen=True)
class CumulativeIntegrals:
    """Trapezoid integrals int_0^t of each instantaneous ledger quantity."""

    l2_sq: float = 0.0
    grad_sq: float = 0.0
    grad_h_sq: float = 0.0
    d3_sq: float = 0.0
    lap_sq: float = 0.0
    grad_h_d3_sq: float = 0.0
    d0: float = 0.0
    d1: float = 0.0
    d2: float = 0.0
    d1_v: float = 0.0
    d2_v: float = 0.0


@dataclass(frozen=True)
class LedgerRow:
    t: float
    l2_sq: float
    grad_sq: float
    grad_h_sq: float
    d3_sq: float
    lap_sq: float
    grad_h_d3_sq: float
    damping: DampingFunctionals
    cum: CumulativeIntegrals


@dataclass(frozen=True)
class MarginReport:
    """Worst-case score of one inequality over a run."""

    inequality_id: str
    worst_t: float
    lhs: float
    rhs: float
    rel_margin: float
    passed: bool
    tol: float
    fitted_exponent: float | None = None
    flagged: tuple[float, ...] = ()


def _weighted_power(F: SpectralField, weight) -> float:
    c = F.coeffs
    return float(np.sum(weight * (c.real**2 + c.imag**2))) / F.grid.volume


def record(state: SimulationState, params: FluidParams,
           prev: LedgerRow | None) -> LedgerRow:
    """Reduce one state to a ledger row, chaining the running integrals.

    prev must be the row of the immediately preceding recorded time (or
    None at t = 0); the cumulative integrals advance by one trapezoid
    panel between the two rows.
    """
    F = state.u_hat
    grid = F.grid
    n, L = grid.n_per_axis, grid.box_length
    xi_sq = _xi_sq(n, L)
    xi_h_sq = _xi_h_sq(n, L)
    xi3_sq = _xi_axes(n, L)[2] ** 2

    u, grads = velocity_and_gradients(F)
    damp = damping_functionals(u, grads, params.damping)

    row_wo_cum = dict(
        t=state.t,
        l2_sq=_weighted_power(F, 1.0),
        grad_sq=_weighted_power(F, xi_sq),
        grad_h_sq=_weighted_power(F, xi_h_sq),
        d3_sq=_weighted_power(F, xi3_sq),
        lap_sq=_weighted_power(F, xi_sq**2),
        grad_h_d3_sq=_weighted_power(F, xi_h_sq * xi3_sq),
    )

    if prev is None:
        cum = CumulativeIntegrals()
    else:
        dt = state.t - prev.t
        if dt <= 0.0:
            raise ValueError(
                f"ledger times must increase: {prev.t} -> {state.t}"
            )

        def panel(name, now_val, prev_val):
            return getattr(prev.cum, name) + 0.5 * dt * (prev_val + now_val)

        cum = CumulativeIntegrals(
            l2_sq=panel("l2_sq", row_wo_cum["l2_sq"], prev.l2_sq),
            grad_sq=panel("grad_sq", row_wo_cum["grad_sq"], prev.grad_sq),
            grad_h_sq=panel("grad_h_sq", row_wo_cum["grad_h_sq"], prev.grad_h_sq),
            d3_sq=panel("d3_sq", row_wo_cum["d3_sq"], prev.d3_sq),
            lap_sq=panel("lap_sq", row_wo_cum["lap_sq"], prev.lap_sq),
            grad_h_d3_sq=panel("grad_h_d3_sq", row_wo_cum["grad_h_d3_sq"],
                               prev.grad_h_d3_sq),
            d0=panel("d0", damp.d0, prev.damping.d0),
            d1=panel("d1", damp.d1, prev.damping.d1),
            d2=panel("d2", damp.d2, prev.damping.d2),
            d1_v=panel("d1_v", damp.d1_v, prev.damping.d1_v),
            d2_v=panel("d2_v", damp.d2_v, prev.damping.d2_v),
        )

    return LedgerRow(damping=damp, cum=cum, **row_wo_cum)


# ---------------------------------------------------------------------------
# inequality verifiers

def _scan(inequality_id: str, rows, lhs_fn, rhs_fn, tol: float,
          fitted_exponent=None) -> MarginReport:
    if not rows:
        raise ValueError("empty ledger")
    worst = None
    for row in rows:
        lhs = lhs_fn(row)
        rhs = rhs_fn(row)
        rel = (rhs - lhs) / max(rhs, _EPS_DENOM)
        if worst is None or rel < worst[0]:
            worst = (rel, row.t, lhs, rhs)
    rel, t, lhs, rhs = worst
    return MarginReport(
        inequality_id=inequality_id, worst_t=t, lhs=lhs, rhs=rhs,
        rel_margin=rel, passed=bool(rel >= -tol), tol=tol,
        fitted_exponent=fitted_exponent,
    )


def _energy_budget_lhs(params: FluidParams):
    a = params.damping.alpha

    def lhs(row):
        return (row.l2_sq
                + 2.0 * (params.nu_h * row.cum.grad_h_sq
                         + params.nu_3 * row.cum.d3_sq)
                + 2.0 * a * row.cum.d0)

    return lhs


def verify_eqth1(rows, u0_l2_sq: float, params: FluidParams,
                 tol: float = DEFAULT_TOL) -> MarginReport:
    """Kinetic energy budget: dissipation accumulates below the initial energy."""
    return _scan("EQTH1", rows, _energy_budget_lhs(params),
                 lambda row: u0_l2_sq, tol)


def verify_eqth21(rows, u0_l2_sq: float, params: FluidParams,
                  tol: float = DEFAULT_TOL) -> MarginReport:
    """The EQTH1 budget read on a vanishing-vertical-viscosity run."""
    return _scan("EQTH21", rows, _energy_budget_lhs(params),
                 lambda row: u0_l2_sq, tol)


def _require(cond: bool, what: str):
    if not cond:
        raise ValueError(what)


def _grad_budget_lhs(params: FluidParams):
    a, b = params.damping.alpha, params.damping.beta

    def lhs(row):
        return (row.grad_sq + row.cum.lap_sq
                + a * b * row.cum.d2 + a * row.cum.d1)

    return lhs


def verify_eqth2(rows, grad_u0_sq: float, params: FluidParams,
                 tol: float = DEFAULT_TOL) -> MarginReport:
    """Gradient budget against the exponentially inflated initial enstrophy."""
    _require(params.nu_h == 1.0 and params.nu_3 == 1.0,
             "the gradient budget is proved at unit isotropic viscosity")
    a, b = params.damping.alpha, params.damping.beta
    _require(a > 0.0, "the gradient budget needs alpha > 0")
    rate = 1.0 / (a * b * b)
    return _scan("EQTH2", rows, _grad_budget_lhs(params),
                 lambda row: grad_u0_sq * math.exp(rate * row.t), tol)


def verify_eqth3(rows, u0: SpectralField, params: FluidParams,
                 tol: float = DEFAULT_TOL) -> MarginReport:
    """Gradient budget against the time-independent damping-aware bound."""
    _require(params.nu_h == 1.0 and params.nu_3 == 1.0,
             "the gradient budget is proved at unit isotropic viscosity")
    a, b = params.damping.alpha, params.damping.beta
    _require(a > 0.0, "the gradient budget needs alpha > 0")
    grad_u0_sq = sobolev_norm(u0, 1.0, homogeneous=True) ** 2
    u0_l2_sq = sobolev_norm(u0, 0.0) ** 2
    bound = grad_u0_sq + u0_l2_sq / (a * b * b)
    return _scan("EQTH3", rows, _grad_budget_lhs(params),
                 lambda row: bound, tol)


def _fit_exponent(rows) -> float | None:
    ts = np.array([row.t for row in rows])
    vals = np.array([row.d3_sq for row in rows])
    ok = vals > 0.0
    if int(np.sum(ok)) < 2:
        return None
    return float(np.polyfit(ts[ok], np.log(vals[ok]), 1)[0])


def verify_eqth22(rows, d3_u0_sq: float, params: FluidParams,
                  tol: float = DEFAULT_TOL) -> MarginReport:
    """Vertical-derivative budget for the horizontal-viscosity-only system.

    Also fits the empirical exponential rate of ||d3 u||^2 over the run
    (reported, not scored) for comparison with the stated rate
    6/(alpha beta^2).
    """
    _require(params.nu_h == 1.0 and params.nu_3 == 0.0,
             "the vertical budget is proved at nu_h = 1, nu_3 = 0")
    a, b = params.damping.alpha, params.damping.beta
    _require(a > 0.0, "the vertical budget needs alpha > 0")
    rate = 6.0 / (a * b * b)

    def lhs(row):
        return (row.d3_sq + row.cum.grad_h_d3_sq
                + a * row.cum.d1_v + a * b * row.cum.d2_v)

    return _scan("EQTH22", rows, lhs,
                 lambda row: d3_u0_sq * math.exp(rate * row.t), tol,
                 fitted_exponent=_fit_exponent(rows))


def stability_experiment(
    u0: SpectralField, delta: float, seed: int, params: FluidParams,
    cfg: StepperConfig, t_end: float, sample_every: int = 1,
    tol: float = 0.0,
) -> MarginReport:
    """Advance u0 and a delta-perturbation in lockstep; score the drift bound.

    The two trajectories share the step size (the smaller of their
    automatic bounds) so their difference is sampled at common times.
    The bound ||u - v||^2 <= delta^2 exp(18 t/(alpha beta^2)) is scored
    strictly by default (tol = 0): it holds with a wide margin wherever
    it is proved, so quadrature slack is not needed.

    At t = 0 both sides equal delta^2 by construction (perturb separates
    by exactly delta), so that sample is recorded as the designed value;
    recomputing it in floats would score rounding noise against an exact
    tie.  The perturbed start is not re-projected either: perturb of a
    clean field is already clean, and a redundant projection would break
    the bitwise u = v identity of the delta = 0 case.
    """
    _require(params.isotropic,
             "the pairwise stability bound is isotropic-only")
    a, b = params.damping.alpha, params.damping.beta
    _require(a > 0.0, "the pairwise stability bound needs alpha > 0")
    rate = 18.0 / (a * b * b)

    su = prepare_initial_state(u0)
    sv = SimulationState(t=0.0, u_hat=perturb(su.u_hat, delta, seed),
                         step_index=0)

    def w2(x: SimulationState, y: SimulationState) -> float:
        diff = SpectralField(grid=x.u_hat.grid,
                             coeffs=x.u_hat.coeffs - y.u_hat.coeffs,
                             hermitian=True)
        return sobolev_norm(diff, 0.0) ** 2

    samples = [(0.0, delta * delta)]
    eps = 1e-12 * max(t_end, 1.0)
    while su.t < t_end - eps:
        dt = min(resolve_dt(su, params, cfg), resolve_dt(sv, params, cfg),
                 t_end - su.t)
        su = _advance(su, params, dt)
        sv = _advance(sv, params, dt)
        if su.t >= t_end - eps or su.step_index % sample_every == 0:
            samples.append((su.t, w2(su, sv)))

    d2 = delta * delta
    worst = None
    for t, val in samples:
        bound = d2 * math.exp(rate * t)
        rel = (bound - val) / max(bound, _EPS_DENOM)
        if worst is None or rel < worst[0]:
            worst = (rel, t, val, bound)
    rel, t, val, bound = worst
    return MarginReport(
        inequality_id="STABILITY_ISO", worst_t=t, lhs=val, rhs=bound,
        rel_margin=rel, passed=bool(rel >= -tol), tol=tol,
    )


def continuity_check(rows, params: FluidParams,
                     tol: float = DEFAULT_TOL,
                     jump_factor: float = 10.0) -> MarginReport:
    """Norm continuity in time: Lipschitz slope bound plus jump detection.

    The admissible slope is 1.5x the initial dissipation rate
    (nu_h ||grad_h u||^2 + nu_3 ||d3 u||^2 + alpha d0) / ||u|| -- the
    exact initial value of -d||u||/dt, with headroom for transient
    steepening.  Any adjacent-sample increment exceeding jump_factor
    times the running median increment is flagged; flags fail the check
    regardless of the slope margin.
    """
    if len(rows) < 2:
        raise ValueError("continuity check needs at least two rows")
    a = params.damping.alpha
    r0 = rows[0]
    norm0 = math.sqrt(max(r0.l2_sq, 0.0))
    diss0 = (params.nu_h * r0.grad_h_sq + params.nu_3 * r0.d3_sq
             + a * r0.damping.d0)
    c_lip = 1.5 * diss0 / max(norm0, _EPS_DENOM)

    norms = [math.sqrt(max(row.l2_sq, 0.0)) for row in rows]
    worst = None
    increments: list[float] = []
    flagged: list[float] = []
    for i in range(1, len(rows)):
        dt = rows[i].t - rows[i - 1].t
        inc = abs(norms[i] - norms[i - 1])
        slope = inc / max(dt, _EPS_DENOM)
        rel = (c_lip - slope) / max(c_lip, _EPS_DENOM)
        if worst is None or rel < worst[0]:
            worst = (rel, rows[i].t, slope, c_lip)
        if len(increments) >= 5:
            med = float(np.median(increments))
            if med > 0.0 and inc > jump_factor * med:
                flagged.append(rows[i].t)
        increments.append(inc)

    rel, t, slope, bound = worst
    return MarginReport(
        inequality_id="CONTINUITY", worst_t=t, lhs=slope, rhs=bound,
        rel_margin=rel, passed=bool(rel >= -tol and not flagged), tol=tol,
        flagged=tuple(flagged),
    )


def budget_residuals(rows, params: FluidParams) -> np.ndarray:
    """Per-step closure residual of the kinetic energy budget.

    For consecutive rows, 0.5*d(l2_sq) plus the trapezoid panel of the
    dissipation should cancel to the scheme's local order; rows must be
    per-step samples for the result to mean anything.
    """
    if len(rows) < 2:
        raise ValueError("need at least two rows")
    a = params.damping.alpha
    out = np.empty(len(rows) - 1)
    for i in range(1, len(rows)):
        r0, r1 = rows[i - 1], rows[i]
        d_cum = (
            params.nu_h * (r1.cum.grad_h_sq - r0.cum.grad_h_sq)
            + params.nu_3 * (r1.cum.d3_sq - r0.cum.d3_sq)
            + a * (r1.cum.d0 - r0.cum.d0)
        )
        out[i - 1] = 0.5 * (r1.l2_sq - r0.l2_sq) + d_cum
    return out


def inequality_series(check_id: str, rows, params: FluidParams,
                      u0: SpectralField | None = None):
    """(lhs, rhs) arrays over the rows for one inequality id.

    Initial-datum quantities come from the t = 0 row, except EQTH3's
    bound which uses the field when one is supplied.  Purely diagnostic:
    the verifiers' parameter-regime preconditions are not enforced here.
    """
    if not rows:
        raise ValueError("empty ledger")
    a, b = params.damping.alpha, params.damping.beta
    ts = np.array([row.t for row in rows])
    cid = check_id.upper()
    if cid in ("EQTH1", "EQTH21"):
        lhs_fn = _energy_budget_lhs(params)
        lhs = np.array([lhs_fn(row) for row in rows])
        rhs = np.full_like(ts, rows[0].l2_sq)
    elif cid == "EQTH2":
        lhs_fn = _grad_budget_lhs(params)
        lhs = np.array([lhs_fn(row) for row in rows])
        rhs = rows[0].grad_sq * np.exp(ts / (a * b * b))
    elif cid == "EQTH3":
        lhs_fn = _grad_budget_lhs(params)
        lhs = np.array([lhs_fn(row) for row in rows])
        if u0 is not None:
            bound = (sobolev_norm(u0, 1.0, homogeneous=True) ** 2
                     + sobolev_norm(u0, 0.0) ** 2 / (a * b * b))
        else:
            bound = rows[0].grad_sq + rows[0].l2_sq / (a * b * b)
        rhs = np.full_like(ts, bound)
    elif cid == "EQTH22":
        lhs = np.array([
            row.d3_sq + row.cum.grad_h_d3_sq
            + a * row.cum.d1_v + a * b * row.cum.d2_v
            for row in rows
        ])
        rhs = rows[0].d3_sq * np.exp(6.0 * ts / (a * b * b))
    elif cid == "CONTINUITY":
        norms = np.sqrt(np.maximum([row.l2_sq for row in rows], 0.0))
        lhs = np.zeros_like(ts)
        lhs[1:] = np.abs(np.diff(norms)) / np.maximum(np.diff(ts), _EPS_DENOM)
        r0 = rows[0]
        diss0 = (params.nu_h * r0.grad_h_sq + params.nu_3 * r0.d3_sq
                 + a * r0.damping.d0)
        rhs = np.full_like(ts, 1.5 * diss0 / max(norms[0], _EPS_DENOM))
    else:
        raise ValueError(f"no lhs/rhs series for inequality id {check_id!r}")
    return lhs, rhs


# ---------------------------------------------------------------------------
# persistence

def _fmt(x: float) -> str:
    return f"{x:.17g}"


def row_to_values(row: LedgerRow) -> list[float]:
    vals = [row.t, row.l2_sq, row.grad_sq, row.grad_h_sq, row.d3_sq,
            row.lap_sq, row.grad_h_d3_sq,
            row.damping.d0, row.damping.d1, row.damping.d2,
            row.damping.d1_v, row.damping.d2_v]
    vals.extend(getattr(row.cum, f.name) for f in dc_fields(CumulativeIntegrals))
    return vals


def _row_from_values(vals: list[float]) -> LedgerRow:
    return LedgerRow(
        t=vals[0], l2_sq=vals[1], grad_sq=vals[2], grad_h_sq=vals[3],
        d3_sq=vals[4], lap_sq=vals[5], grad_h_d3_sq=vals[6],
        damping=DampingFunctionals(*vals[7:12]),
        cum=CumulativeIntegrals(*vals[12:23]),
    )


def write_ledger_csv(path, rows, meta: dict | None = None):
    """Write rows (plus '#' metadata lines) with 17-significant-digit floats."""
    lines = ["# edns-ledger v1"]
    for key, val in (meta or {}).items():
        val = _fmt(val) if isinstance(val, float) else str(val)
        lines.append(f"# {key} = {val}")
    lines.append(",".join(CSV_COLUMNS))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row_to_values(row)))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_ledger_csv(path):
    """Read back (rows, meta).  17-digit floats reparse bit-exactly."""
    rows: list[LedgerRow] = []
    meta: dict[str, str] = {}
    header_seen = False
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, val = body.partition("=")
                    meta[key.strip()] = val.strip()
                continue
            if not header_seen:
                if line != ",".join(CSV_COLUMNS):
                    raise EdnsError(
                        f"{path}: line {lineno}: unexpected ledger header"
                    )
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != len(CSV_COLUMNS):
                raise EdnsError(
                    f"{path}: line {lineno}: expected {len(CSV_COLUMNS)} "
                    f"columns, got {len(parts)}"
                )
            rows.append(_row_from_values([float(p) for p in parts]))
    if not header_seen:
        raise EdnsError(f"{path}: not a ledger file (missing header)")
    return rows, meta


# ---------------------------------------------------------------------------
# report rendering

def format_margin_table(reports) -> str:
    """Human-readable margin table, one line per inequality."""
    lines = [f"{'check':<14} {'verdict':<8} {'worst_t':>12} {'lhs':>14} "
             f"{'rhs':>14} {'rel_margin':>13}"]
    for r in reports:
        verdict = "PASS" if r.passed else "FAIL"
        extra = ""
        if r.fitted_exponent is not None:
            extra += f"  fitted_exponent={r.fitted_exponent:+.4g}"
        if r.flagged:
            extra += f"  flagged_jumps={len(r.flagged)}"
        lines.append(
            f"{r.inequality_id:<14} {verdict:<8} {r.worst_t:>12.6g} "
            f"{r.lhs:>14.6g} {r.rhs:>14.6g} {r.rel_margin:>+13.4e}{extra}"
        )
    return "\n".join(lines)


def margins_to_kv(reports) -> str:
    """Flat machine-readable key-value rendering of margin reports."""
    lines = []
    for r in reports:
        key = r.inequality_id.lower()
        lines.append(f"{key}.passed = {'true' if r.passed else 'false'}")
        lines.append(f"{key}.worst_t = {_fmt(r.worst_t)}")
        lines.append(f"{key}.lhs = {_fmt(r.lhs)}")
        lines.append(f"{key}.rhs = {_fmt(r.rhs)}")
        lines.append(f"{key}.rel_margin = {_fmt(r.rel_margin)}")
        lines.append(f"{key}.tol = {_fmt(r.tol)}")
        if r.fitted_exponent is not None:
            lines.append(f"{key}.fitted_exponent = {_fmt(r.fitted_exponent)}")
        if r.flagged:
            lines.append(f"{key}.flagged = "
                         + ";".join(_fmt(t) for t in r.flagged))
    return "\n".join(lines) + "\n"
