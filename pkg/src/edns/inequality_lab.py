"""Pointwise inequality checks backing the damping energy estimates.

Four families are checked:

  * power monotonicity: (|x|^a x - |y|^a y).(x - y) >= c(a) (|x|^a + |y|^a) |x-y|^2
    with c(a) = min(1/18, 2^-(a+1));
  * its even-exponent constants c(2k) against the bound (2/9) 4^-k,
    in exact rational arithmetic;
  * the exponential form:
    ((e^{b|x|^2}-1)x - (e^{b|y|^2}-1)y).(x - y)
        >= (2/9) ((e^{b|x|^2/4}-1) + (e^{b|y|^2/4}-1)) |x-y|^2,
    which follows from the power inequality term by term in the series;
  * an integral comparison argument: f(t) + int_0^t g <= A + int_0^t h f
    (all nonnegative) implies f(t) + int_0^t g <= A exp(int_0^t h),
    checked on sampled functions with trapezoid quadrature.

Every check returns a LemmaMargin carrying both sides, the signed margin
(positive = inequality satisfied) and an echo of the inputs, so a failure
is reproducible from the printed record.  Randomized campaigns draw from
dedicated samplers that exercise the geometric corner cases (parallel,
antiparallel, obtuse, acute with small/large |y|, near-diagonal) and are
deterministic for a fixed master seed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np

from .errors import HypothesisViolationError

PASS_TOL = 1e-12  # relative to max(1, |lhs|, |rhs|)


@dataclass(frozen=True)
class LemmaMargin:
    """One inequality evaluation: sides, signed margin, verdict, input echo."""

    lhs: float
    rhs: float
    margin: float
    passed: bool
    inputs_echo: Any = None


def _verdict(lhs: float, rhs: float, margin: float, echo) -> LemmaMargin:
    tol = PASS_TOL * max(1.0, abs(lhs), abs(rhs))
    return LemmaMargin(
        lhs=float(lhs), rhs=float(rhs), margin=float(margin),
        passed=bool(margin >= -tol), inputs_echo=echo,
    )


def c_alpha(alpha: float) -> float:
    """min(1/18, 2^-(alpha+1)); the two branches cross near alpha = 3.17."""
    if alpha < 0.0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    return min(1.0 / 18.0, 2.0 ** -(alpha + 1.0))


def _as_points(x, y):
    X = np.atleast_2d(np.asarray(x, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if X.shape != Y.shape or X.ndim != 2 or not (1 <= X.shape[1] <= 3):
        raise ValueError(f"x, y must be vectors of equal dimension <= 3, got "
                         f"{X.shape} vs {Y.shape}")
    return X, Y


def _lemma4_sides(X: np.ndarray, Y: np.ndarray, alpha: float):
    c = c_alpha(alpha)  # validates alpha before any 0**alpha can occur
    ax = np.linalg.norm(X, axis=1) ** alpha
    ay = np.linalg.norm(Y, axis=1) ** alpha
    d = X - Y
    dist_sq = np.sum(d * d, axis=1)
    lhs = np.sum((ax[:, None] * X - ay[:, None] * Y) * d, axis=1)
    rhs = c * (ax + ay) * dist_sq
    return lhs, rhs


def lemma4_margin(x, y, alpha: float) -> LemmaMargin:
    """Margin of the power-damping monotonicity inequality at one point pair."""
    X, Y = _as_points(x, y)
    lhs, rhs = _lemma4_sides(X, Y, alpha)
    return _verdict(lhs[0], rhs[0], lhs[0] - rhs[0],
                    (tuple(map(float, X[0])), tuple(map(float, Y[0])), alpha))


def _lemma44_sides(X: np.ndarray, Y: np.ndarray, beta: float):
    sx = np.sum(X * X, axis=1)
    sy = np.sum(Y * Y, axis=1)
    d = X - Y
    dist_sq = np.sum(d * d, axis=1)
    lhs = np.sum((np.expm1(beta * sx)[:, None] * X
                  - np.expm1(beta * sy)[:, None] * Y) * d, axis=1)
    rhs = (2.0 / 9.0) * (np.expm1(0.25 * beta * sx)
                         + np.expm1(0.25 * beta * sy)) * dist_sq
    return lhs, rhs


def lemma44_margin(x, y, beta: float) -> LemmaMargin:
    """Margin of the exponential-damping monotonicity inequality at one point pair."""
    if not (beta > 0.0):
        raise ValueError(f"beta must be positive, got {beta}")
    X, Y = _as_points(x, y)
    if max(float(np.max(np.sum(X * X, axis=1))),
           float(np.max(np.sum(Y * Y, axis=1)))) * beta > 700.0:
        raise ValueError("beta*|x|^2 exceeds the overflow guard (700)")
    lhs, rhs = _lemma44_sides(X, Y, beta)
    return _verdict(lhs[0], rhs[0], lhs[0] - rhs[0],
                    (tuple(map(float, X[0])), tuple(map(float, Y[0])), beta))


def c2k_bound_check(k: int) -> LemmaMargin:
    """Exact rational check that c(2k) >= (2/9) 4^-k, with equality at k = 1.

    c(2k) follows the two-branch formula: 1/18 for k = 1 (where 1/18 is
    the smaller branch) and 2^-(2k+1) for k >= 2.
    """
    if k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    c2k = Fraction(1, 18) if k == 1 else Fraction(1, 2 ** (2 * k + 1))
    bound = Fraction(2, 9) / Fraction(4) ** k
    diff = c2k - bound
    return LemmaMargin(
        lhs=float(c2k), rhs=float(bound), margin=float(diff),
        passed=diff >= 0, inputs_echo=("k", k, "exact", str(diff)),
    )


def gronwall_variant_check(f, g, h, A: float, T: float) -> LemmaMargin:
    """Integral comparison check on uniformly sampled functions.

    f, g, h are nonnegative samples on the uniform grid over [0, T]
    (equal lengths >= 2); integrals are trapezoid sums.  The hypothesis

        f[i] + int_0^{t_i} g <= A + int_0^{t_i} h*f

    is validated first at every sample; a violation raises
    HypothesisViolationError (the *input* is out of scope).  The returned
    margin is the worst value of A*exp(int h) - (f + int g) over samples;
    lhs/rhs echo the two sides at the worst sample.
    """
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if not (f.shape == g.shape == h.shape) or f.ndim != 1 or f.size < 2:
        raise ValueError("f, g, h must be equal-length 1-d arrays with >= 2 samples")
    if not (T > 0.0):
        raise ValueError(f"T must be positive, got {T}")
    if A < 0.0 or np.min(f) < 0.0 or np.min(g) < 0.0 or np.min(h) < 0.0:
        raise HypothesisViolationError("f, g, h, A must all be nonnegative")
    if not (np.all(np.isfinite(f)) and np.all(np.isfinite(g))
            and np.all(np.isfinite(h))):
        raise HypothesisViolationError("samples must be finite")

    dt = T / (f.size - 1)

    def cumtrapz(a):
        out = np.empty_like(a)
        out[0] = 0.0
        np.cumsum(0.5 * dt * (a[1:] + a[:-1]), out=out[1:])
        return out

    G = cumtrapz(g)
    H = cumtrapz(h)
    K = cumtrapz(h * f)

    scale = max(1.0, A, float(np.max(f + G)), float(np.max(A + K)))
    viol = (f + G) - (A + K)
    worst_hyp = float(np.max(viol))
    if worst_hyp > PASS_TOL * scale:
        i = int(np.argmax(viol))
        raise HypothesisViolationError(
            f"hypothesis fails at sample {i} (t = {i * dt:.6g}) "
            f"by {worst_hyp:.3g}"
        )

    lhs_all = f + G
    rhs_all = A * np.exp(H)
    margins = rhs_all - lhs_all
    i = int(np.argmin(margins))
    return _verdict(lhs_all[i], rhs_all[i], margins[i],
                    ("gronwall", A, T, "worst_sample", i))


# ---------------------------------------------------------------------------
# randomized campaigns

@dataclass(frozen=True)
class CampaignResult:
    suite: str
    trials: int
    failures: int
    worst: LemmaMargin
    elapsed: float


def _unit_rows(rng, m, d):
    v = rng.standard_normal((m, d))
    norms = np.linalg.norm(v, axis=1)
    norms[norms == 0.0] = 1.0
    return v / norms[:, None]


def _pair_samplers(rng, m: int, d: int, radius: float):
    """Point-pair batches covering the geometric corner cases of the proofs."""
    box = radius / np.sqrt(d)

    def uniform():
        return (rng.uniform(-box, box, (m, d)), rng.uniform(-box, box, (m, d)))

    def parallel():
        x = rng.uniform(-box, box, (m, d))
        return x, x * rng.uniform(0.0, 2.0, (m, 1))

    def antiparallel():
        x = rng.uniform(-box, box, (m, d))
        return x, -x * rng.uniform(0.0, 2.0, (m, 1))

    def obtuse():
        x = rng.uniform(-box, box, (m, d))
        y = rng.uniform(-box, box, (m, d))
        dots = np.sum(x * y, axis=1)
        y[dots > 0.0] *= -1.0  # flip to the obtuse half-space
        return x, y

    def acute_small():
        x = rng.uniform(-box, box, (m, d))
        e = _unit_rows(rng, m, d)
        e[np.sum(e * x, axis=1) < 0.0] *= -1.0
        r = np.linalg.norm(x, axis=1) * rng.uniform(0.0, 0.5, m)
        return x, e * r[:, None]

    def acute_large():
        x = rng.uniform(-box, box, (m, d))
        e = _unit_rows(rng, m, d)
        e[np.sum(e * x, axis=1) < 0.0] *= -1.0
        r = np.linalg.norm(x, axis=1) * rng.uniform(0.5, 1.0, m)
        return x, e * r[:, None]

    def near_diagonal():
        x = rng.uniform(-box, box, (m, d))
        return x, x + rng.uniform(-1e-8, 1e-8, (m, d))

    return [uniform, parallel, antiparallel, obtuse, acute_small, acute_large,
            near_diagonal]


def _run_pair_campaign(suite, sides_fn, params, dims, trials, seed, radius):
    t0 = time.perf_counter()
    combos = [(d, p) for d in dims for p in params]
    per = max(1, -(-trials // (len(combos) * 7)))  # ceil: never undershoot trials
    total = 0
    failures = 0
    worst: LemmaMargin | None = None
    for ci, (d, param) in enumerate(combos):
        rng = np.random.default_rng([seed, ci])
        for sampler in _pair_samplers(rng, per, d, radius):
            X, Y = sampler()
            lhs, rhs = sides_fn(X, Y, param)
            margins = lhs - rhs
            tol = PASS_TOL * np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
            failures += int(np.sum(margins < -tol))
            total += X.shape[0]
            i = int(np.argmin(margins))
            cand = _verdict(lhs[i], rhs[i], margins[i],
                            (tuple(float(v) for v in X[i]),
                             tuple(float(v) for v in Y[i]), param))
            if worst is None or cand.margin < worst.margin:
                worst = cand
    return CampaignResult(suite=suite, trials=total, failures=failures,
                          worst=worst, elapsed=time.perf_counter() - t0)


def run_lemma4_campaign(trials: int = 1_000_000, seed: int = 0,
                        alphas=(0.5, 1.0, 2.0, 3.0, 6.0),
                        dims=(1, 2, 3)) -> CampaignResult:
    return _run_pair_campaign("lemma4", _lemma4_sides, tuple(alphas),
                              tuple(dims), trials, seed, radius=10.0)


def run_lemma44_campaign(trials: int = 1_000_000, seed: int = 0,
                         betas=(0.25, 1.0, 4.0)) -> CampaignResult:
    return _run_pair_campaign("lemma44", _lemma44_sides, tuple(betas),
                              (3,), trials, seed, radius=5.0)


def run_c2k_campaign(k_max: int = 20) -> CampaignResult:
    t0 = time.perf_counter()
    worst = None
    failures = 0
    for k in range(1, k_max + 1):
        m = c2k_bound_check(k)
        failures += 0 if m.passed else 1
        if worst is None or m.margin < worst.margin:
            worst = m
    return CampaignResult(suite="c2k", trials=k_max, failures=failures,
                          worst=worst, elapsed=time.perf_counter() - t0)


def make_gronwall_witness(rng, samples: int = 200):
    """One (f, g, h, A, T) tuple satisfying the sampled hypothesis by construction.

    f is built by a trapezoid recurrence that enforces

        f[i] + int g = (A - slack) + int h*f

    exactly at every sample, with a deliberate slack so the discrete
    conclusion is not spoiled by quadrature curvature.  g is kept small
    against A so f stays positive.
    """
    T = 1.0
    m = samples
    t = np.linspace(0.0, T, m + 1)
    A = float(rng.uniform(0.1, 10.0))
    h = rng.uniform(0.0, 1.0) + rng.uniform(0.0, 1.0) * np.abs(
        np.sin(rng.uniform(0.5, 4.0) * t + rng.uniform(0.0, 6.28)))
    g = 0.3 * A * rng.uniform(0.0, 1.0) * np.abs(
        np.sin(rng.uniform(0.5, 4.0) * t + rng.uniform(0.0, 6.28)))
    slack = 0.05 * A
    dt = T / m

    f = np.empty(m + 1)
    f[0] = A - slack
    K = 0.0  # running trapezoid of h*f
    G = 0.0  # running trapezoid of g
    for i in range(m):
        G_next = G + 0.5 * dt * (g[i] + g[i + 1])
        rhs = (A - slack) + K + 0.5 * dt * h[i] * f[i] - G_next
        f[i + 1] = max(0.0, rhs / (1.0 - 0.5 * dt * h[i + 1]))
        K += 0.5 * dt * (h[i] * f[i] + h[i + 1] * f[i + 1])
        G = G_next
    return f, g, h, A, T


def run_gronwall_campaign(trials: int = 1000, seed: int = 0,
                          samples: int = 200) -> CampaignResult:
    t0 = time.perf_counter()
    worst = None
    failures = 0
    for j in range(trials):
        rng = np.random.default_rng([seed, j])
        f, g, h, A, T = make_gronwall_witness(rng, samples)
        m = gronwall_variant_check(f, g, h, A, T)
        failures += 0 if m.passed else 1
        if worst is None or m.margin < worst.margin:
            worst = m
    return CampaignResult(suite="gronwall", trials=trials, failures=failures,
                          worst=worst, elapsed=time.perf_counter() - t0)
