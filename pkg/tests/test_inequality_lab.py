"""Monotonicity inequalities, exact constants, and the integral comparison check."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from edns import (
    HypothesisViolationError,
    c2k_bound_check,
    c_alpha,
    gronwall_variant_check,
    lemma4_margin,
    lemma44_margin,
    run_c2k_campaign,
    run_gronwall_campaign,
    run_lemma4_campaign,
    run_lemma44_campaign,
)
from edns.inequality_lab import PASS_TOL, make_gronwall_witness

BRANCH_CROSSOVER = 3.169925001442312  # log2(18) - 1


# ---------------------------------------------------------------------------
# the two-branch constant

def test_c_alpha_frozen_values():
    assert c_alpha(2.0) == 1.0 / 18.0
    assert c_alpha(4.0) == 2.0**-5
    assert c_alpha(0.0) == 1.0 / 18.0  # 1/2 branch is larger there
    assert c_alpha(20.0) == 2.0**-21


def test_c_alpha_branch_crossover():
    lo = c_alpha(BRANCH_CROSSOVER - 1e-9)
    hi = c_alpha(BRANCH_CROSSOVER + 1e-9)
    assert lo == 1.0 / 18.0
    assert hi < 1.0 / 18.0
    assert hi == pytest.approx(1.0 / 18.0, rel=1e-8)


def test_c_alpha_rejects_negative():
    with pytest.raises(ValueError):
        c_alpha(-0.5)


# ---------------------------------------------------------------------------
# power monotonicity

def test_lemma4_equal_points_have_zero_margin():
    m = lemma4_margin([1.0, -2.0, 0.5], [1.0, -2.0, 0.5], alpha=2.0)
    assert m.lhs == 0.0 and m.rhs == 0.0 and m.margin == 0.0
    assert m.passed


def test_lemma4_antipodal_1d_exact():
    # x = 1, y = -1, alpha = 2: lhs = 4, rhs = (1/18) * 2 * 4 = 4/9
    m = lemma4_margin([1.0], [-1.0], alpha=2.0)
    assert m.lhs == pytest.approx(4.0, rel=1e-15)
    assert m.rhs == pytest.approx(4.0 / 9.0, rel=1e-15)
    assert m.margin == pytest.approx(32.0 / 9.0, rel=1e-14)
    assert m.passed


def test_lemma4_symmetric_in_arguments():
    rng = np.random.default_rng(0)
    for _ in range(50):
        x = rng.uniform(-3, 3, 3)
        y = rng.uniform(-3, 3, 3)
        a = lemma4_margin(x, y, alpha=1.5)
        b = lemma4_margin(y, x, alpha=1.5)
        scale = max(1.0, abs(a.margin))
        assert abs(a.margin - b.margin) <= 1e-13 * scale


@pytest.mark.parametrize("lam", [1e-3, 1e3])
def test_lemma4_homogeneity(lam):
    # both sides scale as lambda^(alpha + 2)
    x = np.array([1.2, -0.7, 0.3])
    y = np.array([-0.4, 0.9, 1.1])
    alpha = 2.0
    base = lemma4_margin(x, y, alpha)
    scaled = lemma4_margin(lam * x, lam * y, alpha)
    factor = lam ** (alpha + 2.0)
    assert scaled.lhs == pytest.approx(base.lhs * factor, rel=1e-12)
    assert scaled.rhs == pytest.approx(base.rhs * factor, rel=1e-12)
    assert scaled.margin == pytest.approx(base.margin * factor, rel=1e-11)


def test_lemma4_input_validation():
    with pytest.raises(ValueError):
        lemma4_margin([1.0, 2.0], [1.0], alpha=2.0)
    with pytest.raises(ValueError):
        lemma4_margin([1.0] * 4, [0.0] * 4, alpha=2.0)
    with pytest.raises(ValueError):
        lemma4_margin([1.0], [0.0], alpha=-1.0)


def test_lemma4_echoes_inputs():
    m = lemma4_margin([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], alpha=3.0)
    assert m.inputs_echo == ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), 3.0)


# ---------------------------------------------------------------------------
# even-exponent constants, exact arithmetic

def test_c2k_equality_at_k1():
    m = c2k_bound_check(1)
    assert m.margin == 0.0
    assert m.passed
    assert m.lhs == m.rhs == float(Fraction(1, 18))


def test_c2k_frozen_rationals():
    m2 = c2k_bound_check(2)
    assert m2.lhs == float(Fraction(1, 32))
    assert m2.rhs == float(Fraction(1, 72))
    assert m2.margin == float(Fraction(5, 288))
    m10 = c2k_bound_check(10)
    assert m10.lhs == float(Fraction(1, 2**21))
    assert m10.rhs == float(Fraction(2, 9 * 4**10))
    assert m10.passed


def test_c2k_rejects_nonpositive_k():
    with pytest.raises(ValueError):
        c2k_bound_check(0)


def test_c2k_campaign_all_pass():
    res = run_c2k_campaign(k_max=20)
    assert res.failures == 0
    assert res.trials == 20
    assert res.worst.margin == 0.0  # k = 1 is the equality case


# ---------------------------------------------------------------------------
# exponential monotonicity

def test_lemma44_equal_points_have_zero_margin():
    m = lemma44_margin([0.3, -1.0, 2.0], [0.3, -1.0, 2.0], beta=1.0)
    assert m.lhs == 0.0 and m.rhs == 0.0
    assert m.passed


def test_lemma44_one_sided_sweep():
    # y = 0 in 1-d: t * expm1(b t^2) >= (2/9) t^2 ... reduced per unit t^2:
    # expm1(b s) >= (2/9) expm1(b s / 4) for every s = t^2 >= 0
    for t in np.linspace(0.01, 5.0, 47):
        m = lemma44_margin([t], [0.0], beta=1.0)
        assert m.passed
        assert m.lhs == pytest.approx(t * math.expm1(t * t) * t, rel=1e-13)
        assert m.rhs == pytest.approx(
            (2.0 / 9.0) * math.expm1(t * t / 4.0) * t * t, rel=1e-13)


def test_lemma44_validation():
    with pytest.raises(ValueError):
        lemma44_margin([1.0], [0.0], beta=0.0)
    with pytest.raises(ValueError):
        lemma44_margin([30.0], [0.0], beta=1.0)  # overflow guard


def test_lemma44_series_consistency_with_power_form():
    # the exponential inequality is the term-by-term series combination of
    # the even-power ones; spot check that both hold on the same pairs
    rng = np.random.default_rng(1)
    for _ in range(200):
        x = rng.uniform(-2, 2, 3)
        y = rng.uniform(-2, 2, 3)
        assert lemma44_margin(x, y, beta=1.0).passed
        for k in (1, 2, 3):
            assert lemma4_margin(x, y, alpha=2.0 * k).passed


# ---------------------------------------------------------------------------
# randomized campaigns

def test_lemma4_campaign_zero_failures():
    res = run_lemma4_campaign(trials=5000, seed=42)
    assert res.failures == 0
    assert res.trials >= 5000
    assert res.worst.passed
    assert res.suite == "lemma4"


def test_lemma44_campaign_zero_failures():
    res = run_lemma44_campaign(trials=5000, seed=42)
    assert res.failures == 0
    assert res.trials >= 5000
    assert res.worst.passed


def test_campaigns_deterministic_for_fixed_seed():
    a = run_lemma4_campaign(trials=2000, seed=7)
    b = run_lemma4_campaign(trials=2000, seed=7)
    assert a.worst.margin == b.worst.margin
    assert a.worst.inputs_echo == b.worst.inputs_echo


# ---------------------------------------------------------------------------
# integral comparison

def test_gronwall_no_growth_reduction():
    # h = 0: the conclusion collapses to the hypothesis bound itself
    t = np.linspace(0.0, 1.0, 101)
    A = 2.0
    f = np.full_like(t, 0.5 * A)
    g = np.full_like(t, 0.2 * A)  # int g = 0.2 A <= remaining headroom
    h = np.zeros_like(t)
    m = gronwall_variant_check(f, g, h, A, T=1.0)
    assert m.passed
    assert m.rhs == pytest.approx(A, rel=1e-15)
    assert m.margin == pytest.approx(A - (0.5 * A + 0.2 * A), rel=1e-12)


def test_gronwall_exponential_is_sharp():
    # f = A e^{ct}, h = c, g = 0 attains the bound up to rounding
    c, A, T = 1.3, 0.7, 1.0
    t = np.linspace(0.0, T, 401)
    f = A * np.exp(c * t)
    h = np.full_like(t, c)
    g = np.zeros_like(t)
    m = gronwall_variant_check(f, g, h, A, T)
    assert m.passed
    assert abs(m.margin) <= 1e-10 * A * math.exp(c * T)


def test_gronwall_flags_hypothesis_violation():
    t = np.linspace(0.0, 1.0, 51)
    A = 1.0
    f = np.full_like(t, 2.0)  # f > A with g = h = 0 breaks the hypothesis
    z = np.zeros_like(t)
    with pytest.raises(HypothesisViolationError):
        gronwall_variant_check(f, z, z, A, T=1.0)
    with pytest.raises(HypothesisViolationError):
        gronwall_variant_check(-np.ones_like(t), z, z, A, T=1.0)
    with pytest.raises(HypothesisViolationError):
        gronwall_variant_check(np.full_like(t, 0.5), z, z, -1.0, T=1.0)


def test_gronwall_shape_and_range_validation():
    with pytest.raises(ValueError):
        gronwall_variant_check([1.0], [0.0], [0.0], 2.0, T=1.0)
    z3 = np.zeros(3)
    with pytest.raises(ValueError):
        gronwall_variant_check(z3, np.zeros(4), z3, 1.0, T=1.0)
    with pytest.raises(ValueError):
        gronwall_variant_check(z3, z3, z3, 1.0, T=0.0)


def test_gronwall_witness_satisfies_hypothesis():
    rng = np.random.default_rng(5)
    for _ in range(20):
        f, g, h, A, T = make_gronwall_witness(rng)
        m = gronwall_variant_check(f, g, h, A, T)  # must not raise
        assert m.passed


def test_gronwall_campaign_zero_failures():
    res = run_gronwall_campaign(trials=100, seed=11)
    assert res.failures == 0
    assert res.trials == 100
    assert res.worst.margin >= -PASS_TOL
