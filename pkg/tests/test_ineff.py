import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from estcombine import ineff
from estcombine.errors import InvalidArgument
from estcombine.ineff import RateBounds
from estcombine.weights import PowerLaw, make_weights

mpmath.mp.dps = 40


def mp_power_sum(x, K):
    return mpmath.fsum(mpmath.mpf(i) ** mpmath.mpf(x) for i in range(1, K + 1))


def mp_rho(x, y, K):
    return mp_power_sum(2 * x - y, K) * mp_power_sum(y, K) / mp_power_sum(x, K) ** 2


# --- power sums -----------------------------------------------------------


def test_power_sum_trivial():
    assert ineff.power_sum(1, 10) == 55
    assert ineff.power_sum(0, 7) == 7


def test_power_sum_sqrt_ten():
    expected = sum(math.sqrt(i) for i in range(1, 11))
    assert ineff.power_sum(0.5, 10) == pytest.approx(expected, rel=1e-15)
    assert ineff.power_sum(0.5, 10) == pytest.approx(22.468278, abs=1e-6)


@pytest.mark.parametrize("x", [-4.0, -1.3, -0.5, 0.25, 0.5, 1.7, 4.0])
@pytest.mark.parametrize("K", [1, 3, 100, 5000])
def test_power_sum_against_mpmath(x, K):
    ref = float(mp_power_sum(x, K))
    assert abs(ineff.power_sum(x, K) - ref) <= 1e-13 * ref


def test_power_sum_large_K_against_hurwitz_zeta():
    # sum_{i<=K} i^x = zeta(-x) - zeta(-x, K+1), an independent route.
    K = 10**6
    ref = mpmath.zeta(-0.5) - mpmath.zeta(-0.5, K + 1)
    assert ineff.power_sum(0.5, K) == pytest.approx(float(ref), rel=1e-13)


def test_prefix_matches_single_sums():
    pref = ineff.power_sum_prefix(0.5, 2000)
    for K in (1, 2, 17, 999, 2000):
        assert pref[K - 1] == pytest.approx(ineff.power_sum(0.5, K), rel=2e-16)


def test_refuses_huge_K():
    with pytest.raises(InvalidArgument):
        ineff.power_sum(0.5, 10**7 + 1)
    with pytest.raises(InvalidArgument):
        ineff.rho(0.5, 1, 0)


# --- rho ------------------------------------------------------------------


def test_rho_examples():
    assert ineff.rho(0.7, 0.7, 50) == 1.0
    assert ineff.rho(0.13, 2.9, 1) == 1.0
    assert ineff.rho(0.5, 1, 2) == pytest.approx(6 / (1 + math.sqrt(2)) ** 2, rel=1e-15)
    assert ineff.rho(0.5, 1, 2) == pytest.approx(1.029437, abs=1e-6)


@pytest.mark.parametrize("x,y,K", [(0.5, 1, 10), (0.2, 0.9, 37), (1.0, 0.0, 500), (0.5, 0.0, 3)])
def test_rho_against_mpmath(x, y, K):
    assert ineff.rho(x, y, K) == pytest.approx(float(mp_rho(x, y, K)), rel=1e-14)


xs = st.floats(-1, 2)


@settings(max_examples=300, deadline=None)
@given(x=xs, y=xs, K=st.integers(1, 400))
def test_rho_symmetry(x, y, K):
    a = ineff.rho(x, y, K)
    b = ineff.rho(x, 2 * x - y, K)
    assert abs(a - b) <= 1e-12 * a


@settings(max_examples=300, deadline=None)
@given(x=xs, y=xs, K=st.integers(1, 400))
def test_rho_at_least_one(x, y, K):
    assert ineff.rho(x, y, K) >= 1 - 1e-12


@settings(max_examples=100, deadline=None)
@given(x=xs, y=xs, K=st.integers(2, 200))
def test_rho_strictly_above_one_off_diagonal(x, y, K):
    assume(abs(x - y) > 0.05)
    assert ineff.rho(x, y, K) > 1


@pytest.mark.parametrize("x", [0.0, 0.3, 0.5, 0.8, 1.0])
@pytest.mark.parametrize("K", [2, 3, 10, 200])
def test_rho_convex_in_y(x, K):
    y = np.linspace(0, 1, 101)
    r = np.array([ineff.rho(x, v, K) for v in y])
    assert np.all(r[:-2] - 2 * r[1:-1] + r[2:] > 0)


@pytest.mark.parametrize("x,y,K", [(0.5, 1.0, 10), (0.25, 0.75, 40), (1.2, 0.1, 7)])
def test_rho_equals_custom_power_law(x, y, K):
    v = np.arange(1, K + 1, dtype=float) ** (-y)
    a = ineff.rho(x, y, K)
    assert ineff.rho_custom(v, make_weights(PowerLaw(x), K)) == pytest.approx(a, rel=1e-12)


def test_rho_curve_matches_rho():
    curve = ineff.rho_curve(0.5, 1.0, 300)
    for K in (1, 2, 10, 300):
        assert curve[K - 1] == pytest.approx(ineff.rho(0.5, 1.0, K), rel=1e-14)


# --- general profiles -----------------------------------------------------


def test_rho_general_plateau():
    v = 1.0 / np.minimum(np.arange(1, 11), 6)
    s10 = mp_power_sum(0.5, 10)
    assert ineff.rho_general(v) == pytest.approx(float(525 / s10**2), rel=1e-14)
    assert 1.035 <= ineff.rho_general(v) < 1.04


def test_rho_general_matched_profile():
    for K in (1, 5, 100):
        v = np.arange(1, K + 1, dtype=float) ** -0.5
        assert ineff.rho_general(v) == pytest.approx(1.0, rel=1e-13)


def test_rho_general_transient():
    v = np.array([1.0] * 3 + [0.01] * 10)
    k = np.arange(1, 14)
    ref = mpmath.fsum(mpmath.mpf(int(a)) * mpmath.mpf(b) for a, b in zip(k, v.tolist()))
    ref *= mpmath.fsum(1 / mpmath.mpf(b) for b in v.tolist())
    ref /= mp_power_sum(0.5, 13) ** 2
    assert ineff.rho_general(v) == pytest.approx(float(ref), rel=1e-14)
    assert ineff.rho_general(v) == pytest.approx(6.365, abs=1e-3)


def test_rho_general_rejects_nonpositive():
    with pytest.raises(InvalidArgument):
        ineff.rho_general([1.0, 0.0])
    with pytest.raises(InvalidArgument):
        ineff.rho_general([])


def test_rho_custom_examples():
    assert ineff.rho_custom(np.full(4, 2.5), np.full(4, 0.25)) == pytest.approx(1.0, rel=1e-15)
    assert ineff.rho_custom([1, 0.5], [1 / 3, 2 / 3]) == pytest.approx(1.0, rel=1e-15)
    assert ineff.rho_custom([1, 1], [0, 1]) == 2.0
    with pytest.raises(InvalidArgument):
        ineff.rho_custom([1, 1, 1], [0.5, 0.5])


# --- worst cases ----------------------------------------------------------


def test_sup_symmetric_at_half():
    val, arg = ineff.sup_rho_over_y(0.5, RateBounds(0, 1), 10)
    assert ineff.rho(0.5, 0, 10) == pytest.approx(ineff.rho(0.5, 1, 10), rel=1e-14)
    assert val == pytest.approx(ineff.rho(0.5, 1, 10), rel=1e-14)
    assert arg == 1


def test_sup_below_midpoint_is_at_upper():
    val, arg = ineff.sup_rho_over_y(0.3, RateBounds(0, 1), 10)
    assert arg == 1
    assert val == ineff.rho(0.3, 1, 10)
    assert ineff.sup_rho_over_y(0.8, RateBounds(0, 1), 10).argmax_y == 0


def test_sup_is_true_supremum_over_grid():
    b = RateBounds(0.2, 1.7)
    for x in (0.2, 0.6, 0.95, 1.4, 1.7):
        val, _ = ineff.sup_rho_over_y(x, b, 25)
        grid = max(ineff.rho(x, y, 25) for y in np.linspace(b.L, b.U, 301))
        assert val >= grid * (1 - 1e-14)


def test_sup_large_K_near_nine_eighths():
    val, _ = ineff.sup_rho_over_y(0.5, RateBounds(0, 1), 10**6)
    assert abs(val - 9 / 8) <= 1e-3
    assert abs(val - ineff.asymptotic_ineff(RateBounds(0, 1))) <= 1e-3


def test_sup_precondition():
    with pytest.raises(InvalidArgument):
        ineff.sup_rho_over_y(1.5, RateBounds(0, 1), 5)
    with pytest.raises(InvalidArgument):
        RateBounds(1, 0)


def test_rate_bounds_midpoint():
    assert RateBounds(0.25, 1.75).M == 1.0


def test_asymptotic_examples():
    assert ineff.asymptotic_ineff(RateBounds(0, 1)) == 9 / 8
    assert ineff.asymptotic_ineff(RateBounds(0.7, 0.7)) == 1.0
    assert ineff.asymptotic_ineff(RateBounds(0, 2)) == 4 / 3


def test_generalized_midpoint_nondecreasing_probe():
    assert ineff.is_nondecreasing_in_K(RateBounds(0, 1), 5000)
    assert ineff.is_nondecreasing_in_K(RateBounds(0, 2), 2000)


# --- exponential model ----------------------------------------------------


def mp_gamma(x, y, K):
    x, y = mpmath.mpf(x), mpmath.mpf(y)
    s = lambda a: mpmath.fsum(mpmath.exp(a * i) for i in range(1, K + 1))
    return s(2 * x - y) * s(y) / s(x) ** 2


def test_gamma_matched():
    for K in (1, 4, 60):
        assert ineff.gamma(0.9, 0.9, K) == 1.0


def test_gamma_half_rate_factor_is_K():
    assert math.exp(ineff._log_geometric_sum(0.0, 13)) == pytest.approx(13, rel=1e-15)
    assert ineff.gamma(0.5, 1.0, 13) == pytest.approx(float(mp_gamma(0.5, 1.0, 13)), rel=1e-13)


def test_gamma_example():
    assert ineff.gamma(3, 1, 5) == pytest.approx(float(mp_gamma(3, 1, 5)), rel=1e-13)


@settings(max_examples=200, deadline=None)
@given(x=st.floats(0.01, 5), y=st.floats(0.01, 5), K=st.integers(1, 50))
def test_gamma_against_direct_sums(x, y, K):
    ref = float(mp_gamma(x, y, K))
    assert ineff.gamma(x, y, K) == pytest.approx(ref, rel=1e-10)


def test_gamma_near_singular_point():
    for d in (1e-12, -3e-10, 5e-9, 2e-8):
        y = 1.0
        x = (y + d) / 2
        assert ineff.gamma(x, y, 40) == pytest.approx(float(mp_gamma(x, y, 40)), rel=1e-12)


def test_gamma_large_arguments_stay_finite():
    assert math.isfinite(ineff.gamma(400.0, 1.0, 1000))
    assert ineff.gamma(400.0, 1.0, 1000) == pytest.approx(
        ineff.gamma_last_iterate_limit(1.0, 1000).value, rel=1e-12
    )


def test_gamma_rejects_nonpositive():
    with pytest.raises(InvalidArgument):
        ineff.gamma(0.0, 1.0, 3)


def test_last_iterate_bounds():
    assert ineff.gamma_last_iterate_limit(math.log(2), 7).bound == pytest.approx(2.0, abs=1e-12)
    assert ineff.gamma_last_iterate_limit(math.log(10), 7).bound == pytest.approx(10 / 9, abs=1e-12)


def test_last_iterate_small_rate_tends_to_K():
    assert ineff.gamma_last_iterate_limit(1e-9, 12).value == pytest.approx(12, rel=1e-6)


def test_last_iterate_is_limit_of_gamma():
    lim = ineff.gamma_last_iterate_limit(0.4, 9).value
    assert ineff.gamma(60.0, 0.4, 9) == pytest.approx(lim, rel=1e-12)


# --- integral bounds, monotonicity, minimax -------------------------------


def test_integral_bounds_examples():
    assert ineff.integral_bounds(0, 5) == (5.0, 5.0)
    lo, hi = ineff.integral_bounds(1, 10)
    assert (lo, hi) == (55.0, 60.0)
    lo, hi = ineff.integral_bounds(0.5, 10)
    assert lo < ineff.power_sum(0.5, 10) < hi


def test_integral_bounds_precondition():
    with pytest.raises(InvalidArgument):
        ineff.integral_bounds(1.5, 3)


def test_integral_sandwich_grid():
    for x in (np.arange(11) / 10).tolist():
        pref = ineff.power_sum_prefix(x, 1000)
        for K in range(1, 1001):
            lo, hi = ineff.integral_bounds(x, K)
            s = pref[K - 1]
            assert lo <= s <= hi
            if 0 < x < 1:
                assert lo < s
            if x > 0:
                assert s < hi


def test_halfrule_small_K():
    r = ineff.halfrule_ratios(8)
    assert np.all(r > 1.0038)
    assert r[0] == pytest.approx(6 / (1 + math.sqrt(2)) ** 2, rel=1e-15)
    assert ineff.rho_halfrule_monotone_check(8)
    assert ineff.rho_halfrule_monotone_check(2)


def test_halfrule_ratios_agree_with_rho():
    r = ineff.halfrule_ratios(50)
    for K in (1, 10, 49):
        assert r[K - 1] == pytest.approx(ineff.rho(0.5, 1, K + 1) / ineff.rho(0.5, 1, K), rel=1e-14)


def test_halfrule_monotone_long():
    assert ineff.rho_halfrule_monotone_check(10**4)


def test_minimax_examples():
    grid = np.arange(11) / 10
    assert ineff.minimax_scan(5, grid).best_x == 0.5
    scan = ineff.minimax_scan(2, [0, 0.5, 1])
    assert scan.best_x == 0.5
    assert scan.sup_values[1] < scan.sup_values[0] and scan.sup_values[1] < scan.sup_values[2]


def test_minimax_degenerate():
    scan = ineff.minimax_scan(1, [0, 0.25, 0.5])
    assert scan.degenerate and scan.best_x is None
    assert np.all(scan.sup_values == 1.0)


def test_minimax_requires_half():
    with pytest.raises(InvalidArgument):
        ineff.minimax_scan(5, [0, 0.4, 1])


def test_report():
    rep = ineff.ineff_report(0.5, 1.0, 2)
    assert rep.value == ineff.rho(0.5, 1.0, 2) and rep.K == 2 and rep.rule_exponent == 0.5
