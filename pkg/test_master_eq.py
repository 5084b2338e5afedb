"""
Tests for the master-equation solver, closed forms, the first-term
approximation and the ODE oracle
"""

import logging
import math

import numpy as np
import pytest
from scipy import stats

from core import PowerLaw, Tabulated
from ctmc_sim import aggregate_losers
from errors import DistinctnessError, DomainError, NumericalBreakdownError
from master_eq import (
    FLAG_BREAKDOWN,
    FLAG_OK,
    QUALITY_NEGATIVE,
    QUALITY_OK,
    QUALITY_UNRELIABLE,
    ApproxTerm,
    closed_form_negbin,
    closed_form_poisson,
    coefficient_rows,
    first_term_approx,
    mass_function,
    ode_oracle,
    ode_oracle_grid,
    pmf,
    pmf_table,
    predicted_tail,
    predicted_tail_curve,
    row_sum_residuals,
    solve_coefficients,
)
from replicas import make_rng
from suite_runner import run_tests

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

LN2 = math.log(2)


def test_hand_coefficients():
    sol = solve_coefficients(PowerLaw(1, 1), 1, 12)
    assert sol.coefficient(1, 1) == pytest.approx(1.0, rel=1e-15)
    assert sol.coefficient(2, 1) == pytest.approx(1.0, rel=1e-15)
    assert sol.coefficient(2, 2) == pytest.approx(-1.0, rel=1e-15)
    for t in (0.3, 1.0, 2.0):
        assert mass_function(sol, t, 2).p == pytest.approx(math.exp(-t) - math.exp(-2 * t), rel=1e-12)
    logger.info("✓ a_{2,1} = 1 and a_{2,2} = -1 under linear feedback")


def test_binomial_coefficients():
    """Linear feedback from one ball: a_{ω,i} = C(ω-1, i-1)(-1)^(i-1)"""
    sol = solve_coefficients(PowerLaw(1, 1), 1, 12)
    for omega in range(1, 13):
        for i in range(1, omega + 1):
            expected = math.comb(omega - 1, i - 1) * (-1) ** (i - 1)
            assert sol.coefficient(omega, i) == pytest.approx(expected, rel=1e-12)
    logger.info("✓ Recursion reproduces the binomial coefficients up to omega=12")


def test_initial_condition():
    for f, omega0 in [(PowerLaw(1, 1.4), 1), (PowerLaw(2, 2), 3), (Tabulated(values=(1.0, 2.5, 3.0, 7.0)), 1)]:
        sol = solve_coefficients(f, omega0, omega0 + 3)
        start = mass_function(sol, 0.0, omega0)
        assert start.p == pytest.approx(1.0, rel=1e-14)
        assert start.flag == FLAG_OK
        for omega in range(omega0 + 1, omega0 + 4):
            point = mass_function(sol, 0.0, omega)
            assert abs(point.p) <= 1e-8
            assert point.flag == FLAG_OK
        assert mass_function(sol, 1.5, omega0).p == pytest.approx(math.exp(-f.evaluate(omega0) * 1.5), rel=1e-13)
    logger.info("✓ p_0 is the indicator of omega0 and p_t(omega0) = exp(-f(omega0) t)")


def test_geometric_at_ln2():
    sol = solve_coefficients(PowerLaw(1, 1), 1, 10)
    assert mass_function(sol, LN2, 3).p == pytest.approx(0.125, rel=1e-12)
    for k in range(1, 11):
        assert mass_function(sol, LN2, k).p == pytest.approx(2.0 ** -k, abs=1e-12)


def test_closed_forms():
    assert closed_form_poisson(1, 1, 4, 4) == pytest.approx(math.exp(-1), rel=1e-14)
    assert closed_form_poisson(2, 0.5, 5, 4) == pytest.approx(math.exp(-1), rel=1e-14)
    assert math.fsum(closed_form_poisson(1.5, 2.0, w, 3) for w in range(3, 80)) == pytest.approx(1.0, abs=1e-12)
    assert closed_form_poisson(1, 0, 3, 3) == 1.0
    assert closed_form_poisson(1, 0, 4, 3) == 0.0

    assert closed_form_negbin(1, LN2, 4, 1) == pytest.approx(0.0625, rel=1e-12)
    assert closed_form_negbin(3, 0, 2, 2) == 1.0
    q = math.exp(-0.7)
    for w in range(1, 20):
        assert closed_form_negbin(1, 0.7, w, 1) == pytest.approx((1 - q) ** (w - 1) * q, rel=1e-12)
    expected = math.comb(6, 4) * (1 - math.exp(-0.4)) ** 4 * math.exp(-3 * 0.4)
    assert closed_form_negbin(1, 0.4, 7, 3) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(DomainError):
        closed_form_poisson(0, 1, 2, 1)
    with pytest.raises(DomainError):
        closed_form_negbin(1, 1, 1, 2)
    logger.info("✓ Poisson and negative binomial closed forms")


def test_closed_form_equivalence():
    """Constant feedback routes to Poisson; linear feedback matches the negative binomial to 1e-8"""
    omegas = list(range(1, 31))
    sol = solve_coefficients(PowerLaw(1, 1), 1, 30)
    worst = 0.0
    for t in (0.5, 1.0, 2.0, 3.0):
        for point in pmf(PowerLaw(1, 0), 1, t, omegas):
            assert abs(point.p - closed_form_poisson(1, t, point.omega, 1)) <= 1e-8
        for omega in omegas:
            diff = abs(mass_function(sol, t, omega).p - closed_form_negbin(1, t, omega, 1))
            worst = max(worst, diff)
    logger.info(f"✓ Linear feedback vs negative binomial: max abs diff {worst:.2e}")
    assert worst <= 1e-8


def test_constant_feedback_is_rejected_by_recursion():
    with pytest.raises(DistinctnessError):
        solve_coefficients(PowerLaw(1, 0), 1, 10)
    with pytest.raises(DistinctnessError):
        solve_coefficients(Tabulated(values=(1.0, 2.0, 1.0)), 1, 3)
    with pytest.raises(DomainError):
        solve_coefficients(PowerLaw(1, 1), 3, 2)
    points = pmf(PowerLaw(2, 0), 1, 1.0, [1, 2, 3])
    assert [p.p for p in points] == pytest.approx([closed_form_poisson(2, 1.0, w, 1) for w in (1, 2, 3)])
    logger.info("✓ Tied rates rejected; gamma=0 routed to the Poisson closed form")


def test_ode_oracle_matches_closed_forms():
    times = [0.5, 1.0, 2.0, 3.0]
    for f, closed in [(PowerLaw(1, 0), closed_form_poisson), (PowerLaw(1, 1), closed_form_negbin)]:
        for result in ode_oracle_grid(f, 1, times, 30):
            expected = np.array([closed(1, result.t, int(w), 1) for w in result.omegas])
            assert np.max(np.abs(result.p - expected)) <= 1e-8
            assert result.p.sum() + result.deficit == pytest.approx(1.0, abs=1e-9)
    logger.info("✓ ODE oracle matches the Poisson and negative binomial forms")


def test_ode_deficit_growth():
    result = ode_oracle(PowerLaw(1, 1), 1, 1.0, 20, deficit_target=1e-12)
    assert result.omega_max == 80
    assert result.deficit <= 1e-12
    assert result.omegas[-1] == 80
    fixed = ode_oracle(PowerLaw(1, 1), 1, 1.0, 20)
    assert fixed.omega_max == 20
    assert fixed.deficit == pytest.approx((1 - math.exp(-1)) ** 20, rel=1e-6)


def test_ode_oracle_matches_recursion():
    """
    γ in {1.2, 1.4, 2.0}, ω0 in {1, 2}, ω <= 200, t = 0.25..5 in steps of 0.25

    Breakdown-flagged points are left out of the comparison, but they must
    stay in the small-t corner and below a fifth of the grid.
    """
    times = [0.25 * k for k in range(1, 21)]
    for gamma in (1.2, 1.4, 2.0):
        f = PowerLaw(1, gamma)
        flag_free_from = 2.0 if gamma < 1.4 else 1.0
        for omega0 in (1, 2):
            sol = solve_coefficients(f, omega0, 200)
            worst, flagged, total = 0.0, 0, 0
            for result in ode_oracle_grid(f, omega0, times, 200):
                for omega, expected in zip(result.omegas.tolist(), result.p.tolist()):
                    point = mass_function(sol, result.t, omega)
                    total += 1
                    if point.flag == FLAG_BREAKDOWN:
                        assert result.t < flag_free_from, f"flagged at t={result.t}, omega={omega}"
                        flagged += 1
                        continue
                    worst = max(worst, abs(point.p - expected))
            logger.info(f"✓ gamma={gamma}, omega0={omega0}: max abs diff {worst:.2e}, {flagged}/{total} flagged")
            assert worst <= 1e-6
            assert flagged <= 0.2 * total


def test_product_form():
    """a_{ω,ω0} = Π_{j=ω0+1}^{ω} f(j-1) / (f(j) - f(ω0)) to 10 significant digits"""
    for gamma in (1.2, 1.4, 2.0):
        f = PowerLaw(1, gamma)
        for omega0 in (1, 2):
            sol = solve_coefficients(f, omega0, 100)
            base = f.evaluate(omega0)
            for omega in range(omega0, 101):
                log_product = math.fsum(
                    math.log(f.evaluate(j - 1)) - math.log(f.evaluate(j) - base) for j in range(omega0 + 1, omega + 1)
                )
                signs, log_abs = sol.row(omega)
                assert signs[0] == 1
                assert abs(log_abs[0] - log_product) <= 1e-10
    logger.info("✓ Recursion matches the product form of the leading coefficient")


def test_recursion_identity():
    """a_{ω,i}(f(ω) - f(i)) = f(ω-1) a_{ω-1,i} at random spots, in sign-log form"""
    f = PowerLaw(1, 1.4)
    sol = solve_coefficients(f, 1, 300)
    rng = make_rng(17)
    for _ in range(500):
        omega = int(rng.integers(2, 301))
        i = int(rng.integers(1, omega))
        signs, log_abs = sol.row(omega)
        prev_signs, prev_log_abs = sol.row(omega - 1)
        assert signs[i - 1] == prev_signs[i - 1]
        left = log_abs[i - 1] + math.log(f.evaluate(omega) - f.evaluate(i))
        right = math.log(f.evaluate(omega - 1)) + prev_log_abs[i - 1]
        assert abs(left - right) <= 1e-12 * max(1.0, abs(right))
    logger.info("✓ Recursion identity holds to 12 significant digits")


def test_row_sums():
    for f in (PowerLaw(1, 1.4), PowerLaw(1, 1), PowerLaw(2, 2.0)):
        sol = solve_coefficients(f, 1, 200)
        residuals = row_sum_residuals(sol)
        assert residuals.size == 200
        assert residuals.max() <= 1e-8
    logger.info("✓ Every coefficient row sums to zero within tolerance")


def test_sub_normalization():
    sol = solve_coefficients(PowerLaw(1, 1.4), 1, 100)
    for t in (1.0, 2.0, 3.0, 5.0):
        total = math.fsum(mass_function(sol, t, w).p for w in range(1, 101))
        assert total <= 1 + 1e-6
        assert total > 0
    logger.info("✓ Truncated pmf never exceeds total mass 1")


def test_mass_vanishes_at_long_times():
    sol = solve_coefficients(PowerLaw(1, 1.4), 1, 20)
    peaks = []
    for t in (10.0, 20.0, 40.0):
        values = [mass_function(sol, t, w) for w in range(1, 21)]
        assert all(v.flag == FLAG_OK for v in values)
        peaks.append(max(v.p for v in values))
    assert peaks[0] > peaks[1] > peaks[2]
    assert peaks[2] < 1e-12
    logger.info(f"✓ Peak mass {peaks} shrinks toward zero")


def test_strict_breakdown():
    sol = solve_coefficients(PowerLaw(1, 1), 1, 200)
    point = mass_function(sol, 1.0, 200)
    assert point.flag == FLAG_BREAKDOWN
    with pytest.raises(NumericalBreakdownError):
        mass_function(sol, 1.0, 200, strict=True)
    with pytest.raises(DomainError):
        mass_function(sol, -1.0, 5)
    with pytest.raises(DomainError):
        mass_function(sol, 1.0, 201)
    logger.info(f"✓ Catastrophic cancellation flagged (ratio {point.cancellation_ratio:.2e})")


def test_first_term_examples():
    approx = ApproxTerm(eta=1, gamma=1.4)
    assert first_term_approx(approx, 2.0, 1) == pytest.approx(math.exp(-2.0), rel=1e-14)
    third = ApproxTerm(eta=2, gamma=1.5, omega0=3)
    assert first_term_approx(third, 0.2, 3) == pytest.approx(math.exp(-2 * 3 ** 1.5 * 0.2), rel=1e-13)
    # ω² from one ball: α(ω) = 2 / (ω(ω+1))
    square = ApproxTerm(eta=1, gamma=2)
    for omega in (1, 2, 5, 40):
        assert first_term_approx(square, 0.3, omega) == pytest.approx(math.exp(-0.3) * 2 / (omega * (omega + 1)), rel=1e-12)
    assert approx.reliable
    assert not third.reliable
    with pytest.raises(DomainError):
        first_term_approx(third, 1.0, 2)
    with pytest.raises(DomainError):
        ApproxTerm(eta=1, gamma=0)


def test_first_term_quality():
    """η=1, γ=1.4, ω0=1, ω in [50, 300]; the 10% bound is asserted from t=3.5 on"""
    f = PowerLaw(1, 1.4)
    sol = solve_coefficients(f, 1, 300)
    approx = ApproxTerm(eta=1, gamma=1.4)
    omegas = list(range(50, 301))
    for t in np.arange(2.5, 5.01, 0.5):
        exact = np.array([mass_function(sol, t, w, strict=True).p for w in omegas])
        hats = approx.values(t, omegas)
        error = float(np.max(np.abs(hats - exact) / exact))
        logger.info(f"✓ t={t:.1f}: max relative error of first-term approximation {error:.4f}")
        if t >= 3.5:
            assert error <= 0.10
        else:
            assert error <= 0.35


def test_predicted_tail():
    square = ApproxTerm(eta=1, gamma=2)
    start = predicted_tail(square, 0.4, 1)
    assert start.value == 1.0
    assert start.quality == QUALITY_OK
    # 1 - e^{-t} · 2(1 - 1/ω), which is 1/ω at t = ln 2
    for omega in (2, 10, 1000):
        assert predicted_tail(square, LN2, omega).value == pytest.approx(1.0 / omega, rel=1e-9)
    low = predicted_tail(square, 0.1, 100)
    assert low.value == pytest.approx(1 - math.exp(-0.1) * 1.98, rel=1e-12)
    assert low.quality == QUALITY_NEGATIVE
    assert predicted_tail(square, 60.0, 500).value == pytest.approx(1.0, abs=1e-12)
    assert predicted_tail(ApproxTerm(1, 1.4, omega0=2), 3.0, 10).quality == QUALITY_UNRELIABLE
    logger.info("✓ Predicted tail examples")


def test_predicted_tail_increases_with_time():
    square = ApproxTerm(eta=1, gamma=2)
    times = [0.1 * k for k in range(1, 11)]
    for omega in (5, 10, 50, 100):
        values = [predicted_tail(square, t, omega).value for t in times]
        assert all(b > a for a, b in zip(values, values[1:]))
    curve = predicted_tail_curve(square, 0.5, [1, 2, 10, 100])
    for omega, prob in curve.points:
        assert prob == pytest.approx(predicted_tail(square, 0.5, omega).value, abs=1e-14)
    logger.info("✓ Predicted tail curves move up with t")


def test_regular_variation_of_approximation():
    """p̂_t(2ω)/p̂_t(ω) approaches 2^(-1.4)"""
    approx = ApproxTerm(eta=1, gamma=1.4)
    target = 2 ** -1.4
    gaps = []
    for omega in (10 ** 2, 10 ** 3, 10 ** 4, 10 ** 5):
        low, high = approx.log_values(2.0, [omega, 2 * omega])
        gaps.append(abs(math.exp(high - low) / target - 1))
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 0.01
    logger.info(f"✓ Ratio gaps {['%.4f' % g for g in gaps]}")


def test_pmf_table_rows():
    rows = pmf_table(PowerLaw(1, 1.4), 2, [1.0, 2.0], range(2, 12), approx=True)
    assert len(rows) == 20
    assert set(rows[0]) == {"omega", "t", "p", "flag", "p_hat", "approx_flag"}
    assert all(row["approx_flag"] == QUALITY_UNRELIABLE for row in rows)
    rows = pmf_table(PowerLaw(1, 0), 1, [1.0], range(1, 4))
    assert [row["p"] for row in rows] == pytest.approx([closed_form_poisson(1, 1.0, w, 1) for w in (1, 2, 3)])
    with pytest.raises(DomainError):
        pmf_table(Tabulated(values=(1.0, 2.0)), 1, [1.0], [1, 2], approx=True)
    sol = solve_coefficients(PowerLaw(1, 1), 1, 4)
    assert len(coefficient_rows(sol)) == 1 + 2 + 3 + 4


@pytest.mark.slow
def test_mass_function_matches_simulation():
    """
    Law of W_2 under ω^1.4 from the recursion against 10^5 simulated agents

    Cells run from ω=1 while the expected count stays >= 5 and the point is
    unflagged; everything above, including agents that reach the ball cap, is
    pooled into one tail cell.
    """
    f = PowerLaw(1, 1.4)
    n_sims, t, cap = 10 ** 5, 2.0, 1000
    sample = aggregate_losers(f, 1, t, cap, n_sims, seed=99)
    sol = solve_coefficients(f, 1, 400)

    expected = []
    for omega in range(1, 401):
        point = mass_function(sol, t, omega)
        if point.flag != FLAG_OK or n_sims * point.p < 5:
            break
        expected.append(n_sims * point.p)
    top = len(expected)
    assert top >= 10
    observed = [np.count_nonzero(sample.counts == omega) for omega in range(1, top + 1)]
    observed.append(n_sims - sum(observed))
    expected.append(n_sims - sum(expected))
    assert expected[-1] >= 5

    result = stats.chisquare(np.array(observed, dtype=float), np.array(expected))
    logger.info(f"✓ {top} cells plus tail, {sample.n_exploded} agents at the cap: p={result.pvalue:.4f}")
    assert result.pvalue > 1e-3


def main():
    """Run all tests"""
    tests = [
        ("Hand coefficients", test_hand_coefficients),
        ("Binomial coefficients", test_binomial_coefficients),
        ("Initial condition", test_initial_condition),
        ("Geometric at ln 2", test_geometric_at_ln2),
        ("Closed forms", test_closed_forms),
        ("Closed-form equivalence", test_closed_form_equivalence),
        ("Tied rates", test_constant_feedback_is_rejected_by_recursion),
        ("ODE vs closed forms", test_ode_oracle_matches_closed_forms),
        ("ODE deficit growth", test_ode_deficit_growth),
        ("ODE vs recursion", test_ode_oracle_matches_recursion),
        ("Product form", test_product_form),
        ("Recursion identity", test_recursion_identity),
        ("Row sums", test_row_sums),
        ("Sub-normalization", test_sub_normalization),
        ("Long-time limit", test_mass_vanishes_at_long_times),
        ("Strict breakdown", test_strict_breakdown),
        ("First-term examples", test_first_term_examples),
        ("First-term quality", test_first_term_quality),
        ("Predicted tail", test_predicted_tail),
        ("Predicted tail in t", test_predicted_tail_increases_with_time),
        ("Regular variation", test_regular_variation_of_approximation),
        ("pmf table", test_pmf_table_rows),
        ("Simulation agreement", test_mass_function_matches_simulation),
    ]
    return run_tests("Master Equation", tests)


if __name__ == "__main__":
    exit(main())
