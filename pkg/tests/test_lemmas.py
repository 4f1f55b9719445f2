import math
from fractions import Fraction

import mpmath
import pytest

from zetagap.arith import divisor_d
from zetagap.lemmas import (
    LemmaPoint,
    LemmaReport,
    lemma_22_main_integral,
    lemma_23_main_term,
    verify_lemma_21,
    verify_lemma_22,
    verify_lemma_23,
)
from zetagap.lemmas import _lemma_22_lhs
from zetagap.region import integrate_t_monomial


def test_harmonic_case():
    rep = verify_lemma_21(1, ys=(10**2, 10**3, 10**4))
    for p in rep.points:
        assert float(p.lhs) == pytest.approx(math.fsum(1 / n for n in range(1, p.y + 1)), rel=1e-12)
        assert float(p.rhs_main) == pytest.approx(math.log(p.y), rel=1e-15)
        # the harmonic sum is log y + gamma + O(1/y)
        assert float(p.ratio) == pytest.approx(1 + 0.5772156649 / math.log(p.y), abs=1 / p.y)
    assert rep.converging


def test_lemma_21_second_order():
    rep = verify_lemma_21(2)
    ratios = [float(x) for x in rep.trend]
    assert abs(ratios[-1] - 1) < 0.2
    assert abs(ratios[-1] - 1) < abs(ratios[0] - 1)
    assert rep.converging and rep.decades >= 2


def test_lemma_21_with_test_functions_and_two_lengths():
    rep = verify_lemma_21(1, ys=(10**3, 10**4, 10**5), f=(0, 1), g=(1, Fraction(-1, 2)), y2_power=Fraction(5, 4))
    assert rep.converging


def test_lemma_21_argument_checks():
    with pytest.raises(ValueError):
        verify_lemma_21(1, ys=(50, 10**3))
    with pytest.raises(ValueError):
        verify_lemma_21(1, ys=(10**8,))
    with pytest.raises(ValueError):
        verify_lemma_21(1, y2_power=Fraction(1, 2))
    with pytest.raises(ValueError):
        verify_lemma_21(0)


def brute_quadruple(y):
    total = 0.0
    for n1 in range(1, y + 1):
        for n2 in range(1, y // n1 + 1):
            for n3 in range(1, y // n1 + 1):
                for n4 in range(1, min(y // n3, y // n2) + 1):
                    total += 1 / (n1 * n2 * n3 * n4)
    return total


@pytest.mark.parametrize("y", [100, 150])
def test_quadruple_sum_against_nested_loops(y):
    import numpy as np

    ones = [np.array([1.0])] * 4
    assert _lemma_22_lhs(1, y, ones) == pytest.approx(brute_quadruple(y), rel=1e-12)


def test_lemma_22_main_integral_is_polytope_volume():
    assert lemma_22_main_integral(1, [(1,)] * 4) == Fraction(1, 6)
    assert lemma_22_main_integral(2, [(1,)] * 4) == integrate_t_monomial(1, 1, 1, 1)


def test_lemma_22_trend():
    rep = verify_lemma_22()
    for p in rep.points:
        assert p.lhs > 0 and p.rhs_main > 0
        with mpmath.workdps(50):
            assert abs(p.rhs_main - mpmath.log(p.y) ** 4 / 6) < mpmath.mpf(10) ** -40
    assert abs(rep.points[-1].ratio - 1) < abs(rep.points[0].ratio - 1)
    assert rep.converging
    # frozen from the direct computation; the error term is one log power down, so y = 1000 is still far off
    assert float(rep.points[1].ratio) == pytest.approx(1.8616474426866, rel=1e-9)


def test_lemma_22_cap():
    with pytest.raises(ValueError):
        verify_lemma_22(ys=(10**2, 10**5))
    with pytest.raises(ValueError):
        verify_lemma_22(fs=[(1,)] * 3)


def test_lemma_23_divisor_sum_case():
    rep = verify_lemma_23(1, 0, 1, ys=(10**2, 10**3, 10**4))
    for p in rep.points:
        brute = math.fsum(divisor_d(2, m) / m for m in range(1, p.y + 1))
        assert float(p.lhs) == pytest.approx(brute, rel=1e-12)
        assert float(p.rhs_main) == pytest.approx(math.log(p.y) ** 2 / 2, rel=1e-14)
    assert rep.converging


def test_lemma_23_closed_form():
    y, n = 10**5, 7
    assert float(lemma_23_main_term(1, 1, n, y)) == pytest.approx(math.log(y / n) ** 3 / 6, rel=1e-14)
    assert float(lemma_23_main_term(2, 0, 1, y)) == pytest.approx(math.log(y) ** 4 / 24, rel=1e-14)


@pytest.mark.parametrize("r", [1, 2])
@pytest.mark.parametrize("j", [0, 1, 2])
def test_lemma_23_trends(r, j):
    assert verify_lemma_23(r, j).converging


def test_lemma_23_shifted_length():
    assert verify_lemma_23(1, 1, n=3).converging
    with pytest.raises(ValueError):
        verify_lemma_23(1, n=10**4, ys=(10**4, 10**5))


def test_convergence_needs_strict_improvement_over_two_decades():
    pts = [LemmaPoint(10**k, mpmath.mpf(v), mpmath.mpf(1)) for k, v in ((2, 1.5), (3, 1.3), (4, 1.1))]
    assert LemmaReport("x", {}, pts).converging
    assert not LemmaReport("x", {}, pts[:2]).converging
    bumpy = pts[:2] + [LemmaPoint(10**4, mpmath.mpf(1.4), mpmath.mpf(1))]
    assert not LemmaReport("x", {}, bumpy).converging
    narrow = [LemmaPoint(y, mpmath.mpf(v), mpmath.mpf(1)) for y, v in ((100, 1.5), (300, 1.3), (900, 1.1))]
    assert not LemmaReport("x", {}, narrow).converging
