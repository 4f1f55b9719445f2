import itertools
import random
from fractions import Fraction
from math import factorial

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from zetagap.poly import MultiPoly, Var, rename
from zetagap.qmc import QmcConfig, qmc_estimate
from zetagap.region import (
    REGION,
    RegionSpec,
    TrianglePair,
    integrate_region,
    integrate_region_product,
    integrate_region_stepwise,
    integrate_t_monomial,
    integrate_triangle_pair,
    region_volume,
)

V = MultiPoly.variable
X1, Z1, T1, T3 = V("x1"), V("z1"), V("t1"), V("t3")
INTEGRATION_VARS = list(Var)[:16]


def beta(m, n):
    return Fraction(factorial(m - 1) * factorial(n - 1), factorial(m + n - 1))


def random_poly(rng, n_terms=6, max_exp=2, variables=INTEGRATION_VARS, params=False):
    terms = []
    pool = list(variables) + ([Var.U, Var.THETA] if params else [])
    for _ in range(n_terms):
        exps = {v: rng.randint(1, max_exp) for v in rng.sample(pool, rng.randint(0, 4))}
        terms.append((exps, Fraction(rng.randint(-9, 9), rng.randint(1, 5))))
    return MultiPoly.from_terms(terms)


@pytest.mark.parametrize(
    "p, expected",
    [
        (MultiPoly.constant(1), "s^2/2"),
        (X1, "s^3/6"),
        (X1 * Z1, "s^4/24"),
    ],
)
def test_triangle_pair_examples(p, expected):
    s = V("t2")
    out = integrate_triangle_pair(p, Var.X1, Var.Z1, s)
    want = {"s^2/2": s**2 * Fraction(1, 2), "s^3/6": s**3 * Fraction(1, 6), "s^4/24": s**4 * Fraction(1, 24)}
    assert out == want[expected]


def test_triangle_pair_with_polynomial_budget():
    out = integrate_triangle_pair(MultiPoly.constant(1), Var.X1, Var.Z1, 1 - T1 - T3)
    assert out == (1 - T1 - T3) ** 2 * Fraction(1, 2)


def test_triangle_budget_must_not_involve_the_pair():
    with pytest.raises(ValueError):
        integrate_triangle_pair(X1, Var.X1, Var.Z1, 1 - X1)


@given(st.integers(0, 6), st.integers(0, 6), st.integers(0, 4))
def test_triangle_dirichlet_kernel(a, b, c):
    s = V("t2")
    slack = 1 - X1 - Z1
    p = X1**a * Z1**b * slack**c
    out = integrate_triangle_pair(p, Var.X1, Var.Z1, MultiPoly.constant(1))
    want = Fraction(factorial(a) * factorial(b) * factorial(c), factorial(a + b + c + 2))
    assert out == MultiPoly.constant(want)
    scaled = integrate_triangle_pair(X1**a * Z1**b, Var.X1, Var.Z1, s)
    assert scaled == s ** (a + b + 2) * Fraction(factorial(a) * factorial(b), factorial(a + b + 2))


def test_t_polytope_examples():
    assert integrate_t_monomial(0, 0, 0, 0) == Fraction(1, 6)
    assert integrate_t_monomial(1, 0, 0, 0) == Fraction(1, 20)


def test_t_monomials_match_beta_closed_form():
    for a, b, c, d in itertools.product(range(5), repeat=4):
        want = beta(b + c + 2, a + d + 3) * (b + c + 2) / ((a + 1) * (b + 1) * (c + 1) * (d + 1))
        assert integrate_t_monomial(a, b, c, d) == want


def test_t_monomial_symmetries():
    for a, b, c, d in itertools.product(range(7), repeat=4):
        val = integrate_t_monomial(a, b, c, d)
        assert val == integrate_t_monomial(a, c, b, d)
        assert val == integrate_t_monomial(d, b, c, a)
        assert val == integrate_t_monomial(b, a, d, c)
        assert val > 0


@pytest.mark.parametrize("exps", [(0, 0, 0, 0), (1, 0, 0, 0), (2, 1, 0, 3), (0, 2, 2, 1)])
def test_t_monomial_against_numeric_quadrature(exps):
    a, b, c, d = exps

    def f(t4, t3, t2, t1):
        return t1**a * t2**b * t3**c * t4**d

    # split at t3 = t2 so each piece has smooth limits
    below = [lambda t3, t2, t1: (0, 1 - t2), lambda t2, t1: (0, t2), lambda t1: (0, 1 - t1), (0, 1)]
    above = [lambda t3, t2, t1: (0, 1 - t3), lambda t2, t1: (t2, 1 - t1), lambda t1: (0, 1 - t1), (0, 1)]
    opts = {"epsabs": 1e-12, "epsrel": 1e-10}
    val = integrate.nquad(f, below, opts=opts)[0] + integrate.nquad(f, above, opts=opts)[0]
    assert abs(val - float(integrate_t_monomial(a, b, c, d))) < 1e-9


def test_volume_golden():
    assert region_volume() == Fraction(181, 2661120)


def test_volume_against_sampling():
    est = qmc_estimate(MultiPoly.constant(1), QmcConfig(sample_count=200_000, seed=11))
    assert est.agrees_with(float(region_volume()))


def test_square_difference_of_box_variables():
    p = (V("v1") - V("v2")) ** 2
    assert integrate_region(p) == MultiPoly.constant(region_volume() / 6)


def test_every_pair_order_agrees():
    rng = random.Random(7)
    p = random_poly(rng, n_terms=5, params=True)
    first = integrate_region_stepwise(p)
    for order in itertools.permutations(range(4)):
        assert integrate_region_stepwise(p, order) == first
    assert integrate_region(p) == first


def test_fast_path_matches_stepwise_with_slack():
    rng = random.Random(8)
    p = random_poly(rng, n_terms=5)
    slack = (1, 0, 2, 1)
    weight = MultiPoly.constant(1)
    for pair, e in zip(REGION.pairs, slack):
        weight = weight * (pair.budget() - V(pair.x) - V(pair.z)) ** e
    assert integrate_region(p, slack) == integrate_region_stepwise(p * weight)


def test_product_pipeline_matches_direct():
    rng = random.Random(9)
    p = random_poly(rng, n_terms=8, params=True)
    q = random_poly(rng, n_terms=8)
    assert integrate_region_product(p, q, chunk_terms=5) == integrate_region(p * q)
    patterns = [(0, 0, 0, 0), (1, 1, 0, 0), (0, 2, 1, 1)]
    split = integrate_region_product(p, q, slacks=patterns, chunk_terms=7)
    assert split == [integrate_region(p * q, s) for s in patterns]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.fractions(-3, 3, max_denominator=7))
def test_linearity(seed, lam):
    rng = random.Random(seed)
    p = random_poly(rng, n_terms=4)
    q = random_poly(rng, n_terms=4)
    assert integrate_region(p * lam + q) == integrate_region(p) * lam + integrate_region(q)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_swapping_pair_coordinates_preserves_integral(seed):
    # each constraint depends on x_k + z_k only, so swapping x and z is a symmetry
    rng = random.Random(seed)
    p = random_poly(rng, n_terms=5, max_exp=3)
    swap = {f"x{k}": f"z{k}" for k in range(1, 5)} | {f"z{k}": f"x{k}" for k in range(1, 5)}
    assert integrate_region(rename(p, swap)) == integrate_region(p)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_box_variables_are_exchangeable(seed):
    rng = random.Random(seed)
    p = random_poly(rng, n_terms=5, max_exp=3)
    perm = dict(zip(["v1", "v2", "v3", "v4"], rng.sample(["v1", "v2", "v3", "v4"], 4)))
    assert integrate_region(rename(p, perm)) == integrate_region(p)


def test_integral_keeps_parameters():
    p = V("u") ** 2 * V("theta") * V("x1")
    out = integrate_region(p)
    assert out.variables() == {Var.U, Var.THETA}


def test_membership():
    assert REGION.contains({v.label: 0 for v in INTEGRATION_VARS})
    pt = {v.label: 0 for v in INTEGRATION_VARS}
    pt.update(t1=Fraction(1, 2), t3=Fraction(1, 4), x1=Fraction(1, 4), z1=Fraction(1, 100))
    assert not REGION.contains(pt)


def test_region_spec_validation():
    pairs = list(REGION.pairs)
    pairs[0] = TrianglePair(Var.X2, Var.Z1, pairs[0].t)
    with pytest.raises(ValueError):
        RegionSpec(tuple(pairs))
    with pytest.raises(ValueError):
        RegionSpec(tuple(REGION.pairs[:3]))
