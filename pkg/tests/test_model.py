from fractions import Fraction

import pytest
import sympy as sp

from zetagap.model import (
    THETA_LIMIT,
    AmplifierParams,
    ShiftVector,
    build_c1_integrand,
    build_c2_integrand,
    build_c_integrand,
    common_factors,
    compute_moment_basis,
    compute_moment_constants,
    integrand_factors,
    lambda0,
    phase_factors,
)
from zetagap.poly import MultiPoly, Var, product
from zetagap.region import integrate_region, region_volume

V = MultiPoly.variable
U, TH = Var.U, Var.THETA
VOL = region_volume()


def test_basic_integrand_at_theta_zero():
    params = AmplifierParams()
    assert build_c_integrand(params, theta=0) == (V("v1") - V("v2")) ** 2


def test_c_integrand_has_no_phase_variables():
    p = build_c_integrand(AmplifierParams())
    assert not p.variables() & {Var.V3, Var.V4, Var.U}


def test_r_controls_the_weight_exponents():
    weight = common_factors(AmplifierParams(r=2), theta=0)[-1]
    (mono, coeff), = list(weight)
    assert coeff == 1
    assert all(mono.exponents[v] == 1 for v in list(Var)[:8])
    assert all(mono.exponents[v] == 3 for v in (Var.T1, Var.T2, Var.T3, Var.T4))


def test_phase_factors_at_theta_zero():
    v1, v2, v3, v4, u = (V(n) for n in ("v1", "v2", "v3", "v4", "u"))
    d = v1 - v2
    assert phase_factors(theta=0) == (u - v1 + v3 * d, u - v2 - v3 * d, u - v1 + v4 * d, u - v2 - v4 * d)


def test_leading_u_coefficients_reproduce_c_integrand():
    params = AmplifierParams()
    assert build_c1_integrand(params, theta=0).coefficient(U, 4) == build_c_integrand(params, theta=0)
    assert build_c2_integrand(params).coefficient(U, 2) == build_c_integrand(params)


def test_integrand_factor_selection():
    params = AmplifierParams()
    assert len(integrand_factors("c", params)) == 8
    assert len(integrand_factors("c1", params)) == 12
    assert len(integrand_factors("c2", params)) == 10
    with pytest.raises(ValueError):
        integrand_factors("c3", params)


def theta_zero_oracle():
    """The theta = 0 constants reduce to integrals over (v1, v2) times the region volume."""
    u, a, b = sp.symbols("u v1 v2")
    d = a - b
    c = sp.integrate(d**2, (a, 0, 1), (b, 0, 1))
    c1 = sp.integrate(d**2 * ((u - a) * (u - b) + d**2 / 6) ** 2, (a, 0, 1), (b, 0, 1))
    c2 = sp.integrate(d**2 * (u - (a + b) / 2) ** 2, (a, 0, 1), (b, 0, 1))
    return u, c, c1, c2


def as_poly(expr, u):
    coeffs = sp.Poly(sp.expand(expr), u).all_coeffs()[::-1]
    return sum((V("u") ** k * Fraction(int(q.p), int(q.q)) for k, q in enumerate(coeffs)), MultiPoly())


def test_theta_zero_constants_against_symbolic_oracle(constants):
    u, c, c1, c2 = theta_zero_oracle()
    at0 = constants.at_theta(0)
    assert at0.c == MultiPoly.constant(VOL * Fraction(int(c.p), int(c.q)))
    assert at0.c1 == as_poly(c1, u).scale(VOL)
    assert at0.c2 == as_poly(c2, u).scale(VOL)


def test_hall_ratios(constants):
    c, c1, c2 = constants.evaluate(Fraction(1, 2), 0)
    assert c1 / c == Fraction(1, 560)
    assert c2 / c == Fraction(1, 60)
    assert c == Fraction(181, 15966720)


def test_golden_constants(constants, golden_constants):
    for name in ("c", "c1", "c2"):
        assert str(getattr(constants, name)) == golden_constants[name]


def test_degrees(constants):
    assert constants.c1.degree(U) == 4
    assert constants.c2.degree(U) == 2
    assert constants.c.degree(TH) <= 4
    assert constants.c.variables() <= {TH}


def test_c_positive_on_theta_range(constants):
    for k in range(125):
        theta = Fraction(k, 1000)
        assert constants.evaluate(0, theta)[0] > 0


# c1 at (theta, u) = (1/10, 3/5) computed once by expanding the full 16-variable
# integrand with u and theta substituted (no v3/v4 pre-integration, about 4 minutes)
C1_DIRECT = Fraction(782076144622139, 84475764172800000000000)


def test_c1_matches_slow_direct_expansion(constants):
    assert constants.evaluate(Fraction(3, 5), Fraction(1, 10))[1] == C1_DIRECT


@pytest.mark.parametrize("pair", [(0, 2), (0, 3), (1, 2), (1, 3)])
def test_c2_does_not_depend_on_phase_pair(constants, pair):
    theta, u = Fraction(1, 10), Fraction(3, 5)
    p = build_c2_integrand(AmplifierParams(theta=theta), theta=theta, pair=pair).substitute(U, u)
    assert integrate_region(p).as_constant() == constants.evaluate(u, theta)[2]


def test_fixed_theta_matches_symbolic(constants):
    params = AmplifierParams(theta=Fraction(1, 10))
    c = integrate_region(build_c_integrand(params, theta=params.theta)).as_constant()
    assert c == constants.evaluate(0, params.theta)[0]


def test_zero_theta_fast_path(constants):
    mc = compute_moment_constants(AmplifierParams(), symbolic_theta=False)
    assert mc.theta == 0
    assert mc.c1 == constants.at_theta(0).c1


def test_polynomial_amplifier_recombination():
    params = AmplifierParams(p_coeffs=(2, Fraction(-1, 3)))
    mc = compute_moment_constants(params, symbolic_theta=False)
    for name in ("c", "c1", "c2"):
        direct = integrate_region(product(integrand_factors(name, params, theta=0)))
        assert direct == getattr(mc, name)
    basis = compute_moment_basis(1, 2, theta=0)
    assert basis.constants(params.p_coeffs + (0,), 0).c2 == mc.c2


def test_scaling_amplifier_scales_constants_by_fourth_power():
    basis = compute_moment_basis(1, 1, theta=0)
    a = basis.constants((1, 2), 0)
    b = basis.constants((3, 6), 0)
    assert b.c == a.c.scale(81) and b.c1 == a.c1.scale(81)


@pytest.mark.parametrize("v, expected", [(0, Fraction(1, 4)), (1, Fraction(1)), (Fraction(22, 49), Fraction(121, 196))])
def test_lambda0_exact_values(v, expected):
    assert lambda0(v) == expected


def test_lambda0_irrational_and_errors():
    assert abs(lambda0(Fraction(1, 2)) - (3 + 5**0.5) / 8) < 1e-15
    assert abs(lambda0(0.5) - (3 + 5**0.5) / 8) < 1e-15
    with pytest.raises(ValueError):
        lambda0(-1)
    with pytest.raises(ValueError):
        lambda0(Fraction(-1, 3))


def test_parameter_validation():
    with pytest.raises(ValueError):
        AmplifierParams(theta=THETA_LIMIT)
    with pytest.raises(ValueError):
        AmplifierParams(theta=Fraction(-1, 100))
    with pytest.raises(ValueError):
        AmplifierParams(r=0)
    with pytest.raises(ValueError):
        AmplifierParams(p_coeffs=(0, 0))
    with pytest.raises(ValueError):
        AmplifierParams(p_coeffs=(1, -1)).p_normalized()
    assert AmplifierParams(p_coeffs=(2, 2)).p_normalized().p_coeffs == (Fraction(1, 2), Fraction(1, 2))


def test_only_zero_shifts_supported():
    ShiftVector()
    with pytest.raises(NotImplementedError):
        ShiftVector(alpha=(Fraction(1, 10), 0, 0, 0))


def test_symbolic_constants_need_theta(constants):
    with pytest.raises(ValueError):
        constants.evaluate(0)
    fixed = constants.at_theta(Fraction(1, 10))
    with pytest.raises(ValueError):
        fixed.evaluate(0, Fraction(1, 20))


def test_float_evaluator_matches_exact(constants):
    f = constants.float_evaluator()
    exact = constants.evaluate(Fraction(3, 5), Fraction(1249, 10000))
    approx = f(0.6, 0.1249)
    for e, a in zip(exact, approx):
        assert abs(float(e) - a) <= 1e-12 * abs(float(e))
