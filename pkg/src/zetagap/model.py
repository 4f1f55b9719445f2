"""Integrands and moment constants of the amplified fourth moment at zero shifts.

At zero shifts the moment constant is an integral over the 16-variable region
of a polynomial built from a handful of linear and bilinear factors.  The three
constants used by the gap bound are

* ``c``: the common factors alone,
* ``c1(u)``: the common factors times four phase factors ``Q1 Q2 Q3 Q4``,
* ``c2(u)``: the common factors times the two phase factors ``Q1 Q3``.

They are computed once per amplifier (``r`` and ``P``) as exact polynomials in
``u`` and ``theta``; every later parameter move is a polynomial evaluation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath

from .arith import divisor_d, euler_a
from .poly import MultiPoly, Var, product
from .region import REGION, integrate_region, integrate_region_product

__all__ = [
    "AmplifierParams",
    "ShiftVector",
    "MomentConstants",
    "common_factors",
    "phase_factors",
    "p_factors",
    "integrand_factors",
    "build_c_integrand",
    "build_c1_integrand",
    "build_c2_integrand",
    "MomentBasis",
    "compute_moment_basis",
    "compute_moment_constants",
    "slack_patterns",
    "lambda0",
    "divisor_d",
    "euler_a",
    "THETA_LIMIT",
]

THETA_LIMIT = Fraction(1, 8)


def to_fraction(value) -> Fraction:
    """Exact rational from ints, Fractions, gmpy2 rationals or strings like '0.1249'."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if hasattr(value, "numerator") and hasattr(value, "denominator"):
        return Fraction(int(value.numerator), int(value.denominator))
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


@dataclass(frozen=True)
class AmplifierParams:
    r: int = 1
    p_coeffs: tuple[Fraction, ...] = (Fraction(1),)
    theta: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "p_coeffs", tuple(to_fraction(c) for c in self.p_coeffs))
        object.__setattr__(self, "theta", to_fraction(self.theta))
        if not isinstance(self.r, int) or self.r < 1:
            raise ValueError("r must be a positive integer")
        if not any(self.p_coeffs):
            raise ValueError("P must not be identically zero")
        if not 0 <= self.theta < THETA_LIMIT:
            raise ValueError("theta must lie in [0, 1/8)")

    @property
    def p_degree(self) -> int:
        nz = [j for j, c in enumerate(self.p_coeffs) if c]
        return nz[-1]

    def p_normalized(self) -> "AmplifierParams":
        """Rescale P so that P(1) = 1 (the bound is invariant under scaling P)."""
        total = sum(self.p_coeffs)
        if total == 0:
            raise ValueError("P(1) = 0 cannot be normalized")
        return AmplifierParams(self.r, tuple(c / total for c in self.p_coeffs), self.theta)

    def with_theta(self, theta) -> "AmplifierParams":
        return AmplifierParams(self.r, self.p_coeffs, to_fraction(theta))


@dataclass(frozen=True)
class ShiftVector:
    """Shifts ``alpha, beta``; only the zero vector is supported."""

    alpha: tuple[Fraction, ...] = (Fraction(0),) * 4
    beta: tuple[Fraction, ...] = (Fraction(0),) * 4

    def __post_init__(self):
        if len(self.alpha) != 4 or len(self.beta) != 4:
            raise ValueError("shift vectors have four components each")
        if any(self.alpha) or any(self.beta):
            raise NotImplementedError("only zero shifts are supported")


@dataclass(frozen=True)
class MomentConstants:
    """``c`` (in theta), ``c1`` and ``c2`` (in u, theta) as exact polynomials.

    When computed at a fixed theta, ``theta`` records that value and the
    polynomials no longer contain the theta variable.
    """

    c: MultiPoly
    c1: MultiPoly
    c2: MultiPoly
    params: AmplifierParams = field(default_factory=AmplifierParams)
    theta: Fraction | None = None

    def evaluate(self, u, theta=None) -> tuple[Fraction, Fraction, Fraction]:
        u = to_fraction(u)
        if self.theta is not None:
            if theta is not None and to_fraction(theta) != self.theta:
                raise ValueError(f"constants were computed at theta = {self.theta}")
            theta = self.theta
        else:
            if theta is None:
                raise ValueError("theta is required for symbolic constants")
            theta = to_fraction(theta)
        point = {Var.U: u, Var.THETA: theta}
        return tuple(p.evaluate(point) for p in (self.c, self.c1, self.c2))

    def at_theta(self, theta) -> "MomentConstants":
        """Substitute a fixed theta."""
        theta = to_fraction(theta)
        if self.theta is not None:
            if theta != self.theta:
                raise ValueError(f"constants were computed at theta = {self.theta}")
            return self
        polys = [p.substitute(Var.THETA, theta) for p in (self.c, self.c1, self.c2)]
        return MomentConstants(*polys, params=self.params.with_theta(theta), theta=theta)

    def float_evaluator(self):
        """Fast float evaluation ``(u, theta) -> (c, c1, c2)`` for optimizer inner loops."""
        tables = [_float_rows(p) for p in (self.c, self.c1, self.c2)]
        fixed = float(self.theta) if self.theta is not None else None

        def f(u: float, theta: float | None = None):
            th = fixed if fixed is not None else theta
            return tuple(_eval_rows(rows, u, th) for rows in tables)

        return f


def _v(v: Var) -> MultiPoly:
    return MultiPoly.variable(v)


def _sum(*vs: Var) -> MultiPoly:
    return MultiPoly({1 << (8 * int(v)): 1 for v in vs})


_XS = (Var.X1, Var.X2, Var.X3, Var.X4)
_ZS = (Var.Z1, Var.Z2, Var.Z3, Var.Z4)


def _building_blocks(theta=None):
    th = _v(Var.THETA) if theta is None else MultiPoly.constant(to_fraction(theta))
    v1, v2 = _v(Var.V1), _v(Var.V2)
    sx, sz = _sum(*_XS), _sum(*_ZS)
    one_x = 1 - th * sx
    one_z = 1 - th * sz
    cross = v2 * sz - v1 * sx
    d1 = v1 - v2 + th * (_sum(Var.X1, Var.X2) - _sum(Var.Z1, Var.Z2) + cross)
    d2 = v1 - v2 + th * (_sum(Var.X3, Var.X4) - _sum(Var.Z3, Var.Z4) + cross)
    return th, one_x, one_z, d1, d2


def common_factors(params: AmplifierParams, theta=None) -> list[MultiPoly]:
    """Factors shared by all three constants, excluding the P factors.

    ``theta=None`` keeps theta symbolic; otherwise it is substituted.
    """
    _, one_x, one_z, d1, d2 = _building_blocks(theta)
    r = params.r
    weight = {v: r - 1 for v in _XS + _ZS}
    weight.update({t: r * r - 1 for t in (Var.T1, Var.T2, Var.T3, Var.T4)})
    return [one_x * one_z, d1, d2, MultiPoly.monomial(weight)]


def phase_factors(theta=None) -> tuple[MultiPoly, MultiPoly, MultiPoly, MultiPoly]:
    """The four factors linear in ``u``; ``c1`` uses all four, ``c2`` the first and third."""
    th, one_x, one_z, d1, d2 = _building_blocks(theta)
    u = _v(Var.U)
    v1, v2, v3, v4 = (_v(v) for v in (Var.V1, Var.V2, Var.V3, Var.V4))
    q1 = u - th * _sum(Var.T1, Var.T2, Var.X1, Var.X2, Var.X3, Var.Z3) - v1 * one_x + v3 * d1
    q2 = u - th * _sum(Var.T3, Var.T4, Var.X4, Var.Z1, Var.Z2, Var.Z4) - v2 * one_z - v3 * d1
    q3 = u - th * _sum(Var.T1, Var.T3, Var.X1, Var.X3, Var.X4, Var.Z1) - v1 * one_x + v4 * d2
    q4 = u - th * _sum(Var.T2, Var.T4, Var.X2, Var.Z2, Var.Z3, Var.Z4) - v2 * one_z - v4 * d2
    return q1, q2, q3, q4


def p_factors(params: AmplifierParams) -> list[MultiPoly]:
    """``P(1 - t_i - t_j - x_k - z_k)`` for each region constraint."""
    out = []
    for pair in REGION.pairs:
        slack = pair.budget() - _v(pair.x) - _v(pair.z)
        acc = MultiPoly()
        power = MultiPoly.constant(1)
        for j, c in enumerate(params.p_coeffs):
            if j:
                power = power * slack
            if c:
                acc = acc + power.scale(c)
        out.append(acc)
    return out


def _c_factors(params, theta=None):
    return common_factors(params, theta) + p_factors(params)


def integrand_factors(which: str, params: AmplifierParams, u=None, theta=None) -> list[MultiPoly]:
    """Unexpanded factors of the ``c``, ``c1`` or ``c2`` integrand.

    ``theta`` and ``u`` are substituted when given, which is what the sampling
    cross-check needs.
    """
    factors = _c_factors(params, theta)
    if which == "c1":
        factors += list(phase_factors(theta))
    elif which == "c2":
        q = phase_factors(theta)
        factors += [q[0], q[2]]
    elif which != "c":
        raise ValueError("which must be one of 'c', 'c1', 'c2'")
    if u is not None:
        factors = [f.substitute(Var.U, to_fraction(u)) for f in factors]
    return factors


def build_c_integrand(params: AmplifierParams, theta=None) -> MultiPoly:
    return product(_c_factors(params, theta))


def build_c1_integrand(params: AmplifierParams, theta=None) -> MultiPoly:
    return product(_c_factors(params, theta) + list(phase_factors(theta)))


def build_c2_integrand(params: AmplifierParams, theta=None, pair: tuple[int, int] = (0, 2)) -> MultiPoly:
    """``c2`` integrand; ``pair`` selects which two phase factors (default Q1, Q3).

    Region symmetry makes the choices (Q1,Q3), (Q1,Q4), (Q2,Q3), (Q2,Q4) give
    the same integral.
    """
    q = phase_factors(theta)
    return product(_c_factors(params, theta) + [q[pair[0]], q[pair[1]]])


def slack_patterns(degree: int) -> list[tuple[int, int, int, int]]:
    """All exponent patterns ``(j1..j4)`` with ``0 <= j_k <= degree``."""
    return list(itertools.product(range(degree + 1), repeat=4))


def pattern_weight(p_coeffs: Sequence, pattern: Sequence[int]):
    return math.prod(p_coeffs[j] if j < len(p_coeffs) else 0 for j in pattern)


@dataclass(frozen=True)
class MomentBasis:
    """Constants for every slack pattern of a degree-``degree`` P, at fixed ``r``.

    The four P factors are ``prod_k sum_j c_j s_k^j`` with slacks
    ``s_k = 1 - t_i - t_j - x_k - z_k``, so each constant is a quartic form in
    the coefficients of P whose coefficients are the per-pattern integrals
    stored here.  Changing P is then a cheap recombination.
    """

    r: int
    degree: int
    parts: dict

    def constants(self, p_coeffs: Sequence, theta=None) -> MomentConstants:
        coeffs = tuple(to_fraction(c) for c in p_coeffs)
        if len(coeffs) > self.degree + 1 and any(coeffs[self.degree + 1 :]):
            raise ValueError(f"P has degree above the basis degree {self.degree}")
        totals = [MultiPoly(), MultiPoly(), MultiPoly()]
        for pattern, polys in self.parts.items():
            w = pattern_weight(coeffs, pattern)
            if w:
                totals = [t + p.scale(w) for t, p in zip(totals, polys)]
        params = AmplifierParams(self.r, coeffs or (Fraction(1),), theta if theta is not None else 0)
        mc = MomentConstants(*totals, params=params)
        return mc.at_theta(theta) if theta is not None else mc

    def float_evaluator(self):
        """``(p_coeffs, u, theta) -> (c, c1, c2)`` in floats."""
        tables = {
            pattern: [_float_rows(p) for p in polys] for pattern, polys in self.parts.items()
        }

        def f(p_coeffs, u: float, theta: float):
            out = [0.0, 0.0, 0.0]
            for pattern, rows3 in tables.items():
                w = math.prod(p_coeffs[j] for j in pattern)
                if w:
                    for i, rows in enumerate(rows3):
                        out[i] += w * _eval_rows(rows, u, theta)
            return tuple(out)

        return f


def _float_rows(p: MultiPoly):
    rows = []
    for mono, coeff in p:
        e = mono.exponents
        rows.append((float(coeff), e.get(Var.U, 0), e.get(Var.THETA, 0)))
    return rows


def _eval_rows(rows, u: float, theta: float) -> float:
    return sum(c * u**a * theta**b for c, a, b in rows)


def compute_moment_basis(r: int = 1, degree: int = 0, patterns=None, theta=None) -> MomentBasis:
    """Exact per-pattern ``(c, c1, c2)`` as polynomials in ``(u, theta)``.

    The P factors are never expanded: the slack powers are absorbed by the
    region integrator in closed form.  The phase factors involve ``v3`` only
    through ``Q1 Q2`` and ``v4`` only through ``Q3 Q4``, so those variables are
    integrated out before the large product is formed.

    ``theta`` substitutes a fixed value before integrating.  That is only a
    win for ``theta = 0``; other rationals inflate the coefficients and make
    integration slower than keeping theta symbolic.
    """
    params = AmplifierParams(r=r)
    patterns = slack_patterns(degree) if patterns is None else [tuple(p) for p in patterns]
    base = product(common_factors(params, theta))
    c_parts = [integrate_region(base, slack=s) for s in patterns]
    q1, q2, q3, q4 = phase_factors(theta)
    g12 = (q1 * q2).integrate_unit_box(Var.V3)
    g34 = (q3 * q4).integrate_unit_box(Var.V4)
    g13 = (q1 * q3).integrate_unit_box(Var.V3).integrate_unit_box(Var.V4)
    c2_parts = integrate_region_product(base, g13, patterns)
    c1_parts = integrate_region_product(base, g12 * g34, patterns)
    parts = {s: (c, c1, c2) for s, c, c1, c2 in zip(patterns, c_parts, c1_parts, c2_parts)}
    return MomentBasis(r=r, degree=max(max(s) for s in patterns), parts=parts)


def compute_moment_constants(params: AmplifierParams, symbolic_theta: bool = True) -> MomentConstants:
    """Exact ``(c, c1, c2)`` for one amplifier.

    With ``symbolic_theta`` the results are polynomials in ``(u, theta)``;
    otherwise ``params.theta`` is substituted after integration (before it,
    when theta is 0).  Integrating with theta kept symbolic is cheaper than
    with a nonzero rational theta because the coefficients stay small.
    """
    support = [j for j, c in enumerate(params.p_coeffs) if c]
    patterns = list(itertools.product(support, repeat=4))
    early = not symbolic_theta and params.theta == 0
    basis = compute_moment_basis(params.r, patterns=patterns, theta=0 if early else None)
    mc = basis.constants(params.p_coeffs)
    if early:
        return MomentConstants(mc.c, mc.c1, mc.c2, params=params, theta=params.theta)
    mc = MomentConstants(mc.c, mc.c1, mc.c2, params=params)
    return mc if symbolic_theta else mc.at_theta(params.theta)


def lambda0(v, dps: int = 60):
    """``(1 + 4v + sqrt(1 + 8v)) / 8``.

    Returns a Fraction when ``1 + 8v`` is the square of a rational, otherwise an
    mpmath real at ``dps`` digits.
    """
    exact = isinstance(v, (int, Fraction, str)) or (
        hasattr(v, "numerator") and not isinstance(v, float)
    )
    if exact:
        v = to_fraction(v)
        if v < 0:
            raise ValueError("v must be non-negative")
        disc = 1 + 8 * v
        rn, rd = math.isqrt(disc.numerator), math.isqrt(disc.denominator)
        if rn * rn == disc.numerator and rd * rd == disc.denominator:
            return (1 + 4 * v + Fraction(rn, rd)) / 8
        with mpmath.workdps(dps):
            vm = mpmath.mpf(v.numerator) / v.denominator
            return (1 + 4 * vm + mpmath.sqrt(1 + 8 * vm)) / 8
    with mpmath.workdps(dps):
        vm = mpmath.mpf(v)
        if vm < 0:
            raise ValueError("v must be non-negative")
        return (1 + 4 * vm + mpmath.sqrt(1 + 8 * vm)) / 8
