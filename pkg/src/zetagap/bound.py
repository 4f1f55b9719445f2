"""Lower bounds for the largest normalized zero gap from moment constants."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import mpmath

from .model import AmplifierParams, MomentConstants, THETA_LIMIT, lambda0, to_fraction

__all__ = [
    "DPS",
    "BoundParams",
    "BoundResult",
    "lambda_bound",
    "hall_reduced_bound",
    "hall_reduced_bound_squared",
    "zmoment_coeff",
    "classical_k1_bound",
    "beesack_constant",
    "evaluate_bound",
]

DPS = 60
Real = Union[Fraction, mpmath.mpf]


def _rational_sqrt(q: Fraction) -> Fraction | None:
    if q < 0:
        return None
    n, d = q.numerator, q.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


def _mpf(x) -> mpmath.mpf:
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def lambda_bound(c, c1, c2, v, exact: bool = True) -> Real:
    """Squared gap bound ``(sqrt(144 v^2 c2^2 + 48 lambda0(v) c c1) - 12 v c2) / (16 c1)``.

    With rational inputs and ``exact`` set, a Fraction is returned whenever
    every square root involved is rational; otherwise a ``DPS``-digit real.
    """
    if c <= 0:
        raise ValueError("c must be positive; a non-positive value indicates an integration error")
    if c1 <= 0:
        raise ValueError("c1 must be positive at a valid parameter point")
    if v < 0:
        raise ValueError("v must be non-negative")
    if exact and all(isinstance(x, (Fraction, int)) for x in (c, c1, c2, v)):
        c, c1, c2, v = (Fraction(x) for x in (c, c1, c2, v))
        lam = lambda0(v)
        if isinstance(lam, Fraction):
            root = _rational_sqrt(144 * v * v * c2 * c2 + 48 * lam * c * c1)
            if root is not None:
                return (root - 12 * v * c2) / (16 * c1)
    with mpmath.workdps(DPS):
        cm, c1m, c2m, vm = (_mpf(x) for x in (c, c1, c2, v))
        lam = _mpf(lambda0(vm))
        disc = 144 * vm**2 * c2m**2 + 48 * lam * cm * c1m
        return (mpmath.sqrt(disc) - 12 * vm * c2m) / (16 * c1m)


def hall_reduced_bound_squared(v) -> Real:
    """``sqrt(49 v^2 + 105 lambda0(v)) - 7 v``, exact when possible."""
    lam = lambda0(v)
    if isinstance(lam, Fraction):
        v = to_fraction(v)
        root = _rational_sqrt(49 * v * v + 105 * lam)
        if root is not None:
            return root - 7 * v
    with mpmath.workdps(DPS):
        vm = _mpf(to_fraction(v)) if not isinstance(v, (float, mpmath.mpf)) else mpmath.mpf(v)
        lm = _mpf(lam)
        return mpmath.sqrt(49 * vm**2 + 105 * lm) - 7 * vm


def hall_reduced_bound(v) -> mpmath.mpf:
    """Gap bound ``sqrt(sqrt(49 v^2 + 105 lambda0(v)) - 7 v)`` for the unamplified fourth moment."""
    sq = hall_reduced_bound_squared(v)
    with mpmath.workdps(DPS):
        return mpmath.sqrt(_mpf(sq))


def zmoment_coeff(k: int) -> Fraction:
    """Leading coefficient of the mean square of the k-th derivative of Hardy's function."""
    if k < 0:
        raise ValueError("k must be non-negative")
    return Fraction(1, 4**k * (2 * k + 1))


def classical_k1_bound() -> mpmath.mpf:
    """Bound from the standard Wirtinger inequality: ``kappa^2 = m0 / (4 m1)``."""
    kappa_sq = zmoment_coeff(0) / (4 * zmoment_coeff(1))
    with mpmath.workdps(DPS):
        return mpmath.sqrt(_mpf(kappa_sq))


def beesack_constant(k: int) -> mpmath.mpf:
    """``(k sin(pi / 2k))^(2k) / (2k - 1)``, the L^(2k) Wirtinger constant."""
    if k < 1:
        raise ValueError("k must be positive")
    with mpmath.workdps(DPS):
        return (k * mpmath.sin(mpmath.pi / (2 * k))) ** (2 * k) / (2 * k - 1)


@dataclass(frozen=True)
class BoundParams:
    amplifier: AmplifierParams
    u: Fraction
    v: Fraction

    def __post_init__(self):
        object.__setattr__(self, "u", to_fraction(self.u))
        object.__setattr__(self, "v", to_fraction(self.v))
        if self.v < 0:
            raise ValueError("v must be non-negative")
        if not self.amplifier.theta < THETA_LIMIT:
            raise ValueError("theta must be below 1/8")


@dataclass(frozen=True)
class BoundResult:
    lambda_squared: mpmath.mpf
    lambda_: mpmath.mpf
    params: BoundParams
    c_values: tuple
    provenance: str = "exact"
    exact_lambda_squared: Fraction | None = None

    def as_record(self) -> dict:
        amp = self.params.amplifier
        rec = {
            "r": amp.r,
            "p_coeffs": [str(c) for c in amp.p_coeffs],
            "theta": str(amp.theta),
            "u": str(self.params.u),
            "v": str(self.params.v),
            "c": _num_str(self.c_values[0]),
            "c1": _num_str(self.c_values[1]),
            "c2": _num_str(self.c_values[2]),
            "lambda_squared": _num_str(self.exact_lambda_squared)
            if self.exact_lambda_squared is not None
            else mpmath.nstr(self.lambda_squared, 30),
            "lambda_squared_float": f"{float(self.lambda_squared):.6f}",
            "lambda": mpmath.nstr(self.lambda_, 30),
            "lambda_float": f"{float(self.lambda_):.6f}",
            "provenance": self.provenance,
        }
        return rec


def _num_str(x) -> str:
    if isinstance(x, Fraction):
        return str(x)
    return mpmath.nstr(_mpf(x), 30)


def evaluate_bound(params: BoundParams, constants: MomentConstants, provenance: str = "exact") -> BoundResult:
    """Evaluate ``(c, c1, c2)`` exactly at ``(u, theta)`` and apply :func:`lambda_bound`."""
    theta = params.amplifier.theta
    if constants.theta is not None and constants.theta != theta:
        raise ValueError("constants were computed at a different theta")
    values = constants.evaluate(params.u, None if constants.theta is not None else theta)
    sq = lambda_bound(*values, params.v)
    exact = sq if isinstance(sq, Fraction) else None
    with mpmath.workdps(DPS):
        sqm = _mpf(sq)
        return BoundResult(
            lambda_squared=sqm,
            lambda_=mpmath.sqrt(sqm),
            params=params,
            c_values=values,
            provenance=provenance,
            exact_lambda_squared=exact,
        )
