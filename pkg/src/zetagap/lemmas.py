"""Brute-force checks of three divisor-sum asymptotics at zero shifts.

Each check compares a directly summed left-hand side with the main term of
its asymptotic formula at several sizes ``y`` and reports whether the ratio
moves toward 1.  The error terms are only one logarithm smaller than the main
terms, so the checks are about trends, not tight agreement.

Direct sums are accumulated in double precision with ``math.fsum``; main terms
use exact polynomial integration and 50-digit reals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import mpmath
import numpy as np
from numpy.polynomial import polynomial as npoly

from .arith import divisor_table
from .poly import MultiPoly, Var
from .region import integrate_t_monomial

__all__ = [
    "LemmaPoint",
    "LemmaReport",
    "divisor_sum_with_weights",
    "verify_lemma_21",
    "verify_lemma_22",
    "verify_lemma_23",
    "lemma_22_main_integral",
    "MAX_Y",
    "MAX_Y_QUADRUPLE",
    "MIN_Y",
]

MAX_Y = 10**7
MAX_Y_QUADRUPLE = 10**4
MIN_Y = 10**2
DPS = 50

Poly1 = Sequence  # coefficients c_0, c_1, ... of a one-variable polynomial


@dataclass(frozen=True)
class LemmaPoint:
    y: int
    lhs: mpmath.mpf
    rhs_main: mpmath.mpf

    @property
    def ratio(self) -> mpmath.mpf:
        return self.lhs / self.rhs_main

    def as_record(self) -> dict:
        return {
            "y": self.y,
            "lhs": mpmath.nstr(self.lhs, 20),
            "rhs_main": mpmath.nstr(self.rhs_main, 20),
            "ratio": mpmath.nstr(self.ratio, 12),
        }


@dataclass
class LemmaReport:
    lemma: str
    params: dict
    points: list = field(default_factory=list)

    @property
    def trend(self) -> list:
        return [p.ratio for p in self.points]

    @property
    def decades(self) -> float:
        ys = [p.y for p in self.points]
        return math.log10(max(ys) / min(ys)) if ys else 0.0

    @property
    def converging(self) -> bool:
        """Each successive ``|ratio - 1|`` strictly smaller, over at least two decades."""
        gaps = [abs(r - 1) for r in self.trend]
        return (
            len(gaps) >= 3
            and self.decades >= 2 - 1e-9
            and all(b < a for a, b in zip(gaps, gaps[1:]))
        )

    def as_record(self) -> dict:
        return {
            "lemma": self.lemma,
            "params": self.params,
            "points": [p.as_record() for p in self.points],
            "converging": self.converging,
        }


def _check_ys(ys: Sequence[int], cap: int) -> list[int]:
    ys = sorted(int(y) for y in ys)
    if not ys:
        raise ValueError("need at least one y")
    if ys[0] < MIN_Y:
        raise ValueError(f"y = {ys[0]} is too small for a trend; use y >= {MIN_Y}")
    if ys[-1] > cap:
        raise ValueError(f"y = {ys[-1]} exceeds the cap {cap}")
    return ys


@lru_cache(maxsize=8)
def _weights(r: int, limit: int) -> np.ndarray:
    """``d_r(n) / n`` for ``n = 0..limit`` (entry 0 is 0)."""
    d = divisor_table(r, limit).astype(float)
    n = np.arange(limit + 1, dtype=float)
    n[0] = 1.0
    return d / n


def divisor_sum_with_weights(r: int, y: int, fn) -> float:
    """``sum_{n <= y} d_r(n)/n * fn(n)`` with ``fn`` vectorized over ``n``."""
    w = _weights(r, y)[1 : y + 1]
    n = np.arange(1, y + 1, dtype=float)
    return math.fsum(w * fn(n))


def _fr_poly(coeffs: Poly1) -> list[Fraction]:
    return [Fraction(c) for c in coeffs] or [Fraction(0)]


def _mp(q: Fraction) -> mpmath.mpf:
    return mpmath.mpf(q.numerator) / q.denominator


def _shift_reflect(coeffs: Sequence, scale) -> list:
    """Coefficients in ``t`` of ``f(1 - scale*t)``."""
    out = [0] * len(coeffs)
    for k, c in enumerate(coeffs):
        for i in range(k + 1):
            out[i] += c * math.comb(k, i) * (-scale) ** i
    return out


def _poly_mul(a: Sequence, b: Sequence) -> list:
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def verify_lemma_21(
    r: int,
    ys: Sequence[int] = (10**4, 10**5, 10**6),
    f: Poly1 = (1,),
    g: Poly1 = (1,),
    y2_power: Fraction = Fraction(1),
) -> LemmaReport:
    """Weighted sum of ``d_r(n)/n`` against ``(log y1)^r/(r-1)! * ∫ t^(r-1) f(1-t) g(1 - t log y1/log y2) dt``.

    ``y2 = y1 ** y2_power`` (rounded down, ``y2_power >= 1``).
    """
    if r < 1:
        raise ValueError("r must be positive")
    y2_power = Fraction(y2_power)
    if y2_power < 1:
        raise ValueError("y2_power must be at least 1 so that y1 <= y2")
    ys = _check_ys(ys, MAX_Y)
    fq, gq = _fr_poly(f), _fr_poly(g)
    ff = np.array([float(c) for c in fq])
    gf = np.array([float(c) for c in gq])
    report = LemmaReport("2.1", {"r": r, "f": [str(c) for c in fq], "g": [str(c) for c in gq], "y2_power": str(y2_power)})
    for y1 in ys:
        y2 = int(math.floor(y1 ** float(y2_power) + 1e-9))
        if y2 > MAX_Y:
            raise ValueError(f"y2 = {y2} exceeds the cap {MAX_Y}")
        l1, l2 = math.log(y1), math.log(y2)

        def weight(n, l1=l1, l2=l2, y1=y1, y2=y2):
            return npoly.polyval(np.log(y1 / n) / l1, ff) * npoly.polyval(np.log(y2 / n) / l2, gf)

        lhs = mpmath.mpf(divisor_sum_with_weights(r, y1, weight))
        with mpmath.workdps(DPS):
            rho = mpmath.log(y1) / mpmath.log(y2)
            integrand = _poly_mul(_shift_reflect([_mp(c) for c in fq], 1), _shift_reflect([_mp(c) for c in gq], rho))
            integral = sum(c / (r + k) for k, c in enumerate(integrand))
            rhs = mpmath.log(y1) ** r / math.factorial(r - 1) * integral
        report.points.append(LemmaPoint(y1, lhs, rhs))
    return report


def lemma_22_main_integral(r: int, fs: Sequence[Poly1]) -> Fraction:
    """Exact ``∫_T (t1 t2 t3 t4)^(r-1) f1(1-t1-t2) f2(1-t3-t4) f3(1-t1-t3) f4(1-t2-t4) dt``."""
    t1, t2, t3, t4 = (MultiPoly.variable(v) for v in (Var.T1, Var.T2, Var.T3, Var.T4))
    args = [1 - t1 - t2, 1 - t3 - t4, 1 - t1 - t3, 1 - t2 - t4]
    integrand = MultiPoly.monomial({Var.T1: r - 1, Var.T2: r - 1, Var.T3: r - 1, Var.T4: r - 1})
    for coeffs, arg in zip(fs, args):
        val = MultiPoly()
        power = MultiPoly.constant(1)
        for j, c in enumerate(_fr_poly(coeffs)):
            if j:
                power = power * arg
            val = val + power.scale(c)
        integrand = integrand * val
    total = Fraction(0)
    for mono, c in integrand:
        e = mono.exponents
        total += c * integrate_t_monomial(*(e.get(t, 0) for t in (Var.T1, Var.T2, Var.T3, Var.T4)))
    return total


def _taylor_rows(coeffs: np.ndarray, at: np.ndarray) -> np.ndarray:
    """Rows ``k`` of ``f(at - l) = sum_k row_k * l^k``."""
    deg = len(coeffs) - 1
    rows = np.empty((deg + 1, at.size))
    deriv = coeffs.copy()
    for k in range(deg + 1):
        rows[k] = (-1) ** k * npoly.polyval(at, deriv) / math.factorial(k)
        deriv = npoly.polyder(deriv) if len(deriv) > 1 else np.zeros(1)
    return rows


def _series_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[0]):
            out[i + j] += a[i] * b[j]
    return out


def _lemma_22_lhs(r: int, y: int, fs: Sequence[np.ndarray]) -> float:
    """Four-fold sum, with the ``n1`` and ``n4`` sums decoupled given ``(n2, n3)``.

    Both ``n1`` and ``n4`` range over ``n <= y / max(n2, n3)``, and the test
    functions are expanded in powers of ``log n1 / log y`` (resp. ``n4``) so
    each inner sum is a combination of prefix moment sums.
    """
    w = _weights(r, y)
    n = np.arange(y + 1, dtype=float)
    n[0] = 1.0
    ell = np.log(n) / math.log(y)
    f1, f2, f3, f4 = fs
    kmax = max(len(f1) + len(f3), len(f4) + len(f2)) - 1
    moments = np.empty((kmax, y + 1))
    for k in range(kmax):
        moments[k] = np.cumsum(w * ell**k)
    idx = np.arange(1, y + 1)
    one_minus = 1 - ell[1:]
    rows1 = _taylor_rows(f1, one_minus)  # f1(1 - l2 - l1) by n2
    rows4 = _taylor_rows(f4, one_minus)  # f4(1 - l2 - l4) by n2
    rows3 = _taylor_rows(f3, one_minus)  # f3(1 - l3 - l1) by n3
    rows2 = _taylor_rows(f2, one_minus)  # f2(1 - l3 - l4) by n3
    w2 = w[1:]
    partials = []
    for n3 in range(1, y + 1):
        bound = y // np.maximum(idx, n3)
        s = moments[:, bound]
        a = _series_product(rows1, rows3[:, n3 - 1 : n3].repeat(y, axis=1))
        b = _series_product(rows4, rows2[:, n3 - 1 : n3].repeat(y, axis=1))
        inner1 = np.einsum("kn,kn->n", a, s[: a.shape[0]])
        inner4 = np.einsum("kn,kn->n", b, s[: b.shape[0]])
        partials.append(w[n3] * float(np.dot(w2, inner1 * inner4)))
    return math.fsum(partials)


def verify_lemma_22(
    r: int = 1,
    ys: Sequence[int] = (10**2, 10**3, 10**4),
    fs: Sequence[Poly1] = ((1,), (1,), (1,), (1,)),
) -> LemmaReport:
    """Constrained four-fold divisor sum against ``(log y)^(4r)/((r-1)!)^4`` times the t-polytope integral."""
    if r < 1:
        raise ValueError("r must be positive")
    if len(fs) != 4:
        raise ValueError("need four test functions")
    ys = _check_ys(ys, MAX_Y_QUADRUPLE)
    fq = [_fr_poly(f) for f in fs]
    ff = [np.array([float(c) for c in f]) for f in fq]
    integral = lemma_22_main_integral(r, fq)
    report = LemmaReport(
        "2.2", {"r": r, "fs": [[str(c) for c in f] for f in fq], "main_integral": str(integral)}
    )
    for y in ys:
        lhs = mpmath.mpf(_lemma_22_lhs(r, y, ff))
        with mpmath.workdps(DPS):
            rhs = mpmath.log(y) ** (4 * r) / math.factorial(r - 1) ** 4 * _mp(integral)
        report.points.append(LemmaPoint(y, lhs, rhs))
    return report


def lemma_23_main_term(r: int, j: int, n: int, y: int) -> mpmath.mpf:
    """``(log(y/n))^(j+2r) / ((r-1)!^2 j!)`` times the triangle integral ``(r-1)!^2 j!/(j+2r)!``."""
    with mpmath.workdps(DPS):
        return mpmath.log(mpmath.mpf(y) / n) ** (j + 2 * r) / math.factorial(j + 2 * r)


def verify_lemma_23(
    r: int,
    j: int = 0,
    n: int = 1,
    ys: Sequence[int] = (10**4, 10**5, 10**6),
) -> LemmaReport:
    """``sum_{m <= y/n} d_2r(m)/m * log(y/(n m))^j / j!`` against ``log(y/n)^(j+2r)/(j+2r)!``."""
    if r < 1 or j < 0 or n < 1:
        raise ValueError("need r >= 1, j >= 0, n >= 1")
    ys = _check_ys(ys, MAX_Y)
    if n >= ys[0]:
        raise ValueError("need n < y")
    report = LemmaReport("2.3", {"r": r, "j": j, "n": n})
    for y in ys:
        top = y // n
        lhs = mpmath.mpf(
            divisor_sum_with_weights(
                2 * r, top, lambda m, y=y: np.log(y / (n * m)) ** j / math.factorial(j)
            )
        )
        report.points.append(LemmaPoint(y, lhs, lemma_23_main_term(r, j, n, y)))
    return report
