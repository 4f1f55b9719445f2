"""Exact integration over the constrained 16-variable region.

The region is the unit box in ``x, z, t, v`` cut by four linear constraints
``t_i + t_j + x_k + z_k <= 1``.  Integration proceeds in a fixed order:

1. the box variables ``v3, v4, v1, v2`` (each power ``v**k`` becomes ``1/(k+1)``);
2. each ``(x_k, z_k)`` pair over the triangle ``x + z <= s_k`` with budget
   ``s_k = 1 - t_i - t_j``, via the Dirichlet integral
   ``a! b! / (a+b+2)! * s**(a+b+2)``;
3. the residual t-polytope
   ``T = {t in [0,1]^4 : t1+t2, t3+t4, t1+t3, t2+t4 <= 1}``.

Step 3 splits ``T`` along ``t2 = t3``.  In the chamber ``t2 <= t3`` the
constraints collapse to ``t1, t4 <= 1 - t3`` and every integral is a product of
Beta functions; the other chamber is the mirror image.  The same split, with a
binomial expansion of the budget powers around the chamber's binding
constraint, gives the budget-weighted integrals used by the fast path without
ever expanding ``(1 - t_i - t_j)**e`` into monomials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from gmpy2 import mpq

from .poly import (
    FIELD,
    MultiPoly,
    Var,
    integerize,
    mask_of,
    mul_integer_terms,
    shift,
    unpack,
)

__all__ = [
    "RegionSpec",
    "TrianglePair",
    "REGION",
    "integrate_triangle_pair",
    "integrate_t_monomial",
    "integrate_t_budgets",
    "integrate_region",
    "integrate_region_stepwise",
    "integrate_region_product",
    "region_volume",
]


@dataclass(frozen=True)
class TrianglePair:
    x: Var
    z: Var
    t: tuple[Var, Var]

    def budget(self) -> MultiPoly:
        return 1 - MultiPoly.variable(self.t[0]) - MultiPoly.variable(self.t[1])


@dataclass(frozen=True)
class RegionSpec:
    """Unit box in the 16 integration variables cut by ``t_i+t_j+x_k+z_k <= 1``."""

    pairs: tuple[TrianglePair, ...]
    box: tuple[Var, ...] = (Var.V3, Var.V4, Var.V1, Var.V2)

    def __post_init__(self):
        if len(self.pairs) != 4:
            raise ValueError("region needs exactly four linear constraints")
        xs = [p.x for p in self.pairs]
        zs = [p.z for p in self.pairs]
        if sorted(xs) != [Var.X1, Var.X2, Var.X3, Var.X4] or sorted(zs) != [Var.Z1, Var.Z2, Var.Z3, Var.Z4]:
            raise ValueError("each (x_k, z_k) pair must appear in exactly one constraint")
        counts = {t: 0 for t in (Var.T1, Var.T2, Var.T3, Var.T4)}
        for p in self.pairs:
            for t in p.t:
                counts[t] += 1
        if set(counts.values()) != {2}:
            raise ValueError("each t_i must appear in exactly two constraints")

    @property
    def integration_variables(self) -> tuple[Var, ...]:
        return tuple(Var)[:16]

    def constraints(self) -> list[tuple[Var, Var, Var, Var]]:
        return [(p.t[0], p.t[1], p.x, p.z) for p in self.pairs]

    def contains(self, point) -> bool:
        vals = {Var.lookup(k): Fraction(v) for k, v in point.items()}
        if any(not 0 <= vals[v] <= 1 for v in self.integration_variables):
            return False
        return all(sum(vals[v] for v in c) <= 1 for c in self.constraints())


# pair k <-> constraint t_i + t_j + x_k + z_k <= 1
REGION = RegionSpec(
    pairs=(
        TrianglePair(Var.X1, Var.Z1, (Var.T1, Var.T3)),
        TrianglePair(Var.X2, Var.Z2, (Var.T2, Var.T4)),
        TrianglePair(Var.X3, Var.Z3, (Var.T1, Var.T2)),
        TrianglePair(Var.X4, Var.Z4, (Var.T3, Var.T4)),
    )
)

_T_VARS = (Var.T1, Var.T2, Var.T3, Var.T4)
_BOX_MASK = mask_of((Var.V1, Var.V2, Var.V3, Var.V4))
_XZT_MASK = mask_of(tuple(Var)[:12])
_INTEGRATION_MASK = mask_of(tuple(Var)[:16])
_PARAM_MASK = mask_of((Var.U, Var.THETA))


@lru_cache(maxsize=None)
def _factorial(n: int) -> int:
    return math.factorial(n)


def _beta(m: int, n: int) -> mpq:
    """B(m, n) for positive integers."""
    return mpq(_factorial(m - 1) * _factorial(n - 1), _factorial(m + n - 1))


def _dirichlet2(a: int, b: int, c: int = 0) -> mpq:
    # integral of x^a z^b (s-x-z)^c over {x,z >= 0, x+z <= s}, divided by s^(a+b+c+2)
    return mpq(_factorial(a) * _factorial(b) * _factorial(c), _factorial(a + b + c + 2))


def integrate_triangle_pair(p: MultiPoly, xvar: Var, zvar: Var, budget: MultiPoly) -> MultiPoly:
    """Integrate ``xvar, zvar`` over ``{x, z >= 0, x + z <= budget}``."""
    xvar, zvar = Var.lookup(xvar), Var.lookup(zvar)
    if not isinstance(budget, MultiPoly):
        budget = MultiPoly.constant(budget)
    if {xvar, zvar} & budget.variables():
        raise ValueError(f"budget must not involve {xvar.label} or {zvar.label}")
    sx, sz = shift(xvar), shift(zvar)
    groups: dict[int, dict[int, mpq]] = {}
    for k, c in p._terms.items():
        a = (k >> sx) & FIELD
        b = (k >> sz) & FIELD
        rest = k - (a << sx) - (b << sz)
        g = groups.setdefault(a + b + 2, {})
        w = c * _dirichlet2(a, b)
        g[rest] = g.get(rest, 0) + w
    result = MultiPoly()
    powers = {0: MultiPoly.constant(1)}
    for e in sorted(groups):
        if e not in powers:
            top = max(powers)
            acc = powers[top]
            for j in range(top + 1, e + 1):
                acc = acc * budget
                powers[j] = acc
        result = result + MultiPoly({k: c for k, c in groups[e].items()}) * powers[e]
    return result


@lru_cache(maxsize=None)
def _t_chambers(alpha: tuple[int, int, int, int], e: tuple[int, int, int, int]) -> tuple[mpq, mpq]:
    """Chamber integrals of ``t^alpha * prod_k s_k^e_k`` over ``T``.

    Pair budgets: s1 = 1-t1-t3, s2 = 1-t2-t4, s3 = 1-t1-t2, s4 = 1-t3-t4.
    """
    a, b, c, d = alpha
    e1, e2, e3, e4 = e
    # chamber t2 <= t3, w = 1 - t3, delta = t3 - t2:
    #   s1 = w - t1, s3 = w - t1 + delta, s4 = w - t4, s2 = w - t4 + delta
    lower = mpq(0)
    for j in range(e3 + 1):
        inner1 = math.comb(e3, j) * _beta(a + 1, e1 + e3 - j + 1)
        for l in range(e2 + 1):
            m = j + l
            n = a + d + e1 + e2 + e3 + e4 - m + 2
            lower += (
                inner1
                * math.comb(e2, l)
                * _beta(d + 1, e2 + e4 - l + 1)
                * _beta(b + 1, m + 1)
                * _beta(b + c + m + 2, n + 1)
            )
    # chamber t3 <= t2, w = 1 - t2, delta = t2 - t3:
    #   s3 = w - t1, s1 = w - t1 + delta, s2 = w - t4, s4 = w - t4 + delta
    upper = mpq(0)
    for j in range(e1 + 1):
        inner1 = math.comb(e1, j) * _beta(a + 1, e1 + e3 - j + 1)
        for l in range(e4 + 1):
            m = j + l
            n = a + d + e1 + e2 + e3 + e4 - m + 2
            upper += (
                inner1
                * math.comb(e4, l)
                * _beta(d + 1, e2 + e4 - l + 1)
                * _beta(c + 1, m + 1)
                * _beta(b + c + m + 2, n + 1)
            )
    return lower, upper


def integrate_t_budgets(alpha: Sequence[int], e: Sequence[int]) -> Fraction:
    """``∫_T t1^a t2^b t3^c t4^d * prod_k s_k^{e_k} dt`` exactly."""
    lo, hi = _t_chambers(tuple(alpha), tuple(e))
    return Fraction(lo + hi)


def integrate_t_monomial(a: int, b: int, c: int, d: int) -> Fraction:
    """``∫_T t1^a t2^b t3^c t4^d dt`` via the two-chamber split."""
    lo, hi = _t_chambers((a, b, c, d), (0, 0, 0, 0))
    return Fraction(lo + hi)


class _RegionFunctional:
    """Memoized weight of each monomial under the full region integral.

    ``slack`` attaches ``prod_k (s_k - x_k - z_k)**slack_k`` to the integrand
    without expanding it: the triangle kernel absorbs the slack exponent as the
    third barycentric power of the Dirichlet integral.
    """

    def __init__(self, region: RegionSpec = REGION):
        self.region = region
        self._pair_shifts = [
            (shift(p.x), shift(p.z)) for p in region.pairs
        ]
        # budget of pair k in terms of t indices, used to permute e into the
        # (s1, s2, s3, s4) convention of _t_chambers
        canonical = [(Var.T1, Var.T3), (Var.T2, Var.T4), (Var.T1, Var.T2), (Var.T3, Var.T4)]
        self._slot = [canonical.index(tuple(sorted(p.t))) for p in region.pairs]
        self._xzt: dict[tuple[int, tuple[int, ...]], mpq] = {}
        self._box: dict[int, mpq] = {}

    def box_weight(self, key: int) -> mpq:
        w = self._box.get(key)
        if w is None:
            den = 1
            for v in (Var.V1, Var.V2, Var.V3, Var.V4):
                den *= ((key >> shift(v)) & FIELD) + 1
            w = self._box[key] = mpq(1, den)
        return w

    def xzt_weight(self, key: int, slack: tuple[int, ...] = (0, 0, 0, 0)) -> mpq:
        memo = (key, slack)
        w = self._xzt.get(memo)
        if w is not None:
            return w
        tri = mpq(1)
        e = [0, 0, 0, 0]
        for (sx, sz), slot, c in zip(self._pair_shifts, self._slot, slack):
            a = (key >> sx) & FIELD
            b = (key >> sz) & FIELD
            tri *= _dirichlet2(a, b, c)
            e[slot] = a + b + c + 2
        alpha = tuple((key >> shift(t)) & FIELD for t in _T_VARS)
        lo, hi = _t_chambers(alpha, tuple(e))
        w = self._xzt[memo] = tri * (lo + hi)
        return w

    def apply(self, terms: dict, den: int = 1, slacks: Sequence[tuple[int, ...]] = ((0, 0, 0, 0),)) -> list[dict[int, mpq]]:
        """Integrate a raw term map; one output map (over u, theta) per slack pattern."""
        outs: list[dict[int, mpq]] = [{} for _ in slacks]
        xzt_mask, box_mask, param_mask = _XZT_MASK, _BOX_MASK, _PARAM_MASK
        for key, c in terms.items():
            if not c:
                continue
            cw = c * self.box_weight(key & box_mask) if den == 1 else mpq(c, den) * self.box_weight(key & box_mask)
            xk = key & xzt_mask
            pk = key & param_mask
            for out, slack in zip(outs, slacks):
                w = cw * self.xzt_weight(xk, slack)
                prev = out.get(pk)
                out[pk] = w if prev is None else prev + w
        return [{k: v for k, v in out.items() if v} for out in outs]


_FUNCTIONAL = _RegionFunctional()


def _check_universe(p: MultiPoly) -> None:
    # every variable of the universe is legal; guard against corrupt keys
    for k in p._terms:
        if k >> (18 * 8):
            raise ValueError("polynomial contains a variable outside the declared universe")


def integrate_region(p: MultiPoly, slack: Sequence[int] = (0, 0, 0, 0)) -> MultiPoly:
    """``∫_R p`` as an exact polynomial in the parameters ``u, theta``.

    ``slack`` optionally multiplies the integrand by
    ``prod_k (1 - t_i - t_j - x_k - z_k)**slack[k]`` (pairs in region order).
    """
    _check_universe(p)
    (out,) = _FUNCTIONAL.apply(p._terms, slacks=(tuple(slack),))
    return MultiPoly._wrap(out)


def integrate_region_product(
    p: MultiPoly,
    q: MultiPoly,
    slacks: Sequence[Sequence[int]] | None = None,
    chunk_terms: int = 400_000,
) -> MultiPoly | list[MultiPoly]:
    """``integrate_region(p * q)`` without materializing the full product.

    With ``slacks`` given, returns one result per slack pattern.
    """
    _check_universe(p)
    _check_universe(q)
    patterns = [tuple(s) for s in slacks] if slacks is not None else [(0, 0, 0, 0)]
    if len(p) < len(q):
        p, q = q, p
    a, da = integerize(p._terms)
    b, db = integerize(q._terms)
    den = da * db
    totals: list[dict[int, mpq]] = [{} for _ in patterns]
    a_items = list(a.items())
    step = max(1, chunk_terms // max(1, len(a_items)))
    b_items = list(b.items())
    for start in range(0, len(b_items), step):
        raw = mul_integer_terms(dict(a_items), dict(b_items[start : start + step]))
        for total, part in zip(totals, _FUNCTIONAL.apply(raw, den, patterns)):
            for k, c in part.items():
                s = total.get(k, 0) + c
                if s:
                    total[k] = s
                else:
                    total.pop(k, None)
    results = [MultiPoly._wrap(t) for t in totals]
    return results if slacks is not None else results[0]


def integrate_region_stepwise(
    p: MultiPoly,
    pair_order: Iterable[int] | None = None,
    region: RegionSpec = REGION,
) -> MultiPoly:
    """Literal pipeline: box, then triangle pairs with polynomial budgets, then ``T``.

    Slower than :func:`integrate_region`; kept as a cross-check and to expose
    the intermediate stages.
    """
    _check_universe(p)
    for v in region.box:
        p = p.integrate_unit_box(v)
    order = list(pair_order) if pair_order is not None else range(len(region.pairs))
    for idx in order:
        pair = region.pairs[idx]
        p = integrate_triangle_pair(p, pair.x, pair.z, pair.budget())
    out: dict[int, mpq] = {}
    t_mask = mask_of(_T_VARS)
    for k, c in p._terms.items():
        exps = unpack(k)
        w = integrate_t_monomial(*(exps[int(t)] for t in _T_VARS))
        rest = k & ~t_mask
        out[rest] = out.get(rest, 0) + c * mpq(w.numerator, w.denominator)
    return MultiPoly({k: c for k, c in out.items()})


def region_volume() -> Fraction:
    return integrate_region(MultiPoly.constant(1)).as_constant()
