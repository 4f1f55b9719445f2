"""Sparse multivariate polynomials with exact rational coefficients.

Every integrand in the package lives in a fixed universe of 18 variables
(``x1..x4, z1..z4, t1..t4, v1..v4, u, theta``).  A monomial is packed into a
single Python int, eight bits per variable, so multiplying two monomials is
one integer addition.  Stored exponents never exceed 127, which keeps the sum
of two exponents inside its eight-bit field; products that would exceed the
cap raise ``OverflowError``.

Coefficients are ``gmpy2.mpq`` internally.  Scalar results returned to callers
are ``fractions.Fraction``.
"""

from __future__ import annotations

import enum
import math
import re
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Union

from gmpy2 import mpq

__all__ = [
    "Var",
    "Monomial",
    "MultiPoly",
    "MissingAssignmentError",
    "PolynomialSyntaxError",
    "UnknownVariableError",
    "add",
    "mul",
    "evaluate",
    "substitute",
    "integrate_unit_box",
    "parse_poly",
    "var",
    "const",
    "rename",
]


class Var(enum.IntEnum):
    X1 = 0
    X2 = 1
    X3 = 2
    X4 = 3
    Z1 = 4
    Z2 = 5
    Z3 = 6
    Z4 = 7
    T1 = 8
    T2 = 9
    T3 = 10
    T4 = 11
    V1 = 12
    V2 = 13
    V3 = 14
    V4 = 15
    U = 16
    THETA = 17

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def lookup(cls, name: Union[str, "Var"]) -> "Var":
        if isinstance(name, Var):
            return name
        key = _ALIASES.get(name, name)
        try:
            return cls[key.upper()]
        except KeyError:
            raise UnknownVariableError(name) from None


_ALIASES = {"ϑ": "theta", "θ": "theta", "th": "theta"}

NVARS = len(Var)
BITS = 8
FIELD = (1 << BITS) - 1
MAX_EXPONENT = 127
_HIGH = sum(0x80 << (BITS * i) for i in range(NVARS))

Scalar = Union[int, Fraction, "mpq"]


class MissingAssignmentError(KeyError):
    """Evaluation point does not assign a variable that occurs in the polynomial."""

    def __init__(self, variable: Var):
        super().__init__(variable)
        self.variable = variable

    def __str__(self) -> str:
        return f"no value assigned to variable {self.variable.label!r}"


class UnknownVariableError(ValueError):
    def __init__(self, name: object):
        super().__init__(f"unknown variable {name!r}")
        self.name = name


class PolynomialSyntaxError(ValueError):
    def __init__(self, message: str, text: str, offset: int):
        line = text.count("\n", 0, offset) + 1
        column = offset - (text.rfind("\n", 0, offset) + 1) + 1
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


def shift(v: Var) -> int:
    return BITS * int(v)


def exponent_of(key: int, v: Var) -> int:
    return (key >> (BITS * int(v))) & FIELD


def unpack(key: int) -> tuple[int, ...]:
    return tuple((key >> (BITS * i)) & FIELD for i in range(NVARS))


def pack(exponents: Mapping[Var, int]) -> int:
    key = 0
    for v, e in exponents.items():
        if e < 0:
            raise ValueError("negative exponent")
        if e > MAX_EXPONENT:
            raise OverflowError(f"exponent {e} of {Var(v).label} exceeds {MAX_EXPONENT}")
        key += e << (BITS * int(v))
    return key


def mask_of(variables: Iterable[Var]) -> int:
    m = 0
    for v in variables:
        m |= FIELD << (BITS * int(v))
    return m


def _q(value: object) -> mpq:
    if isinstance(value, Fraction):
        return mpq(value.numerator, value.denominator)
    if isinstance(value, int) or type(value).__name__ in ("mpq", "mpz"):
        return mpq(value)
    if isinstance(value, str):
        f = Fraction(value)
        return mpq(f.numerator, f.denominator)
    raise TypeError(f"exact rational expected, got {type(value).__name__}")


class Monomial:
    """Read-only view of a packed monomial."""

    __slots__ = ("key",)

    def __init__(self, key: int):
        self.key = key

    @classmethod
    def from_exponents(cls, exponents: Mapping[Union[Var, str], int]) -> "Monomial":
        return cls(pack({Var.lookup(v): e for v, e in exponents.items() if e}))

    @property
    def exponents(self) -> dict[Var, int]:
        return {Var(i): e for i, e in enumerate(unpack(self.key)) if e}

    @property
    def degree(self) -> int:
        return sum(unpack(self.key))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Monomial) and other.key == self.key

    def __hash__(self) -> int:
        return hash(self.key)

    def __str__(self) -> str:
        parts = []
        for v, e in self.exponents.items():
            parts.append(v.label if e == 1 else f"{v.label}^{e}")
        return "*".join(parts) or "1"

    def __repr__(self) -> str:
        return f"Monomial({self})"


def _sort_key(key: int) -> tuple:
    exps = unpack(key)
    return (-sum(exps), tuple(-e for e in exps))


class MultiPoly:
    """Immutable sparse polynomial over the fixed variable universe."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[int, object] | None = None):
        clean: dict[int, mpq] = {}
        if terms:
            for k, c in terms.items():
                c = _q(c)
                if c:
                    if k & _HIGH:
                        raise OverflowError(f"exponent exceeds {MAX_EXPONENT}")
                    clean[k] = c
        self._terms = clean

    @classmethod
    def _wrap(cls, terms: dict[int, mpq]) -> "MultiPoly":
        # terms must already be canonical: mpq values, no zeros
        p = cls.__new__(cls)
        p._terms = terms
        return p

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, value: Scalar) -> "MultiPoly":
        c = _q(value)
        return cls._wrap({0: c} if c else {})

    @classmethod
    def variable(cls, v: Union[Var, str]) -> "MultiPoly":
        return cls._wrap({1 << shift(Var.lookup(v)): mpq(1)})

    @classmethod
    def monomial(cls, exponents: Mapping[Union[Var, str], int], coeff: Scalar = 1) -> "MultiPoly":
        return cls({Monomial.from_exponents(exponents).key: coeff})

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[Mapping[Union[Var, str], int], Scalar]]) -> "MultiPoly":
        acc: dict[int, mpq] = {}
        for exps, c in terms:
            k = Monomial.from_exponents(exps).key
            acc[k] = acc.get(k, 0) + _q(c)
        return cls(acc)

    @classmethod
    def parse(cls, text: str) -> "MultiPoly":
        return _Parser(text).parse()

    # -- inspection -------------------------------------------------------
    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __iter__(self) -> Iterator[tuple[Monomial, Fraction]]:
        for k in sorted(self._terms, key=_sort_key):
            yield Monomial(k), Fraction(self._terms[k])

    def terms(self) -> dict[Monomial, Fraction]:
        return dict(iter(self))

    def variables(self) -> frozenset[Var]:
        seen = 0
        for k in self._terms:
            seen |= k
        return frozenset(v for v in Var if (seen >> shift(v)) & FIELD)

    def degree(self, v: Union[Var, str, None] = None) -> int:
        if not self._terms:
            return -1
        if v is None:
            return max(sum(unpack(k)) for k in self._terms)
        s = shift(Var.lookup(v))
        return max((k >> s) & FIELD for k in self._terms)

    def is_constant(self) -> bool:
        return all(k == 0 for k in self._terms)

    def as_constant(self) -> Fraction:
        if not self.is_constant():
            names = ", ".join(sorted(v.label for v in self.variables()))
            raise ValueError(f"polynomial is not constant (involves {names})")
        return Fraction(self._terms.get(0, mpq(0)))

    def coefficient(self, v: Union[Var, str], k: int) -> "MultiPoly":
        """Coefficient of ``v**k``, as a polynomial free of ``v``."""
        s = shift(Var.lookup(v))
        out = {}
        for key, c in self._terms.items():
            if (key >> s) & FIELD == k:
                out[key - (k << s)] = c
        return MultiPoly._wrap(out)

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other: object) -> "MultiPoly":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return add(self, other)

    __radd__ = __add__

    def __neg__(self) -> "MultiPoly":
        return MultiPoly._wrap({k: -c for k, c in self._terms.items()})

    def __sub__(self, other: object) -> "MultiPoly":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return add(self, -other)

    def __rsub__(self, other: object) -> "MultiPoly":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return add(other, -self)

    def __mul__(self, other: object) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            return mul(self, other)
        try:
            c = _q(other)
        except TypeError:
            return NotImplemented
        return self.scale(c)

    __rmul__ = __mul__

    def __truediv__(self, other: object) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            other = other.as_constant()
        c = _q(other)
        if not c:
            raise ZeroDivisionError("polynomial division by zero")
        return self.scale(1 / c)

    def __pow__(self, n: int) -> "MultiPoly":
        if not isinstance(n, int) or n < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = MultiPoly.constant(1)
        base = self
        while n:
            if n & 1:
                result = mul(result, base)
            n >>= 1
            if n:
                base = mul(base, base)
        return result

    def scale(self, c: Scalar) -> "MultiPoly":
        c = _q(c)
        if not c:
            return MultiPoly()
        return MultiPoly._wrap({k: v * c for k, v in self._terms.items()})

    def __eq__(self, other: object) -> bool:
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return hash(frozenset(self._terms.items()))

    # -- calculus ---------------------------------------------------------
    def evaluate(self, point: Mapping[Union[Var, str], Scalar]) -> Fraction:
        return evaluate(self, point)

    def substitute(self, v: Union[Var, str], replacement: Union["MultiPoly", Scalar]) -> "MultiPoly":
        return substitute(self, v, replacement)

    def integrate_unit_box(self, v: Union[Var, str]) -> "MultiPoly":
        return integrate_unit_box(self, v)

    # -- text -------------------------------------------------------------
    def to_string(self) -> str:
        if not self._terms:
            return "0"
        out = []
        for i, k in enumerate(sorted(self._terms, key=_sort_key)):
            c = Fraction(self._terms[k])
            sign = "-" if c < 0 else "+"
            c = abs(c)
            mono = str(Monomial(k)) if k else ""
            if not mono:
                body = str(c)
            elif c == 1:
                body = mono
            else:
                body = f"{c}*{mono}"
            if i == 0:
                out.append(("-" if sign == "-" else "") + body)
            else:
                out.append(f" {sign} {body}")
        return "".join(out)

    __str__ = to_string

    def __repr__(self) -> str:
        text = self.to_string()
        if len(text) > 120:
            text = text[:117] + "..."
        return f"MultiPoly({text!r}, terms={len(self)})"


def _coerce(value: object):
    if isinstance(value, MultiPoly):
        return value
    if isinstance(value, str):
        return NotImplemented
    try:
        return MultiPoly.constant(_q(value))
    except TypeError:
        return NotImplemented


def var(name: Union[Var, str]) -> MultiPoly:
    return MultiPoly.variable(name)


def const(value: Scalar) -> MultiPoly:
    return MultiPoly.constant(value)


def add(p: MultiPoly, q: MultiPoly) -> MultiPoly:
    if len(p) < len(q):
        p, q = q, p
    out = dict(p._terms)
    for k, c in q._terms.items():
        s = out.get(k)
        if s is None:
            out[k] = c
        else:
            s = s + c
            if s:
                out[k] = s
            else:
                del out[k]
    return MultiPoly._wrap(out)


def integerize(terms: Mapping[int, mpq]) -> tuple[dict[int, int], int]:
    """Scale coefficients to Python ints over their common denominator."""
    den = 1
    for c in terms.values():
        d = int(c.denominator)
        if d != 1:
            den = den * d // math.gcd(den, d)
    if den == 1:
        return {k: int(c) for k, c in terms.items()}, 1
    return {k: int(c.numerator) * (den // int(c.denominator)) for k, c in terms.items()}, den


def mul_integer_terms(a: Mapping[int, int], b: Mapping[int, int]) -> dict[int, int]:
    """Raw product of integer-coefficient term maps (zeros may remain)."""
    if len(a) < len(b):
        a, b = b, a
    out: dict[int, int] = {}
    get = out.get
    items = list(a.items())
    for kb, cb in b.items():
        for ka, ca in items:
            k = ka + kb
            out[k] = get(k, 0) + ca * cb
    return out


def mul(p: MultiPoly, q: MultiPoly) -> MultiPoly:
    if not p._terms or not q._terms:
        return MultiPoly()
    a, da = integerize(p._terms)
    b, db = integerize(q._terms)
    raw = mul_integer_terms(a, b)
    den = da * db
    out = {}
    for k, c in raw.items():
        if c:
            if k & _HIGH:
                raise OverflowError(f"product exponent exceeds {MAX_EXPONENT}")
            out[k] = mpq(c, den)
    return MultiPoly._wrap(out)


def product(factors: Iterable[MultiPoly]) -> MultiPoly:
    result = MultiPoly.constant(1)
    for f in factors:
        result = mul(result, f)
    return result


def evaluate(p: MultiPoly, point: Mapping[Union[Var, str], Scalar]) -> Fraction:
    values = {Var.lookup(v): _q(x) for v, x in point.items()}
    for v in p.variables():
        if v not in values:
            raise MissingAssignmentError(v)
    total = mpq(0)
    powers: dict[tuple[Var, int], mpq] = {}
    for k, c in p._terms.items():
        term = c
        for i, e in enumerate(unpack(k)):
            if e:
                v = Var(i)
                pw = powers.get((v, e))
                if pw is None:
                    pw = powers[(v, e)] = values[v] ** e
                term = term * pw
        total += term
    return Fraction(total)


def _split_by(p: MultiPoly, v: Var) -> dict[int, dict[int, mpq]]:
    s = shift(v)
    groups: dict[int, dict[int, mpq]] = {}
    for k, c in p._terms.items():
        e = (k >> s) & FIELD
        groups.setdefault(e, {})[k - (e << s)] = c
    return groups


def substitute(p: MultiPoly, v: Union[Var, str], replacement: Union[MultiPoly, Scalar]) -> MultiPoly:
    v = Var.lookup(v)
    if not isinstance(replacement, MultiPoly):
        value = _q(replacement)
        s = shift(v)
        out: dict[int, mpq] = {}
        for k, c in p._terms.items():
            e = (k >> s) & FIELD
            kk = k - (e << s)
            out[kk] = out.get(kk, 0) + c * value**e
        return MultiPoly._wrap({k: c for k, c in out.items() if c})
    if replacement == MultiPoly.variable(v):
        return p
    groups = _split_by(p, v)
    result = MultiPoly()
    power = MultiPoly.constant(1)
    for e in range(max(groups, default=0) + 1):
        if e:
            power = mul(power, replacement)
        if e in groups:
            result = add(result, mul(MultiPoly._wrap(groups[e]), power))
    return result


def rename(p: MultiPoly, mapping: Mapping[Union[Var, str], Union[Var, str]]) -> MultiPoly:
    """Relabel variables; ``mapping`` must be injective on the variables it moves."""
    perm = {Var.lookup(a): Var.lookup(b) for a, b in mapping.items()}
    full = {v: perm.get(v, v) for v in Var}
    if len(set(full.values())) != len(full):
        raise ValueError("renaming must be a permutation of the variables")
    out: dict[int, mpq] = {}
    for k, c in p._terms.items():
        nk = 0
        for i, e in enumerate(unpack(k)):
            if e:
                nk += e << shift(full[Var(i)])
        out[nk] = c
    return MultiPoly._wrap(out)


def integrate_unit_box(p: MultiPoly, v: Union[Var, str]) -> MultiPoly:
    """Integrate ``v`` over [0, 1]: each ``v**k`` becomes ``1/(k+1)``."""
    s = shift(Var.lookup(v))
    out: dict[int, mpq] = {}
    for k, c in p._terms.items():
        e = (k >> s) & FIELD
        kk = k - (e << s)
        out[kk] = out.get(kk, 0) + c / (e + 1)
    return MultiPoly._wrap({k: c for k, c in out.items() if c})


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?|\.\d+)|(?P<name>[A-Za-zϑθ_][A-Za-z0-9_]*|ϑ|θ)|(?P<op>[-+*/^()]))"
)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        n = len(text)
        while pos < n:
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                raise PolynomialSyntaxError(f"unexpected character {text[pos]!r}", text, pos)
            kind = m.lastgroup
            start = m.start(kind)
            self.tokens.append((kind, m.group(kind), start))
            pos = m.end()
        self.tokens.append(("end", "", len(text)))
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def take(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, message: str, tok: tuple[str, str, int]):
        raise PolynomialSyntaxError(message, self.text, tok[2])

    def parse(self) -> MultiPoly:
        if self.peek()[0] == "end":
            self.fail("empty polynomial", self.peek())
        p = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            self.fail(f"unexpected {tok[1]!r}", tok)
        return p

    def expr(self) -> MultiPoly:
        p = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self) -> MultiPoly:
        p = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in ("*", "/"):
            op = self.take()
            q = self.unary()
            if op[1] == "*":
                p = p * q
            else:
                if not q.is_constant() or not q:
                    self.fail("division only by a non-zero constant", op)
                p = p / q.as_constant()
        return p

    def unary(self) -> MultiPoly:
        tok = self.peek()
        if tok[0] == "op" and tok[1] in ("+", "-"):
            self.take()
            p = self.unary()
            return -p if tok[1] == "-" else p
        return self.power()

    def power(self) -> MultiPoly:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            tok = self.take()
            if tok[0] != "num" or not tok[1].isdigit():
                self.fail("exponent must be a non-negative integer", tok)
            e = int(tok[1])
            if e > MAX_EXPONENT:
                self.fail(f"exponent exceeds {MAX_EXPONENT}", tok)
            return base**e
        return base

    def atom(self) -> MultiPoly:
        tok = self.take()
        kind, text, _ = tok
        if kind == "num":
            return MultiPoly.constant(Fraction(text))
        if kind == "name":
            try:
                return MultiPoly.variable(text)
            except UnknownVariableError:
                self.fail(f"unknown variable {text!r}", tok)
        if kind == "op" and text == "(":
            p = self.expr()
            close = self.take()
            if close[1] != ")":
                self.fail("expected ')'", close)
            return p
        if kind == "end":
            self.fail("unexpected end of input", tok)
        self.fail(f"unexpected {text!r}", tok)


def parse_poly(text: str) -> MultiPoly:
    return MultiPoly.parse(text)
