"""Exact multivariate rational functions over the rationals.

A :class:`RationalExpr` is a reduced fraction ``num/den`` of integer
polynomials living on a :class:`Chart`.  The representation is canonical:

* ``gcd(num, den)`` is a unit,
* the integer coefficients of ``num`` and ``den`` have joint content 1,
* the leading coefficient of ``den`` (graded-lex over the chart order) is
  positive,

so two expressions are mathematically equal iff they compare equal.

Polynomial arithmetic and gcds are delegated to sympy's sparse
``PolyRing`` over ``ZZ``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Mapping, Sequence

from sympy.polys.domains import ZZ
from sympy.polys.orderings import grlex
from sympy.polys.rings import PolyRing

__all__ = [
    "Chart",
    "RationalExpr",
    "SymExprError",
    "ParseError",
    "UnknownIdentifier",
    "DivisionByZero",
    "PoleError",
    "ChartMismatch",
    "parse",
    "render",
    "add",
    "mul",
    "div",
    "pow",
    "diff",
    "evaluate",
]


class SymExprError(Exception):
    pass


class ParseError(SymExprError, ValueError):
    def __init__(self, message, text="", pos=0):
        self.text = text
        self.pos = pos
        if text:
            message = f"{message} at position {pos}: {text!r}"
        super().__init__(message)


class UnknownIdentifier(ParseError):
    pass


class DivisionByZero(SymExprError, ZeroDivisionError):
    pass


class PoleError(SymExprError, ZeroDivisionError):
    pass


class ChartMismatch(SymExprError, ValueError):
    pass


_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


@lru_cache(maxsize=None)
def _ring(symbols):
    return PolyRing(symbols, ZZ, grlex)


@dataclass(frozen=True)
class Chart:
    """Ordered coordinates of an open domain, plus inert symbolic parameters.

    ``constraints`` are expression strings that must not vanish on the
    domain (``v`` for ``v != 0``).  ``params`` are symbols such as the DBH
    ``alpha1`` that may appear in coefficients but carry no dynamics.
    A product chart remembers its ``base`` chart and the number of copies.
    """

    names: tuple
    constraints: tuple = ()
    params: tuple = ()
    base: "Chart | None" = field(default=None, compare=False, repr=False)
    copies: int = field(default=1, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "constraints", tuple(str(c) for c in self.constraints))
        allnames = self.names + self.params
        if len(set(allnames)) != len(allnames):
            raise ValueError(f"duplicate chart identifiers in {allnames}")
        for n in allnames:
            if not _IDENT.match(n):
                raise ValueError(f"invalid identifier {n!r}")

    @property
    def dim(self):
        return len(self.names)

    @property
    def symbols(self):
        return self.names + self.params

    @property
    def ring(self):
        return _ring(self.symbols)

    def index(self, name):
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownIdentifier(f"{name!r} is not a coordinate of {self.names}") from None

    def constraint_exprs(self):
        return [parse(c, self) for c in self.constraints]

    def coordinate(self, name):
        return RationalExpr.var(self, name)

    def coordinates(self):
        return [RationalExpr.var(self, n) for n in self.names]

    def product(self, m):
        """The chart of ``N^m`` with names ``x_1, ..., x_m`` per coordinate."""
        return product_chart(self, m)

    def __str__(self):
        s = "(" + ", ".join(self.names) + ")"
        if self.params:
            s += " params(" + ", ".join(self.params) + ")"
        return s


@lru_cache(maxsize=None)
def product_chart(chart, m):
    if m < 1:
        raise ValueError("m must be >= 1")
    names = tuple(f"{n}_{a}" for a in range(1, m + 1) for n in chart.names)
    taken = set(chart.params)
    clash = taken.intersection(names)
    if clash:
        raise ValueError(f"product coordinate names collide with parameters: {sorted(clash)}")
    constraints = []
    for a in range(1, m + 1):
        for c in chart.constraints:
            e = parse(c, chart)
            constraints.append(str(e.to_slot(Chart(names, (), chart.params, chart, m), a)))
    return Chart(names, tuple(constraints), chart.params, base=chart, copies=m)


def _to_fraction(value):
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    raise TypeError(f"cannot use {type(value).__name__} as an exact coefficient")


def _monomial_gcd(p):
    exps = None
    for m in p.itermonoms():
        exps = list(m) if exps is None else [min(a, b) for a, b in zip(exps, m)]
    return tuple(exps)


def _divide_monomial(p, mono):
    ring = p.ring
    out = ring.zero
    for m, c in p.iterterms():
        out[tuple(a - b for a, b in zip(m, mono))] = c
    return out


def _canonical(ring, num, den):
    if not den:
        raise DivisionByZero("division by the zero polynomial")
    if not num:
        return ring.zero, ring.one
    if len(den) == 1 or len(num) == 1:
        mono = tuple(min(a, b) for a, b in zip(_monomial_gcd(num), _monomial_gcd(den)))
        if any(mono):
            num = _divide_monomial(num, mono)
            den = _divide_monomial(den, mono)
    elif den != ring.one:
        _, num, den = num.cofactors(den)
    c = math.gcd(int(num.content()), int(den.content()))
    if den.LC < 0:
        c = -c
    if c != 1:
        num = num.quo_ground(c)
        den = den.quo_ground(c)
    return num, den


class RationalExpr:
    """Immutable canonical rational function on a chart."""

    __slots__ = ("chart", "num", "den", "_hash")

    def __init__(self, chart, num, den=None, *, _canonical_form=False):
        ring = chart.ring
        if den is None:
            den = ring.one
        if not _canonical_form:
            num, den = _canonical(ring, num, den)
        self.chart = chart
        self.num = num
        self.den = den
        self._hash = None

    # -- constructors ---------------------------------------------------
    @classmethod
    def const(cls, chart, value):
        q = _to_fraction(value)
        ring = chart.ring
        return cls(chart, ring(q.numerator), ring(q.denominator))

    @classmethod
    def zero(cls, chart):
        ring = chart.ring
        return cls(chart, ring.zero, ring.one, _canonical_form=True)

    @classmethod
    def one(cls, chart):
        ring = chart.ring
        return cls(chart, ring.one, ring.one, _canonical_form=True)

    @classmethod
    def var(cls, chart, name):
        try:
            i = chart.symbols.index(name)
        except ValueError:
            raise UnknownIdentifier(f"unknown identifier {name!r}") from None
        return cls(chart, chart.ring.gens[i], chart.ring.one, _canonical_form=True)

    # -- coercion ---------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, RationalExpr):
            if other.chart != self.chart:
                raise ChartMismatch(f"charts differ: {self.chart} vs {other.chart}")
            return other
        if isinstance(other, (int, Fraction, Rational)) and not isinstance(other, bool):
            return RationalExpr.const(self.chart, other)
        return NotImplemented

    # -- predicates -----------------------------------------------------
    def is_zero(self):
        return not self.num

    def __bool__(self):
        return bool(self.num)

    def is_constant(self):
        return self.num.is_ground and self.den.is_ground

    def constant_value(self):
        if not self.is_constant():
            raise ValueError(f"{self} is not constant")
        return Fraction(int(self.num.LC) if self.num else 0, int(self.den.LC))

    def is_polynomial(self):
        return self.den.is_ground

    # -- arithmetic -----------------------------------------------------
    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not other.num:
            return self
        if not self.num:
            return other
        if self.den == other.den:
            return RationalExpr(self.chart, self.num + other.num, self.den)
        return RationalExpr(self.chart, self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return RationalExpr(self.chart, -self.num, self.den, _canonical_form=True)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not self.num or not other.num:
            return RationalExpr.zero(self.chart)
        return RationalExpr(self.chart, self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not other.num:
            raise DivisionByZero(f"division of {self} by zero")
        return RationalExpr(self.chart, self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other / self

    def __pow__(self, k):
        if not isinstance(k, int) or isinstance(k, bool):
            raise TypeError("only integer exponents are supported")
        if k < 0:
            if not self.num:
                raise DivisionByZero("negative power of zero")
            return RationalExpr(self.chart, self.den ** (-k), self.num ** (-k))
        return RationalExpr(self.chart, self.num ** k, self.den ** k, _canonical_form=(k > 0 or not self.num))

    def inverse(self):
        return self ** -1

    # -- calculus -------------------------------------------------------
    def diff(self, var):
        if isinstance(var, str):
            i = self.chart.index(var)
        else:
            i = int(var)
            if not 0 <= i < self.chart.dim:
                raise UnknownIdentifier(f"coordinate index {i} out of range")
        g = self.chart.ring.gens[i]
        dn = self.num.diff(g)
        dd = self.den.diff(g)
        if not dd:
            return RationalExpr(self.chart, dn, self.den)
        return RationalExpr(self.chart, dn * self.den - self.num * dd, self.den ** 2)

    # -- evaluation -----------------------------------------------------
    def _point_values(self, point):
        vals = []
        exact = True
        for n in self.chart.symbols:
            if n not in point:
                raise KeyError(f"missing assignment for {n!r}")
            v = point[n]
            if isinstance(v, float):
                exact = False
            elif isinstance(v, (int, Fraction, Rational)):
                v = Fraction(v)
            else:
                v = float(v)
                exact = False
            vals.append(v)
        if not exact:
            vals = [float(v) for v in vals]
        return vals, exact

    @staticmethod
    def _poly_eval(p, vals, exact):
        total = Fraction(0) if exact else 0.0
        for mono, c in p.iterterms():
            t = Fraction(int(c)) if exact else float(c)
            for v, e in zip(vals, mono):
                if e:
                    t *= v ** e
            total += t
        return total

    def eval(self, point: Mapping):
        """Value at ``point`` (name -> number); exact iff all inputs are exact."""
        vals, exact = self._point_values(point)
        d = self._poly_eval(self.den, vals, exact)
        if d == 0:
            raise PoleError(f"pole of {self} at {dict(point)}")
        return self._poly_eval(self.num, vals, exact) / d

    def lambdify(self):
        """Float callable taking the chart symbols positionally."""
        names = [f"_a{i}" for i in range(len(self.chart.symbols))]

        def poly_src(p):
            terms = []
            for mono, c in p.iterterms():
                factors = [repr(float(c))]
                for n, e in zip(names, mono):
                    if e == 1:
                        factors.append(n)
                    elif e:
                        factors.append(f"{n}**{e}")
                terms.append("*".join(factors))
            return " + ".join(terms) if terms else "0.0"

        src = f"lambda {', '.join(names) or '*_'}: ({poly_src(self.num)}) / ({poly_src(self.den)})"
        return eval(src, {"__builtins__": {}})  # noqa: S307 - generated from our own polynomial data

    # -- chart maps -----------------------------------------------------
    def relabel(self, chart, coord_map):
        """Move to ``chart`` sending coordinate ``i`` to coordinate ``coord_map[i]``.

        Parameters keep their names and must exist in the target chart.
        """
        src = self.chart
        target_pos = list(coord_map) + [chart.symbols.index(p) for p in src.params]
        width = len(chart.symbols)
        ring = chart.ring

        def move(p):
            out = ring.zero
            for mono, c in p.iterterms():
                e = [0] * width
                for k, power in zip(target_pos, mono):
                    e[k] += power
                out[tuple(e)] = c
            return out

        return RationalExpr(chart, move(self.num), move(self.den), _canonical_form=True)

    def to_slot(self, product, slot):
        """Copy onto slot ``slot`` (1-based) of the product chart ``product``."""
        n = self.chart.dim
        if not 1 <= slot <= product.copies:
            raise ValueError(f"slot {slot} outside 1..{product.copies}")
        off = (slot - 1) * n
        return self.relabel(product, range(off, off + n))

    # -- comparison / display --------------------------------------------
    def __eq__(self, other):
        if isinstance(other, RationalExpr):
            return self.chart == other.chart and self.num == other.num and self.den == other.den
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.is_constant() and self.constant_value() == other
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.chart.symbols, tuple(sorted(self.num.items())), tuple(sorted(self.den.items()))))
        return self._hash

    def __str__(self):
        return render(self)

    def __repr__(self):
        return f"RationalExpr({render(self)!r})"


# ---------------------------------------------------------------------------
# rendering


def _render_poly(p, symbols):
    if not p:
        return "0"
    pieces = []
    for mono, c in p.terms():
        c = int(c)
        factors = []
        for name, e in zip(symbols, mono):
            if e == 1:
                factors.append(name)
            elif e:
                factors.append(f"{name}^{e}")
        mag = abs(c)
        if not factors:
            body = str(mag)
        elif mag == 1:
            body = "*".join(factors)
        else:
            body = "*".join([str(mag)] + factors)
        pieces.append((c < 0, body))
    neg, body = pieces[0]
    out = ("-" if neg else "") + body
    for neg, body in pieces[1:]:
        out += (" - " if neg else " + ") + body
    return out


def _needs_parens_as_divisor(p):
    if len(p) > 1:
        return True
    (mono, c), = p.terms()
    nfactors = sum(1 for e in mono if e) + (1 if abs(int(c)) != 1 else 0)
    return nfactors > 1 or int(c) < 0


def render(e: RationalExpr) -> str:
    """Canonical text form; ``parse(render(e), e.chart) == e``."""
    symbols = e.chart.symbols
    num = _render_poly(e.num, symbols)
    if e.den == e.chart.ring.one:
        return num
    den = _render_poly(e.den, symbols)
    if len(e.num) > 1:
        num = f"({num})"
    if _needs_parens_as_divisor(e.den):
        den = f"({den})"
    return f"{num}/{den}"


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+)|(?P<id>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))")


def _tokenize(text):
    pos = 0
    toks = []
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[start]!r}", text, start)
        kind = m.lastgroup
        start = m.start(kind)
        toks.append((kind, m.group(kind), start))
        pos = m.end()
    toks.append(("end", "", n))
    return toks


class _Parser:
    def __init__(self, text, chart):
        self.text = text
        self.chart = chart
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value:
            raise ParseError(f"expected {value!r}, found {val or 'end of input'!r}", self.text, pos)

    def parse(self):
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", self.text, pos)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            _, op, _ = self.take()
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self):
        e = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in ("*", "/"):
            _, op, pos = self.take()
            rhs = self.unary()
            if op == "*":
                e = e * rhs
            else:
                if rhs.is_zero():
                    raise DivisionByZero(f"division by the zero polynomial at position {pos}: {self.text!r}")
                e = e / rhs
        return e

    def unary(self):
        kind, val, pos = self.peek()
        if kind == "op" and val in ("+", "-"):
            self.take()
            e = self.unary()
            return -e if val == "-" else e
        return self.power()

    def exponent(self):
        kind, val, pos = self.peek()
        paren = kind == "op" and val == "("
        if paren:
            self.take()
        sign = 1
        kind, val, pos = self.peek()
        if kind == "op" and val in ("+", "-"):
            self.take()
            sign = -1 if val == "-" else 1
        kind, val, pos = self.take()
        if kind != "num":
            raise ParseError("exponent must be an integer", self.text, pos)
        if paren:
            self.expect(")")
        return sign * int(val)

    def power(self):
        base = self.atom()
        kind, val, pos = self.peek()
        if kind == "op" and val == "^":
            self.take()
            k = self.exponent()
            if k < 0 and base.is_zero():
                raise DivisionByZero(f"negative power of zero at position {pos}: {self.text!r}")
            base = base ** k
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return RationalExpr.const(self.chart, int(val))
        if kind == "id":
            if val not in self.chart.symbols:
                raise UnknownIdentifier(f"unknown identifier {val!r}", self.text, pos)
            return RationalExpr.var(self.chart, val)
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError(f"unexpected {val or 'end of input'!r}", self.text, pos)


def parse(text: str, chart: Chart) -> RationalExpr:
    """Parse ``text`` (integers, chart identifiers, ``+ - * / ^``, parentheses)."""
    if isinstance(text, RationalExpr):
        return text
    if isinstance(text, (int, Fraction)):
        return RationalExpr.const(chart, text)
    return _Parser(str(text), chart).parse()


# ---------------------------------------------------------------------------
# functional aliases


def add(e1, e2):
    return e1 + e2


def mul(e1, e2):
    return e1 * e2


def div(e1, e2):
    return e1 / e2


def pow(e, k):  # noqa: A001 - mirrors the arithmetic vocabulary
    return e ** k


def diff(e, var):
    return e.diff(var)


def evaluate(e, point):
    return e.eval(point)


def as_exprs(chart, items: Sequence) -> list:
    return [parse(s, chart) for s in items]
