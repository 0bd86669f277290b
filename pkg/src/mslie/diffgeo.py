"""Coordinate differential geometry with exact rational coefficients.

Forms are stored over strictly increasing index tuples; general covariant
tensors over arbitrary index tuples.  A k-form is identified with the
covariant tensor whose components are the antisymmetrised ones, so that
``dx^dy == dx@dy - dy@dx`` and ``interior(X, w)`` equals
``contract_first(X, as_tensor(w))``.
"""

from __future__ import annotations

from itertools import permutations
from typing import Iterable, Sequence

from .symexpr import Chart, ChartMismatch, RationalExpr, parse

__all__ = [
    "VectorField",
    "DiffForm",
    "CovTensor",
    "lie_bracket",
    "wedge",
    "wedge_all",
    "exterior_d",
    "interior",
    "lie_derivative",
    "tensor_product",
    "as_tensor",
    "contract_first",
    "contract_chain",
    "prolong_to_product",
    "diagonal",
    "form_value",
    "vector_field",
    "form_from_terms",
    "coordinate_frame",
]


def _check_chart(a, b):
    if a.chart != b.chart:
        raise ChartMismatch(f"chart mismatch: {a.chart} vs {b.chart}")


def _perm_sign(seq):
    """Sign of the permutation sorting ``seq`` (0 if there is a repeat)."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def _fmt_coeff(c):
    s = str(c)
    if any(ch in s for ch in " /") or s.startswith("-"):
        return f"({s})"
    return s


class VectorField:
    __slots__ = ("chart", "coeffs")

    def __init__(self, chart: Chart, coeffs: Sequence):
        coeffs = tuple(parse(c, chart) if not isinstance(c, RationalExpr) else c for c in coeffs)
        if len(coeffs) != chart.dim:
            raise ValueError(f"expected {chart.dim} components, got {len(coeffs)}")
        for c in coeffs:
            if c.chart != chart:
                raise ChartMismatch("component on a different chart")
        self.chart = chart
        self.coeffs = coeffs

    @classmethod
    def zero(cls, chart):
        z = RationalExpr.zero(chart)
        return cls(chart, [z] * chart.dim)

    @classmethod
    def coordinate(cls, chart, i):
        if isinstance(i, str):
            i = chart.index(i)
        z, one = RationalExpr.zero(chart), RationalExpr.one(chart)
        return cls(chart, [one if k == i else z for k in range(chart.dim)])

    def __call__(self, f: RationalExpr) -> RationalExpr:
        """Directional derivative X(f)."""
        out = RationalExpr.zero(self.chart)
        for j, c in enumerate(self.coeffs):
            if c:
                d = f.diff(j)
                if d:
                    out = out + c * d
        return out

    def is_zero(self):
        return not any(self.coeffs)

    def __bool__(self):
        return not self.is_zero()

    def __add__(self, other):
        _check_chart(self, other)
        return VectorField(self.chart, [a + b for a, b in zip(self.coeffs, other.coeffs)])

    def __sub__(self, other):
        _check_chart(self, other)
        return VectorField(self.chart, [a - b for a, b in zip(self.coeffs, other.coeffs)])

    def __neg__(self):
        return VectorField(self.chart, [-a for a in self.coeffs])

    def __mul__(self, s):
        return VectorField(self.chart, [a * s for a in self.coeffs])

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, VectorField) and self.chart == other.chart and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __str__(self):
        parts = [f"{_fmt_coeff(c)} * d/d{n}" for c, n in zip(self.coeffs, self.chart.names) if c]
        return " + ".join(parts) if parts else "0"

    __repr__ = __str__


class _Sparse:
    """Shared sparse storage: ``terms`` maps index tuples to nonzero coefficients."""

    __slots__ = ("chart", "terms")
    _order_attr = "degree"

    def _new(self, terms):
        raise NotImplementedError

    @property
    def order(self):
        return getattr(self, self._order_attr)

    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __add__(self, other):
        _check_chart(self, other)
        if other.order != self.order:
            raise ValueError("cannot add objects of different degree")
        terms = dict(self.terms)
        for k, c in other.terms.items():
            s = terms.get(k)
            s = c if s is None else s + c
            if s:
                terms[k] = s
            else:
                terms.pop(k, None)
        return self._new(terms)

    def __neg__(self):
        return self._new({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, s):
        if isinstance(s, RationalExpr) and not s:
            return self._new({})
        if not isinstance(s, RationalExpr) and s == 0:
            return self._new({})
        return self._new({k: c * s for k, c in self.terms.items()})

    __rmul__ = __mul__

    def __truediv__(self, s):
        return self._new({k: c / s for k, c in self.terms.items()})

    def __eq__(self, other):
        return (
            type(other) is type(self)
            and self.chart == other.chart
            and self.order == other.order
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def coeff(self, key):
        return self.terms.get(tuple(key), RationalExpr.zero(self.chart))

    def scalar(self):
        """The coefficient of a degree/rank 0 object."""
        if self.order != 0:
            raise ValueError("not a scalar")
        return self.coeff(())

    def map_coeffs(self, fn):
        out = {}
        for k, c in self.terms.items():
            v = fn(c)
            if v:
                out[k] = v
        return self._new(out)


def _clean(terms):
    return {k: c for k, c in terms.items() if c}


def _accumulate(terms, key, value):
    s = terms.get(key)
    terms[key] = value if s is None else s + value


class DiffForm(_Sparse):
    __slots__ = ("degree",)
    _order_attr = "degree"

    def __init__(self, chart: Chart, degree: int, terms=None):
        self.chart = chart
        self.degree = degree
        terms = terms or {}
        clean = {}
        for k, c in terms.items():
            k = tuple(k)
            if len(k) != degree or any(k[i] >= k[i + 1] for i in range(len(k) - 1)):
                raise ValueError(f"form index {k} is not strictly increasing of length {degree}")
            if k and not (0 <= k[0] and k[-1] < chart.dim):
                raise ValueError(f"form index {k} outside chart of dimension {chart.dim}")
            if c.chart != chart:
                raise ChartMismatch("coefficient on a different chart")
            if c:
                clean[k] = c
        self.terms = clean

    def _new(self, terms):
        return DiffForm(self.chart, self.degree, terms)

    @classmethod
    def function(cls, f: RationalExpr):
        return cls(f.chart, 0, {(): f})

    @classmethod
    def differential(cls, chart, i):
        if isinstance(i, str):
            i = chart.index(i)
        return cls(chart, 1, {(i,): RationalExpr.one(chart)})

    @classmethod
    def zero(cls, chart, degree):
        return cls(chart, degree, {})

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for k in sorted(self.terms):
            basis = "^".join(f"d{self.chart.names[i]}" for i in k) if k else "1"
            parts.append(f"{_fmt_coeff(self.terms[k])} * {basis}")
        return " + ".join(parts)

    __repr__ = __str__


class CovTensor(_Sparse):
    __slots__ = ("rank",)
    _order_attr = "rank"

    def __init__(self, chart: Chart, rank: int, terms=None):
        self.chart = chart
        self.rank = rank
        clean = {}
        for k, c in (terms or {}).items():
            k = tuple(k)
            if len(k) != rank:
                raise ValueError(f"tensor index {k} has wrong length for rank {rank}")
            if c:
                clean[k] = c
        self.terms = clean

    def _new(self, terms):
        return CovTensor(self.chart, self.rank, terms)

    @classmethod
    def scalar_field(cls, f: RationalExpr):
        return cls(f.chart, 0, {(): f})

    @classmethod
    def zero(cls, chart, rank):
        return cls(chart, rank, {})

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for k in sorted(self.terms):
            basis = "@".join(f"d{self.chart.names[i]}" for i in k) if k else "1"
            parts.append(f"{_fmt_coeff(self.terms[k])} * {basis}")
        return " + ".join(parts)

    __repr__ = __str__


# ---------------------------------------------------------------------------
# constructors from text


def vector_field(chart, components):
    return VectorField(chart, [parse(c, chart) for c in components])


def form_from_terms(chart, degree, terms: Iterable):
    """Build a form from ``(coeff, [coordinate names or indices])`` pairs.

    Index lists may be in any order; the sign of the sorting permutation is
    absorbed into the coefficient, repeated indices give zero.
    """
    out = {}
    for coeff, idx in terms:
        idx = [chart.index(i) if isinstance(i, str) else int(i) for i in idx]
        if len(idx) != degree:
            raise ValueError(f"term {idx} does not have degree {degree}")
        sign = _perm_sign(idx)
        if sign == 0:
            continue
        c = parse(coeff, chart) * sign
        _accumulate(out, tuple(sorted(idx)), c)
    return DiffForm(chart, degree, _clean(out))


def coordinate_frame(chart):
    return [VectorField.coordinate(chart, i) for i in range(chart.dim)]


# ---------------------------------------------------------------------------
# operations


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """[X, Y]^i = X(Y^i) - Y(X^i)."""
    _check_chart(X, Y)
    return VectorField(X.chart, [X(yi) - Y(xi) for xi, yi in zip(X.coeffs, Y.coeffs)])


def wedge(w: DiffForm, n: DiffForm) -> DiffForm:
    _check_chart(w, n)
    deg = w.degree + n.degree
    out = {}
    if deg > w.chart.dim:
        return DiffForm(w.chart, deg, {})
    for I, a in w.terms.items():
        sI = set(I)
        for J, b in n.terms.items():
            if sI.intersection(J):
                continue
            sign = _perm_sign(I + J)
            _accumulate(out, tuple(sorted(I + J)), a * b * sign)
    return DiffForm(w.chart, deg, _clean(out))


def wedge_all(forms: Sequence[DiffForm]) -> DiffForm:
    if not forms:
        raise ValueError("empty wedge")
    out = forms[0]
    for f in forms[1:]:
        out = wedge(out, f)
    return out


def exterior_d(w: DiffForm) -> DiffForm:
    chart = w.chart
    out = {}
    for I, c in w.terms.items():
        for j in range(chart.dim):
            if j in I:
                continue
            dc = c.diff(j)
            if not dc:
                continue
            sign = _perm_sign((j,) + I)
            _accumulate(out, tuple(sorted((j,) + I)), dc * sign)
    return DiffForm(chart, w.degree + 1, _clean(out))


def interior(X: VectorField, w: DiffForm) -> DiffForm:
    """Contraction with X in the first slot."""
    _check_chart(X, w)
    if w.degree == 0:
        raise ValueError("cannot contract a 0-form")
    out = {}
    for I, c in w.terms.items():
        for s, i in enumerate(I):
            xi = X.coeffs[i]
            if not xi:
                continue
            val = c * xi
            if s % 2:
                val = -val
            _accumulate(out, I[:s] + I[s + 1:], val)
    return DiffForm(w.chart, w.degree - 1, _clean(out))


def _partials(X):
    n = X.chart.dim
    return [[X.coeffs[j].diff(i) for i in range(n)] for j in range(n)]


def _lie_derivative_tensor(X: VectorField, T: CovTensor) -> CovTensor:
    # (L_X T)_K = X(T_K) + sum_s sum_j T_{K[s->j]} d_{K_s} X^j
    dX = _partials(X)
    nz = [[(i, d) for i, d in enumerate(row) if d] for row in dX]
    out = {}
    for K, c in T.terms.items():
        xc = X(c)
        if xc:
            _accumulate(out, K, xc)
        for s, j in enumerate(K):
            for i, d in nz[j]:
                _accumulate(out, K[:s] + (i,) + K[s + 1:], c * d)
    return CovTensor(T.chart, T.rank, _clean(out))


def lie_derivative(X: VectorField, T):
    """Lie derivative of a function, vector field, form or covariant tensor."""
    if isinstance(T, RationalExpr):
        if T.chart != X.chart:
            raise ChartMismatch("chart mismatch")
        return X(T)
    _check_chart(X, T)
    if isinstance(T, VectorField):
        return lie_bracket(X, T)
    if isinstance(T, DiffForm):
        if T.degree == 0:
            return DiffForm.function(X(T.scalar()))
        res = interior(X, exterior_d(T))
        if T.degree >= 1:
            res = res + exterior_d(interior(X, T))
        return res
    if isinstance(T, CovTensor):
        return _lie_derivative_tensor(X, T)
    raise TypeError(f"cannot take the Lie derivative of {type(T).__name__}")


def as_tensor(w) -> CovTensor:
    """Covariant tensor of a form (antisymmetrised, unnormalised components)."""
    if isinstance(w, CovTensor):
        return w
    if isinstance(w, RationalExpr):
        return CovTensor.scalar_field(w)
    out = {}
    for I, c in w.terms.items():
        for p in permutations(range(len(I))):
            key = tuple(I[k] for k in p)
            out[key] = c if _perm_sign(p) > 0 else -c
    return CovTensor(w.chart, w.degree, out)


def tensor_product(A, B) -> CovTensor:
    A = as_tensor(A)
    B = as_tensor(B)
    _check_chart(A, B)
    out = {}
    for I, a in A.terms.items():
        for J, b in B.terms.items():
            out[I + J] = a * b
    return CovTensor(A.chart, A.rank + B.rank, out)


def contract_first(Y: VectorField, T) -> CovTensor:
    """Insert Y into the first covariant slot of T."""
    T = as_tensor(T)
    _check_chart(Y, T)
    if T.rank == 0:
        raise ValueError("cannot contract a rank-0 tensor")
    out = {}
    for K, c in T.terms.items():
        y = Y.coeffs[K[0]]
        if y:
            _accumulate(out, K[1:], c * y)
    return CovTensor(T.chart, T.rank - 1, _clean(out))


def contract_chain(T, fields: Sequence[VectorField]) -> CovTensor:
    """Apply ``contract_first`` with ``fields[0]``, then ``fields[1]``, ...

    The written expression ``i_A i_B i_C T`` (innermost C first)
    corresponds to ``contract_chain(T, [C, B, A])``.
    """
    T = as_tensor(T)
    if len(fields) > T.rank:
        raise ValueError(f"chain of length {len(fields)} exceeds tensor rank {T.rank}")
    for Y in fields:
        T = contract_first(Y, T)
    return T


def form_value(w, fields: Sequence[VectorField]) -> RationalExpr:
    """w(X1, ..., Xk) for a k-form or rank-k tensor."""
    T = contract_chain(w, fields)
    if T.rank:
        raise ValueError("not enough vector fields")
    return T.coeff(())


def prolong_to_product(T, m: int, slot: int):
    """Copy T (on N) onto slot ``slot`` of ``N^m``."""
    chart = T.chart
    if not 1 <= slot <= m:
        raise ValueError(f"invalid slot {slot} for m={m}")
    P = chart.product(m)
    n = chart.dim
    off = (slot - 1) * n
    if isinstance(T, RationalExpr):
        return T.to_slot(P, slot)
    if isinstance(T, VectorField):
        z = RationalExpr.zero(P)
        coeffs = [z] * (m * n)
        for i, c in enumerate(T.coeffs):
            coeffs[off + i] = c.to_slot(P, slot)
        return VectorField(P, coeffs)
    terms = {tuple(i + off for i in K): c.to_slot(P, slot) for K, c in T.terms.items()}
    if isinstance(T, DiffForm):
        return DiffForm(P, T.degree, terms)
    if isinstance(T, CovTensor):
        return CovTensor(P, T.rank, terms)
    raise TypeError(f"cannot prolong {type(T).__name__}")


def diagonal(T, m: int):
    """Diagonal prolongation: the sum over slots of the slot copies of T."""
    out = prolong_to_product(T, m, 1)
    for a in range(2, m + 1):
        out = out + prolong_to_product(T, m, a)
    return out
