"""Finite-dimensional Lie algebras of vector fields and their structure constants."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Sequence

from .diffgeo import VectorField, lie_bracket
from .linalg import express_in_span, ff_det, linear_relations, nullspace, rational_coefficient_rows, rref
from .symexpr import RationalExpr

log = logging.getLogger(__name__)

__all__ = [
    "StructureConstants",
    "StructureConstantsError",
    "VGLieAlgebra",
    "ClosureError",
    "close_and_extract",
    "is_unimodular",
    "is_locally_automorphic",
    "solve_symmetries",
    "verify_isomorphic_sc",
    "Unimodularity",
    "LocalAutomorphy",
]


class StructureConstantsError(ValueError):
    pass


class ClosureError(ValueError):
    pass


class StructureConstants:
    """Table c[a][b][g] with [e_a, e_b] = sum_g c[a][b][g] e_g (0-based)."""

    __slots__ = ("dim", "c")

    def __init__(self, dim: int, entries=None, *, check=True):
        self.dim = dim
        c = [[[Fraction(0)] * dim for _ in range(dim)] for _ in range(dim)]
        given = set()
        for (a, b, g), val in (entries or {}).items():
            val = Fraction(val)
            if not all(0 <= i < dim for i in (a, b, g)):
                raise StructureConstantsError(f"index {(a, b, g)} out of range for dim {dim}")
            if a == b:
                if val:
                    raise StructureConstantsError(f"[e{a+1}, e{a+1}] must vanish")
                continue
            for key, v in (((a, b, g), val), ((b, a, g), -val)):
                if key in given and c[key[0]][key[1]][key[2]] != v:
                    raise StructureConstantsError(f"antisymmetry violated at {key}")
                c[key[0]][key[1]][key[2]] = v
            given.add((a, b, g))
            given.add((b, a, g))
        self.c = c
        if check:
            bad = self.jacobi_violation()
            if bad is not None:
                raise StructureConstantsError(f"Jacobi identity fails for (a,b,g,nu)={bad}")

    @classmethod
    def from_sparse(cls, dim, items):
        """From 1-based ``(alpha, beta, gamma, value)`` entries."""
        return cls(dim, {(a - 1, b - 1, g - 1): Fraction(v) for a, b, g, v in items})

    @classmethod
    def abelian(cls, dim):
        return cls(dim, {})

    def to_sparse(self):
        """1-based ``(alpha, beta, gamma, value)`` with alpha < beta."""
        out = []
        for a in range(self.dim):
            for b in range(a + 1, self.dim):
                for g in range(self.dim):
                    if self.c[a][b][g]:
                        out.append((a + 1, b + 1, g + 1, self.c[a][b][g]))
        return out

    def jacobi_violation(self):
        r, c = self.dim, self.c
        for a in range(r):
            for b in range(a + 1, r):
                for g in range(b + 1, r):
                    for nu in range(r):
                        s = sum(
                            c[a][b][m] * c[m][g][nu] + c[b][g][m] * c[m][a][nu] + c[g][a][m] * c[m][b][nu]
                            for m in range(r)
                        )
                        if s:
                            return (a + 1, b + 1, g + 1, nu + 1)
        return None

    def bracket(self, x: Sequence, y: Sequence):
        out = [Fraction(0)] * self.dim
        for a, xa in enumerate(x):
            if not xa:
                continue
            for b, yb in enumerate(y):
                if not yb:
                    continue
                for g, v in enumerate(self.c[a][b]):
                    if v:
                        out[g] += xa * yb * v
        return out

    def ad_matrix(self, a):
        """Matrix of ad_{e_a}: column b holds the components of [e_a, e_b]."""
        return [[self.c[a][b][g] for b in range(self.dim)] for g in range(self.dim)]

    def traces(self):
        return [sum(self.c[a][b][b] for b in range(self.dim)) for a in range(self.dim)]

    def negated(self):
        return StructureConstants(
            self.dim,
            {(a, b, g): -self.c[a][b][g] for a in range(self.dim) for b in range(self.dim)
             for g in range(self.dim) if a < b and self.c[a][b][g]},
            check=False,
        )

    def __eq__(self, other):
        return isinstance(other, StructureConstants) and self.dim == other.dim and self.c == other.c

    def __str__(self):
        rows = []
        for a, b, g, v in self.to_sparse():
            rows.append(f"[e{a},e{b}] += {v}*e{g}")
        return "; ".join(rows) if rows else f"abelian({self.dim})"

    __repr__ = __str__


@dataclass
class VGLieAlgebra:
    basis: list
    sc: StructureConstants

    def __post_init__(self):
        self.basis = list(self.basis)
        if len(self.basis) != self.sc.dim:
            raise ValueError("basis size and structure constant dimension differ")
        for a in range(self.sc.dim):
            for b in range(a + 1, self.sc.dim):
                lhs = lie_bracket(self.basis[a], self.basis[b])
                rhs = VectorField.zero(self.chart)
                for g, v in enumerate(self.sc.c[a][b]):
                    if v:
                        rhs = rhs + self.basis[g] * v
                if lhs != rhs:
                    raise ValueError(f"[X{a+1}, X{b+1}] does not match the structure constants")

    @property
    def chart(self):
        return self.basis[0].chart

    @property
    def dim(self):
        return len(self.basis)

    def combination(self, coeffs):
        out = VectorField.zero(self.chart)
        for c, X in zip(coeffs, self.basis):
            if c:
                out = out + X * c
        return out


def _independent(fields):
    keep = []
    for X in fields:
        if X.is_zero():
            continue
        if express_in_span(X.coeffs, [Y.coeffs for Y in keep]) is None:
            keep.append(X)
    return keep


def close_and_extract(fields: Sequence[VectorField], max_dim: int = 12) -> VGLieAlgebra:
    """Smallest Lie algebra (over Q) containing ``fields``, with its structure constants.

    The given fields keep their order at the front of the basis; new
    brackets are appended as they appear.
    """
    if not fields:
        raise ClosureError("empty list of vector fields")
    basis = _independent(fields)
    if len(basis) > max_dim:
        raise ClosureError(f"{len(basis)} independent fields exceed max_dim={max_dim}")
    done = set()
    changed = True
    while changed:
        changed = False
        n = len(basis)
        for a in range(n):
            for b in range(a + 1, n):
                if (a, b) in done:
                    continue
                done.add((a, b))
                Z = lie_bracket(basis[a], basis[b])
                if Z.is_zero():
                    continue
                if express_in_span(Z.coeffs, [Y.coeffs for Y in basis]) is None:
                    basis.append(Z)
                    changed = True
                    if len(basis) > max_dim:
                        raise ClosureError(f"Lie algebra dimension exceeds max_dim={max_dim}")
    entries = {}
    vecs = [Y.coeffs for Y in basis]
    for a in range(len(basis)):
        for b in range(a + 1, len(basis)):
            Z = lie_bracket(basis[a], basis[b])
            coeffs = express_in_span(Z.coeffs, vecs)
            if coeffs is None:
                raise ClosureError(f"[X{a+1}, X{b+1}] leaves the span")
            for g, v in enumerate(coeffs):
                if v:
                    entries[(a, b, g)] = v
    return VGLieAlgebra(basis, StructureConstants(len(basis), entries))


@dataclass
class Unimodularity:
    unimodular: bool
    traces: list

    def __bool__(self):
        return self.unimodular


def is_unimodular(sc: StructureConstants) -> Unimodularity:
    """Tr(ad_{e_a}) = sum_b c_{ab}^b for each a; unimodular iff all vanish."""
    tr = sc.traces()
    return Unimodularity(all(t == 0 for t in tr), tr)


@dataclass
class LocalAutomorphy:
    locally_automorphic: bool
    witness: RationalExpr | None
    reason: str = ""

    def __bool__(self):
        return self.locally_automorphic


def is_locally_automorphic(alg: VGLieAlgebra) -> LocalAutomorphy:
    """dim V == dim N and the frame determinant is a nonzero rational function."""
    n = alg.chart.dim
    if alg.dim != n:
        return LocalAutomorphy(False, None, f"dim V = {alg.dim} but dim N = {n}")
    det = ff_det([list(X.coeffs) for X in alg.basis])
    if not det:
        return LocalAutomorphy(False, det, "frame determinant vanishes identically")
    return LocalAutomorphy(True, det)


def _monomials(nvars, degree):
    out = []
    for d in range(degree + 1):
        for combo in combinations_with_replacement(range(nvars), d):
            e = [0] * nvars
            for i in combo:
                e[i] += 1
            out.append(tuple(e))
    return out


def _monomial_expr(chart, exps):
    e = RationalExpr.one(chart)
    for name, k in zip(chart.names, exps):
        if k:
            e = e * RationalExpr.var(chart, name) ** k
    return e


def solve_symmetries(alg, ansatz_degree: int = 2) -> list:
    """Vector fields Y with polynomial coefficients of degree <= ansatz_degree
    commuting with every basis field; returns an rref-normalised basis."""
    fields = alg.basis if isinstance(alg, VGLieAlgebra) else list(alg)
    chart = fields[0].chart
    n = chart.dim
    zero = RationalExpr.zero(chart)
    unknowns = []
    for i in range(n):
        for mono in _monomials(n, ansatz_degree):
            coeffs = [zero] * n
            coeffs[i] = _monomial_expr(chart, mono)
            unknowns.append(VectorField(chart, coeffs))
    rows = []
    for X in fields:
        brackets = [lie_bracket(X, B).coeffs for B in unknowns]
        rows.extend(rational_coefficient_rows(brackets))
    sols = nullspace(rows, len(unknowns)) if rows else [
        [Fraction(int(i == k)) for i in range(len(unknowns))] for k in range(len(unknowns))
    ]
    if not sols:
        log.warning("no symmetries found with ansatz degree %d", ansatz_degree)
        return []
    # order unknowns so that rref favours low-degree, early-coordinate terms
    R, _ = rref(sols)
    out = []
    for row in R:
        Y = VectorField.zero(chart)
        for c, B in zip(row, unknowns):
            if c:
                Y = Y + B * c
        out.append(Y)
    return out


def verify_isomorphic_sc(a: StructureConstants, b: StructureConstants, M) -> bool:
    """True iff e_i -> sum_j M[i][j] f_j is a Lie algebra isomorphism a -> b."""
    if a.dim != b.dim or len(M) != a.dim or any(len(row) != b.dim for row in M):
        raise ValueError("dimension mismatch")
    M = [[Fraction(x) for x in row] for row in M]
    R, piv = rref(M)
    if len(piv) != a.dim:
        raise ValueError("singular map")
    for i in range(a.dim):
        for k in range(i + 1, a.dim):
            lhs = [Fraction(0)] * b.dim
            for g, v in enumerate(a.c[i][k]):
                if v:
                    lhs = [x + v * y for x, y in zip(lhs, M[g])]
            rhs = b.bracket(M[i], M[k])
            if lhs != rhs:
                return False
    return True


def symmetry_relations(fields, symmetries):
    """Q-linear relations among the given symmetries (empty for a basis)."""
    return linear_relations([Y.coeffs for Y in symmetries])
