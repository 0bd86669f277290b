"""Exact linear algebra over Q and over the rational-function field of a chart."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .symexpr import RationalExpr

__all__ = [
    "rref",
    "nullspace",
    "solve_rational",
    "rational_coefficient_rows",
    "linear_relations",
    "express_in_span",
    "ff_eliminate",
    "ff_rank",
    "ff_det",
    "ff_inverse",
    "ff_solve",
    "InconsistentSystem",
]


class InconsistentSystem(ValueError):
    pass


# ---------------------------------------------------------------------------
# over Q


def rref(M: Sequence[Sequence]):
    """Reduced row echelon form of a Fraction matrix; returns (rows, pivot_cols)."""
    A = [[Fraction(x) for x in row] for row in M]
    if not A:
        return [], []
    ncols = len(A[0])
    pivots = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(A)) if A[i][c] != 0), None)
        if p is None:
            continue
        A[r], A[p] = A[p], A[r]
        inv = 1 / A[r][c]
        A[r] = [x * inv for x in A[r]]
        for i in range(len(A)):
            if i != r and A[i][c] != 0:
                f = A[i][c]
                A[i] = [a - f * b for a, b in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == len(A):
            break
    return A[:r], pivots


def nullspace(M: Sequence[Sequence], ncols: int | None = None):
    """Basis of {x : M x = 0} over Q, one vector per free column."""
    if ncols is None:
        ncols = len(M[0]) if M else 0
    R, piv = rref(M) if M else ([], [])
    free = [c for c in range(ncols) if c not in piv]
    basis = []
    for f in free:
        x = [Fraction(0)] * ncols
        x[f] = Fraction(1)
        for row, p in zip(R, piv):
            x[p] = -row[f]
        basis.append(x)
    return basis


def solve_rational(M: Sequence[Sequence], b: Sequence):
    """One solution of M x = b over Q (free variables set to zero)."""
    ncols = len(M[0]) if M else 0
    aug = [list(row) + [bi] for row, bi in zip(M, b)]
    R, piv = rref(aug)
    if ncols in piv:
        raise InconsistentSystem("no rational solution")
    x = [Fraction(0)] * ncols
    for row, p in zip(R, piv):
        x[p] = row[-1]
    return x


def _lcm(polys):
    out = polys[0]
    for p in polys[1:]:
        if p != out:
            out = out.lcm(p)
    return out


def rational_coefficient_rows(vectors: Sequence[Sequence[RationalExpr]]):
    """Matrix over Q whose kernel is the space of Q-linear relations among ``vectors``.

    Column k corresponds to vectors[k]; rows are indexed by (component,
    monomial) after clearing denominators componentwise.
    """
    if not vectors:
        return []
    ncomp = len(vectors[0])
    rows = []
    for i in range(ncomp):
        entries = [v[i] for v in vectors]
        nonzero = [e for e in entries if e]
        if not nonzero:
            continue
        L = _lcm([e.den for e in nonzero])
        cols = {}
        for k, e in enumerate(entries):
            if not e:
                continue
            p = e.num * L.exquo(e.den)
            for mono, c in p.iterterms():
                cols.setdefault(mono, {})[k] = Fraction(int(c))
        for mono in sorted(cols):
            row = [Fraction(0)] * len(vectors)
            for k, c in cols[mono].items():
                row[k] = c
            rows.append(row)
    return rows


def linear_relations(vectors):
    """Basis of {lambda in Q^k : sum lambda_k vectors[k] = 0}."""
    return nullspace(rational_coefficient_rows(vectors), len(vectors))


def express_in_span(target: Sequence[RationalExpr], basis: Sequence[Sequence[RationalExpr]]):
    """Constant coefficients c with sum c_k basis[k] == target, or None."""
    vecs = list(basis) + [list(target)]
    rows = rational_coefficient_rows(vecs)
    if not rows:
        return [Fraction(0)] * len(basis)
    A = [row[:-1] for row in rows]
    b = [row[-1] for row in rows]
    try:
        return solve_rational(A, b)
    except InconsistentSystem:
        return None


# ---------------------------------------------------------------------------
# over the rational-function field


def _weight(e):
    return len(e.num) + len(e.den)


def ff_eliminate(M: Sequence[Sequence[RationalExpr]], *, reduce=False):
    """Gaussian elimination over the function field.

    Returns (rows, pivot_cols, det_factor) where rows is the echelon form
    (reduced if ``reduce``) and det_factor tracks row swaps and pivots
    when no scaling is applied.
    """
    A = [list(row) for row in M]
    if not A:
        return [], [], None
    nrows, ncols = len(A), len(A[0])
    pivots = []
    r = 0
    for c in range(ncols):
        cands = [i for i in range(r, nrows) if A[i][c]]
        if not cands:
            continue
        p = min(cands, key=lambda i: _weight(A[i][c]))
        A[r], A[p] = A[p], A[r]
        piv = A[r][c]
        if reduce:
            inv = piv.inverse()
            A[r] = [x * inv if x else x for x in A[r]]
            piv = A[r][c]
        rng = range(nrows) if reduce else range(r + 1, nrows)
        for i in rng:
            if i != r and A[i][c]:
                f = A[i][c] / piv
                A[i] = [a - f * b if b else a for a, b in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return A, pivots, None


def ff_rank(M) -> int:
    if not M or not M[0]:
        return 0
    _, piv, _ = ff_eliminate(M)
    return len(piv)


def ff_det(M) -> RationalExpr:
    n = len(M)
    if any(len(row) != n for row in M):
        raise ValueError("determinant of a non-square matrix")
    chart = M[0][0].chart
    A = [list(row) for row in M]
    det = RationalExpr.one(chart)
    for c in range(n):
        cands = [i for i in range(c, n) if A[i][c]]
        if not cands:
            return RationalExpr.zero(chart)
        p = min(cands, key=lambda i: _weight(A[i][c]))
        if p != c:
            A[c], A[p] = A[p], A[c]
            det = -det
        piv = A[c][c]
        det = det * piv
        for i in range(c + 1, n):
            if A[i][c]:
                f = A[i][c] / piv
                A[i] = [a - f * b if b else a for a, b in zip(A[i], A[c])]
    return det


def ff_inverse(M):
    n = len(M)
    chart = M[0][0].chart
    one, zero = RationalExpr.one(chart), RationalExpr.zero(chart)
    aug = [list(row) + [one if i == j else zero for j in range(n)] for i, row in enumerate(M)]
    R, piv, _ = ff_eliminate(aug, reduce=True)
    if piv[:n] != list(range(n)) or len(piv) < n:
        raise ZeroDivisionError("singular matrix over the function field")
    return [row[n:] for row in R[:n]]


def ff_solve(A, b):
    """Solve A x = b (possibly overdetermined) over the function field.

    Raises InconsistentSystem if there is no solution; free variables are 0.
    """
    chart = (A[0][0] if A and A[0] else b[0]).chart
    ncols = len(A[0])
    aug = [list(row) + [bi] for row, bi in zip(A, b)]
    R, piv, _ = ff_eliminate(aug, reduce=True)
    if ncols in piv:
        raise InconsistentSystem("right-hand side not in the column span")
    x = [RationalExpr.zero(chart)] * ncols
    for row, p in zip(R, piv):
        x[p] = row[-1]
    return x
