"""Multisymplectic forms compatible with a Lie algebra of vector fields."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .coalgebra import TensorElement, is_invariant
from .diffgeo import (
    CovTensor,
    DiffForm,
    VectorField,
    as_tensor,
    exterior_d,
    interior,
    lie_bracket,
    lie_derivative,
    tensor_product,
    wedge_all,
)
from .liealgebra import StructureConstants, VGLieAlgebra, is_locally_automorphic, is_unimodular, solve_symmetries
from .linalg import InconsistentSystem, express_in_span, ff_det, ff_eliminate, ff_inverse, ff_solve
from .symexpr import RationalExpr

__all__ = [
    "MultisymplecticForm",
    "LieHamiltonAlgebra",
    "NotClosed",
    "Degenerate",
    "NotUnimodular",
    "NotLocallyAutomorphic",
    "NotHamiltonian",
    "NoPrimitive",
    "NotInImage",
    "check_multisymplectic",
    "dual_coframe",
    "invariant_form_space",
    "invariant_volume",
    "algebra_invariant_to_tensor",
    "algebra_invariant_to_form",
    "tensor_to_form",
    "hamiltonian_form",
    "bracket_km1",
    "bracket_km2",
    "minimal_lie_hamilton_algebra",
    "certification_report",
]


class NotClosed(ValueError):
    pass


class Degenerate(ValueError):
    pass


class NotUnimodular(ValueError):
    def __init__(self, traces):
        self.traces = list(traces)
        super().__init__("Lie algebra is not unimodular; Tr ad = " + ", ".join(str(t) for t in self.traces))


class NotLocallyAutomorphic(ValueError):
    pass


class NotHamiltonian(ValueError):
    pass


class NoPrimitive(ValueError):
    pass


class NotInImage(ValueError):
    pass


def _index_tuples(n, k):
    return list(combinations(range(n), k))


@dataclass
class MultisymplecticForm:
    form: DiffForm
    closed: bool
    generic_rank: int
    degeneracy_locus: RationalExpr | None = None
    _matrix: list | None = field(default=None, repr=False, compare=False)

    @property
    def degree(self):
        return self.form.degree

    @property
    def chart(self):
        return self.form.chart

    def contraction_matrix(self):
        """Column i holds the components of i_{d/dx^i} form over increasing (k-1)-tuples."""
        if self._matrix is None:
            n, k = self.chart.dim, self.degree
            cols = [interior(VectorField.coordinate(self.chart, i), self.form) for i in range(n)]
            self._matrix = [[c.coeff(I) for c in cols] for I in _index_tuples(n, k - 1)]
        return self._matrix

    def vector_field_of(self, xi: DiffForm) -> VectorField:
        """The unique X with i_X form = xi."""
        if xi.degree != self.degree - 1 or xi.chart != self.chart:
            raise NotInImage("form of the wrong degree or chart")
        n, k = self.chart.dim, self.degree
        b = [xi.coeff(I) for I in _index_tuples(n, k - 1)]
        try:
            x = ff_solve(self.contraction_matrix(), b)
        except InconsistentSystem:
            raise NotInImage("form is not a contraction of the multisymplectic form") from None
        return VectorField(self.chart, x)


@dataclass
class LieHamiltonAlgebra:
    generators: list
    sc: StructureConstants
    fields: list = field(default_factory=list)


def check_multisymplectic(w: DiffForm) -> MultisymplecticForm:
    n, k = w.chart.dim, w.degree
    if not 2 <= k <= n:
        raise ValueError(f"degree {k} outside 2..{n}")
    if not exterior_d(w).is_zero():
        raise NotClosed("form is not closed")
    ms = MultisymplecticForm(w, True, 0)
    M = ms.contraction_matrix()
    # rank of the n x C(n,k-1) matrix via its transpose (rows = coordinates)
    T = [[M[r][i] for r in range(len(M))] for i in range(n)]
    _, piv, _ = ff_eliminate(T)
    ms.generic_rank = len(piv)
    if ms.generic_rank < n:
        raise Degenerate(f"generic rank {ms.generic_rank} < {n}: contraction map has a kernel")
    ms.degeneracy_locus = ff_det([[row[p] for p in piv] for row in T])
    return ms


def _frame_matrix(fields):
    return [list(X.coeffs) for X in fields]


def dual_coframe(alg) -> list:
    """1-forms eta_a with eta_a(X_b) = delta_ab."""
    fields = alg.basis if isinstance(alg, VGLieAlgebra) else list(alg)
    chart = fields[0].chart
    n = chart.dim
    if len(fields) != n:
        raise ValueError(f"{len(fields)} fields do not form a frame of a {n}-dimensional chart")
    try:
        inv = ff_inverse(_frame_matrix(fields))
    except ZeroDivisionError:
        raise ValueError("singular frame") from None
    return [DiffForm(chart, 1, {(i,): inv[i][a] for i in range(n)}) for a in range(n)]


def _check_invariant(fields, obj, what):
    for a, X in enumerate(fields):
        if not lie_derivative(X, obj).is_zero():
            raise AssertionError(f"{what} is not invariant under X{a + 1}")


def invariant_form_space(alg: VGLieAlgebra, degree: int, symmetries=None, *, ansatz_degree=2) -> list:
    """Wedge products of the dual coframe of Sym(V); all are V-invariant."""
    chart = alg.chart
    if degree == 0:
        return [DiffForm.function(RationalExpr.one(chart))]
    if symmetries is None:
        symmetries = solve_symmetries(alg, ansatz_degree)
    if len(symmetries) != alg.dim:
        raise ValueError(f"symmetry algebra has {len(symmetries)} elements, expected {alg.dim}")
    nu = dual_coframe(symmetries)
    out = []
    for I in combinations(range(len(nu)), degree):
        w = wedge_all([nu[i] for i in I])
        _check_invariant(alg.basis, w, f"nu^{I}")
        out.append(w)
    return out


def invariant_volume(alg: VGLieAlgebra) -> MultisymplecticForm:
    uni = is_unimodular(alg.sc)
    if not uni:
        raise NotUnimodular(uni.traces)
    la = is_locally_automorphic(alg)
    if not la:
        raise NotLocallyAutomorphic(la.reason)
    vol = wedge_all(dual_coframe(alg))
    _check_invariant(alg.basis, vol, "volume form")
    return check_multisymplectic(vol)


def _realize_dual(alg, omega: TensorElement) -> CovTensor:
    if omega.m != 1 or omega.dim != alg.dim:
        raise ValueError("expected an element of T(g*) of matching dimension")
    eta = [as_tensor(e) for e in dual_coframe(alg)]
    chart = alg.chart
    out = None
    for (w,), c in omega.terms.items():
        if w:
            t = eta[w[0] - 1]
            for i in w[1:]:
                t = tensor_product(t, eta[i - 1])
        else:
            t = CovTensor.scalar_field(RationalExpr.one(chart))
        t = t * Fraction(c)
        out = t if out is None else out + t
    return out


def algebra_invariant_to_tensor(alg: VGLieAlgebra, omega: TensorElement) -> CovTensor:
    """Substitute the dual coframe for e*_a; omega must be coad-invariant."""
    if not is_invariant(alg.sc, omega, dual=True):
        raise ValueError("element is not invariant under the coadjoint action")
    if omega.is_zero():
        return CovTensor.zero(alg.chart, 0)
    T = _realize_dual(alg, omega)
    _check_invariant(alg.basis, T, "realized tensor")
    return T


def tensor_to_form(T: CovTensor) -> DiffForm:
    """The form whose unnormalised antisymmetric tensor is T (T must be antisymmetric)."""
    w = DiffForm(T.chart, T.rank, {I: c for I, c in T.terms.items() if all(I[i] < I[i + 1] for i in range(len(I) - 1))})
    if as_tensor(w) != T:
        raise ValueError("tensor is not antisymmetric")
    return w


def algebra_invariant_to_form(alg: VGLieAlgebra, omega: TensorElement) -> DiffForm:
    if omega.is_zero():
        return DiffForm.zero(alg.chart, 0)
    T = algebra_invariant_to_tensor(alg, omega)
    return tensor_to_form(T)


def _form_rows(forms: Sequence[DiffForm]):
    keys = sorted(set().union(*(f.terms for f in forms)))
    return [[f.coeff(k) for k in keys] for f in forms]


def _coframe_ansatz(frame, degree):
    eta = dual_coframe(frame)
    chart = eta[0].chart
    if degree == 0:
        return [DiffForm.function(RationalExpr.one(chart))]
    return [wedge_all([eta[i] for i in I]) for I in combinations(range(len(eta)), degree)]


def hamiltonian_form(X: VectorField, theta: MultisymplecticForm, ansatz=None, *, frame=None) -> DiffForm:
    """A (k-2)-form h with dh = i_X theta, searched in the Q-span of ``ansatz``.

    Without an explicit ansatz the wedge products of degree k-2 of the
    dual coframe of ``frame`` are used.
    """
    k = theta.degree
    target = interior(X, theta.form)
    if not exterior_d(target).is_zero():
        raise NotHamiltonian("i_X Theta is not closed")
    if target.is_zero():
        return DiffForm.zero(X.chart, k - 2)
    if ansatz is None:
        if frame is None:
            raise ValueError("need an ansatz or a frame")
        ansatz = _coframe_ansatz(frame, k - 2)
    ansatz = list(ansatz)
    diffs = [exterior_d(a) for a in ansatz]
    rows = _form_rows(diffs + [target])
    coeffs = express_in_span(rows[-1], rows[:-1])
    if coeffs is None:
        raise NoPrimitive("no primitive in the span of the ansatz")
    out = DiffForm.zero(X.chart, k - 2)
    for c, a in zip(coeffs, ansatz):
        if c:
            out = out + a * c
    return out


def bracket_km1(xi: DiffForm, zeta: DiffForm, theta: MultisymplecticForm) -> DiffForm:
    """{xi, zeta} = i_{[Y, X]} theta where i_X theta = xi and i_Y theta = zeta."""
    X = theta.vector_field_of(xi)
    Y = theta.vector_field_of(zeta)
    return interior(lie_bracket(Y, X), theta.form)


def bracket_km2(theta_x: DiffForm, theta_y: DiffForm, theta: MultisymplecticForm) -> DiffForm:
    """{h_X, h_Y} = i_Y i_X theta."""
    X = theta.vector_field_of(exterior_d(theta_x))
    Y = theta.vector_field_of(exterior_d(theta_y))
    return interior(Y, interior(X, theta.form))


def minimal_lie_hamilton_algebra(alg: VGLieAlgebra, theta: MultisymplecticForm) -> LieHamiltonAlgebra:
    gens = []
    for a, X in enumerate(alg.basis):
        g = interior(X, theta.form)
        if not exterior_d(g).is_zero():
            raise NotHamiltonian(f"X{a + 1} is not locally Hamiltonian")
        gens.append(g)
    entries = {}
    r = len(gens)
    for a in range(r):
        for b in range(a + 1, r):
            br = bracket_km1(gens[a], gens[b], theta)
            rows = _form_rows(gens + [br])
            coeffs = express_in_span(rows[-1], rows[:-1])
            if coeffs is None:
                raise ValueError(f"bracket of generators {a + 1},{b + 1} leaves their span")
            for g, v in enumerate(coeffs):
                if v:
                    entries[(a, b, g)] = v
    return LieHamiltonAlgebra(gens, StructureConstants(r, entries), list(alg.basis))


def certification_report(theta: MultisymplecticForm, alg: VGLieAlgebra | None = None, frame=None) -> dict:
    rep = {
        "degree": theta.degree,
        "dimension": theta.chart.dim,
        "closed": theta.closed,
        "generic_rank": theta.generic_rank,
        "degeneracy_locus": str(theta.degeneracy_locus) if theta.degeneracy_locus is not None else None,
        "form": str(theta.form),
    }
    if alg is not None:
        gens = []
        for a, X in enumerate(alg.basis):
            g = interior(X, theta.form)
            closed = exterior_d(g).is_zero()
            entry = {"generator": f"X{a + 1}", "locally_hamiltonian": closed, "hamiltonian_form": None}
            if closed:
                try:
                    h = hamiltonian_form(X, theta, frame=frame or alg.basis)
                    entry["hamiltonian_form"] = str(h)
                except (NoPrimitive, ValueError):
                    pass
            gens.append(entry)
        rep["generators"] = gens
    return rep
