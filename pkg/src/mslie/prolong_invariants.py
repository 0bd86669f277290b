"""Tensor invariants on diagonal prolongations and the constants of motion they yield."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .coalgebra import TensorElement
from .diffgeo import (
    CovTensor,
    VectorField,
    as_tensor,
    contract_chain,
    diagonal,
    lie_derivative,
    prolong_to_product,
    tensor_product,
)
from .liealgebra import StructureConstants, VGLieAlgebra, verify_isomorphic_sc
from .linalg import ff_det, ff_rank
from .multisymplectic import MultisymplecticForm, minimal_lie_hamilton_algebra
from .symexpr import RationalExpr

__all__ = [
    "Realization",
    "InvariantReport",
    "Independence",
    "realize",
    "verify_evolution_invariant",
    "extract_constants",
    "apply_chain",
    "smallest_m",
    "check_independence",
    "constant_of_motion_check",
    "prolonged_basis",
    "READINGS",
]


def _copies(chart):
    return chart.copies if chart.base is not None else 1


def _base(chart):
    return chart.base if chart.base is not None else chart


def _lift(obj, chart):
    """Diagonal prolongation of a base-chart object to ``chart`` (no-op when m=1)."""
    if obj.chart == chart:
        return obj
    if _base(chart) != obj.chart:
        raise ValueError("object does not live on the base of the target chart")
    return diagonal(obj, chart.copies)


def prolonged_basis(alg: VGLieAlgebra, m: int) -> list:
    if m == 1:
        return list(alg.basis)
    return [diagonal(X, m) for X in alg.basis]


@dataclass
class Realization:
    """Assignment v_a -> d theta_a := i_{X_a} Theta, verified to be a Lie algebra map.

    ``sign`` is "plain" when the abstract structure constants equal those of
    the Lie-Hamilton algebra and "negated" when they are their negatives.
    """

    alg: VGLieAlgebra
    theta: MultisymplecticForm
    sc: StructureConstants | None = None
    sign: str = "plain"
    generators: list = field(default_factory=list, init=False)
    iso_check: bool = field(default=False, init=False)

    def __post_init__(self):
        if self.sign not in ("plain", "negated"):
            raise ValueError("sign must be 'plain' or 'negated'")
        lh = minimal_lie_hamilton_algebra(self.alg, self.theta)
        self.generators = lh.generators
        if self.sc is None:
            self.sc = lh.sc if self.sign == "plain" else lh.sc.negated()
        target = lh.sc if self.sign == "plain" else lh.sc.negated()
        ident = [[int(i == j) for j in range(self.sc.dim)] for i in range(self.sc.dim)]
        if self.sc.dim != target.dim or not verify_isomorphic_sc(self.sc, target, ident):
            raise ValueError(
                f"abstract structure constants do not match the {self.sign} Lie-Hamilton structure constants"
            )
        self.iso_check = True
        self._cache = {}

    @property
    def dim(self):
        return self.sc.dim

    def _letter(self, alpha, m, slot):
        key = (alpha, m, slot)
        if key not in self._cache:
            g = self.generators[alpha - 1]
            if m > 1:
                g = prolong_to_product(g, m, slot)
            self._cache[key] = as_tensor(g)
        return self._cache[key]

    def _word(self, word, m, slot):
        key = (word, m, slot)
        if key not in self._cache:
            t = self._letter(word[0], m, slot)
            for a in word[1:]:
                t = tensor_product(t, self._letter(a, m, slot))
            self._cache[key] = t
        return self._cache[key]


def realize(r: Realization, t: TensorElement) -> CovTensor:
    """Upsilon^(m): letters -> d theta, words -> tensor products in one slot,
    boxed factors -> tensor products across slots of N^m."""
    if t.dim != r.dim:
        raise ValueError(f"element of dimension {t.dim} for a realization of dimension {r.dim}")
    m = t.m
    chart = r.alg.chart if m == 1 else r.alg.chart.product(m)
    out = {}
    rank = None
    for key, c in t.terms.items():
        piece = None
        for slot, w in enumerate(key, start=1):
            if not w:
                continue
            wt = r._word(w, m, slot)
            piece = wt if piece is None else tensor_product(piece, wt)
        if piece is None:
            piece = CovTensor.scalar_field(RationalExpr.one(chart))
        if rank is None:
            rank = piece.rank
        elif rank != piece.rank:
            raise ValueError("element is not homogeneous in total degree")
        cf = Fraction(c)
        for K, v in piece.terms.items():
            s = out.get(K)
            out[K] = v * cf if s is None else s + v * cf
    return CovTensor(chart, rank or 0, {K: v for K, v in out.items() if v})


@dataclass
class InvariantReport:
    tensor: CovTensor
    annihilators: list
    failures: list
    scalars: dict = field(default_factory=dict)
    jacobian_ok: bool | None = None
    jacobian: RationalExpr | None = None

    @property
    def invariant(self):
        return not self.failures

    def to_json(self, include_tensor=False) -> dict:
        d = {
            "rank": self.tensor.rank,
            "chart": list(self.tensor.chart.names),
            "terms": len(self.tensor.terms),
            "invariant": self.invariant,
            "annihilators": self.annihilators,
            "failures": self.failures,
            "scalars": {k: str(v) for k, v in self.scalars.items()},
            "jacobian_ok": self.jacobian_ok,
            "jacobian": None if self.jacobian is None else str(self.jacobian),
        }
        if include_tensor:
            d["tensor"] = str(self.tensor)
        return d


def verify_evolution_invariant(T, alg: VGLieAlgebra) -> InvariantReport:
    m = _copies(T.chart)
    fields = prolonged_basis(alg, m)
    ok, bad = [], []
    for a, X in enumerate(fields, start=1):
        name = f"X{a}" + (f"^[{m}]" if m > 1 else "")
        (ok if lie_derivative(X, T).is_zero() else bad).append(name)
    return InvariantReport(as_tensor(T), ok, bad)


READINGS = ("inner", "outer", "mean")


def apply_chain(T, fields: Sequence[VectorField], *, reading="inner"):
    """Contract T with i_{F1} i_{F2} ... i_{Fk}.

    ``inner``: the chain is read as written, the rightmost contraction
    acting first on the first slot.  ``outer``: ``fields[0]`` is inserted
    first.  ``mean``: the average of both, which is the contraction of the
    tensor symmetrised under reversal of its slot order.
    """
    if reading not in READINGS:
        raise ValueError(f"reading must be one of {READINGS}")
    if reading == "outer":
        return contract_chain(T, list(fields))
    inner = contract_chain(T, list(reversed(fields)))
    if reading == "inner":
        return inner
    outer = contract_chain(T, list(fields))
    return (inner + outer) * Fraction(1, 2)


def extract_constants(
    T,
    symmetries: Sequence[VectorField],
    chains: Mapping[str, Sequence[int]] | Sequence[Sequence[int]],
    alg: VGLieAlgebra | None = None,
    *,
    reading="inner",
) -> dict:
    """Scalars i_{Y_a^[m]} ... T for each chain of 1-based symmetry indices."""
    T = as_tensor(T)
    chart = T.chart
    if alg is not None:
        for i, Y in enumerate(symmetries, start=1):
            for a, X in enumerate(alg.basis, start=1):
                if not lie_derivative(X, Y).is_zero():
                    raise ValueError(f"Y{i} does not commute with X{a}")
    Ys = [_lift(Y, chart) for Y in symmetries]
    if not isinstance(chains, Mapping):
        chains = {"".join(f"Y{i}" for i in ch): ch for ch in chains}
    out = {}
    for name, ch in chains.items():
        if len(ch) > T.rank:
            raise ValueError(f"chain {name} longer than tensor rank {T.rank}")
        S = apply_chain(T, [Ys[i - 1] for i in ch], reading=reading)
        if S.rank:
            raise ValueError(f"chain {name} leaves a tensor of rank {S.rank}")
        f = S.coeff(())
        if alg is not None and not constant_of_motion_check(f, alg):
            raise AssertionError(f"contraction {name} is not a constant of motion")
        out[name] = f
    return out


def smallest_m(alg: VGLieAlgebra, m_max: int = 6) -> int:
    r = alg.dim
    for m in range(1, m_max + 1):
        M = [list(X.coeffs) for X in prolonged_basis(alg, m)]
        if ff_rank(M) == r:
            return m
    raise ValueError(f"prolonged fields stay dependent up to m={m_max}")


@dataclass
class Independence:
    independent: bool
    determinant: RationalExpr

    def __bool__(self):
        return self.independent


def check_independence(scalars: Sequence[RationalExpr], wrt: Sequence[str]) -> Independence:
    if len(scalars) != len(wrt):
        raise ValueError(f"{len(scalars)} functions but {len(wrt)} variables")
    J = [[f.diff(x) for x in wrt] for f in scalars]
    det = ff_det(J)
    return Independence(bool(det), det)


def constant_of_motion_check(f: RationalExpr, alg: VGLieAlgebra) -> bool:
    m = _copies(f.chart)
    return all(not X(f) for X in prolonged_basis(alg, m))
