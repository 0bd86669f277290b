"""Tensor, symmetric and Grassmann algebras of a Lie algebra with the primitive coproduct.

A :class:`TensorElement` lives in ``T(g) # ... # T(g)`` (``m`` boxed
factors).  Each term is a tuple of ``m`` words; a word is a tuple of
1-based basis indices and the empty word is the unit.  Coefficients are
exact rationals.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, permutations
from typing import Iterable, Mapping, Sequence

from .liealgebra import StructureConstants

__all__ = [
    "TensorElement",
    "NonHomogeneous",
    "coproduct",
    "coproduct_at",
    "coproduct_m",
    "coproduct_m_closed",
    "counit",
    "counit_at",
    "ad_action",
    "coad_action",
    "symmetrize",
    "antisymmetrize",
    "wedge_word",
    "is_invariant",
    "is_symmetric",
    "is_antisymmetric",
    "AbstractCasimir",
    "casimir_from_entries",
]


class NonHomogeneous(ValueError):
    pass


def _perm_sign(p):
    sign = 1
    p = list(p)
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                sign = -sign
    return sign


class TensorElement:
    __slots__ = ("dim", "m", "terms")

    def __init__(self, dim: int, m: int, terms: Mapping | None = None):
        if m < 1:
            raise ValueError("m must be >= 1")
        self.dim = dim
        self.m = m
        clean = {}
        for key, c in (terms or {}).items():
            key = tuple(tuple(int(i) for i in w) for w in key)
            if len(key) != m:
                raise ValueError(f"term {key} does not have {m} factors")
            for w in key:
                for i in w:
                    if not 1 <= i <= dim:
                        raise ValueError(f"basis index {i} outside 1..{dim}")
            c = Fraction(c)
            if c:
                c = clean.get(key, 0) + c
                if c:
                    clean[key] = c
                else:
                    clean.pop(key, None)
        self.terms = clean

    # constructors

    @classmethod
    def zero(cls, dim, m=1):
        return cls(dim, m)

    @classmethod
    def unit(cls, dim, m=1):
        return cls(dim, m, {((),) * m: 1})

    @classmethod
    def word(cls, dim, letters: Sequence[int], coeff=1):
        return cls(dim, 1, {(tuple(letters),): coeff})

    @classmethod
    def generator(cls, dim, alpha):
        return cls.word(dim, [alpha])

    # arithmetic

    def _check(self, other):
        if not isinstance(other, TensorElement):
            raise TypeError("expected a TensorElement")
        if (self.dim, self.m) != (other.dim, other.m):
            raise ValueError(f"shape mismatch: (dim={self.dim}, m={self.m}) vs (dim={other.dim}, m={other.m})")

    def __add__(self, other):
        self._check(other)
        terms = dict(self.terms)
        for k, c in other.terms.items():
            s = terms.get(k, 0) + c
            if s:
                terms[k] = s
            else:
                terms.pop(k, None)
        return TensorElement(self.dim, self.m, terms)

    def __neg__(self):
        return TensorElement(self.dim, self.m, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s):
        s = Fraction(s)
        return TensorElement(self.dim, self.m, {k: c * s for k, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, TensorElement):
            return self.product(other)
        return self.scale(other)

    def __rmul__(self, s):
        return self.scale(s)

    def product(self, other):
        """Factorwise concatenation, the algebra product of T^(m)(g)."""
        self._check(other)
        out = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                key = tuple(a + b for a, b in zip(k1, k2))
                out[key] = out.get(key, 0) + c1 * c2
        return TensorElement(self.dim, self.m, out)

    def box(self, other):
        """``self # other`` in T^(m1+m2)(g)."""
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        out = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                out[k1 + k2] = out.get(k1 + k2, 0) + c1 * c2
        return TensorElement(self.dim, self.m + other.m, out)

    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        return (
            isinstance(other, TensorElement)
            and (self.dim, self.m) == (other.dim, other.m)
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.dim, self.m, frozenset(self.terms.items())))

    def map_words(self, fn):
        """Linear extension of a map ``key -> iterable of (key, coeff)``."""
        out = {}
        m = None
        for k, c in self.terms.items():
            for k2, c2 in fn(k):
                m = len(k2)
                out[k2] = out.get(k2, 0) + c * c2
        return TensorElement(self.dim, m if m is not None else self.m, out)

    def factor_lengths(self, j):
        return {len(k[j]) for k in self.terms}

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for k in sorted(self.terms, key=lambda k: (tuple(len(w) for w in k), k)):
            c = self.terms[k]
            body = " # ".join(".".join(f"v{i}" for i in w) if w else "1" for w in k)
            parts.append(f"{c} * {body}" if c != 1 else body)
        return " + ".join(parts)

    __repr__ = __str__


# ---------------------------------------------------------------------------
# coproduct and counit


def _split_word(w):
    """Delta(w) = sum over subsets S of positions of (w|S, w|S^c)."""
    n = len(w)
    idx = range(n)
    for k in range(n + 1):
        for S in combinations(idx, k):
            rest = [i for i in idx if i not in S]
            yield tuple(w[i] for i in S), tuple(w[i] for i in rest)


def coproduct_at(t: TensorElement, factor: int) -> TensorElement:
    """Apply Delta to boxed factor ``factor`` (0-based), identity elsewhere."""
    if not 0 <= factor < t.m:
        raise ValueError(f"factor {factor} out of range for m={t.m}")

    def fn(k):
        for a, b in _split_word(k[factor]):
            yield k[:factor] + (a, b) + k[factor + 1:], 1

    out = t.map_words(fn)
    if not out.terms:
        return TensorElement(t.dim, t.m + 1)
    return out


def coproduct(t: TensorElement) -> TensorElement:
    if t.m != 1:
        raise ValueError("coproduct expects an element of T(g)")
    return coproduct_at(t, 0)


def coproduct_m(t: TensorElement, m_target: int) -> TensorElement:
    """Iterated coproduct into T^(m_target)(g): (Id#...#Id#Delta) applied repeatedly."""
    if t.m != 1:
        raise ValueError("coproduct_m expects an element of T(g)")
    if m_target < 1:
        raise ValueError("m_target must be >= 1")
    out = t
    while out.m < m_target:
        out = coproduct_at(out, out.m - 1)
    return out


def coproduct_m_closed(t: TensorElement, m_target: int) -> TensorElement:
    """Same as :func:`coproduct_m` via the closed form: distribute each
    letter of a word over the ``m_target`` factors, keeping relative order."""
    if t.m != 1:
        raise ValueError("expects an element of T(g)")
    out = {}
    for (w,), c in t.terms.items():
        for assign in _assignments(len(w), m_target):
            key = tuple(tuple(w[i] for i in range(len(w)) if assign[i] == j) for j in range(m_target))
            out[key] = out.get(key, 0) + c
    return TensorElement(t.dim, m_target, out)


def _assignments(n, m):
    if n == 0:
        yield ()
        return
    for rest in _assignments(n - 1, m):
        for j in range(m):
            yield rest + (j,)


def counit(t: TensorElement) -> Fraction:
    if t.m != 1:
        raise ValueError("counit expects an element of T(g)")
    return t.terms.get(((),), Fraction(0))


def counit_at(t: TensorElement, factor: int) -> TensorElement:
    """Id#..#eps#..#Id: drop factor ``factor`` keeping only unit components."""
    if t.m < 2:
        raise ValueError("need at least two factors")
    out = {}
    for k, c in t.terms.items():
        if not k[factor]:
            key = k[:factor] + k[factor + 1:]
            out[key] = out.get(key, 0) + c
    return TensorElement(t.dim, t.m - 1, out)


# ---------------------------------------------------------------------------
# module actions


def _derivation(t: TensorElement, letter_image):
    def fn(k):
        for j, w in enumerate(k):
            for p, b in enumerate(w):
                for g, val in letter_image(b):
                    nw = w[:p] + (g,) + w[p + 1:]
                    yield k[:j] + (nw,) + k[j + 1:], val

    out = t.map_words(fn)
    return TensorElement(t.dim, t.m, out.terms) if out.m == t.m else TensorElement(t.dim, t.m)


def _check_sc(sc, t, alpha):
    if sc.dim != t.dim:
        raise ValueError(f"structure constants of dim {sc.dim} act on elements of dim {t.dim}")
    if not 1 <= alpha <= sc.dim:
        raise ValueError(f"generator index {alpha} outside 1..{sc.dim}")


def ad_action(sc: StructureConstants, alpha: int, t: TensorElement) -> TensorElement:
    """ad_{v_alpha} extended as a derivation over letters and boxed factors."""
    _check_sc(sc, t, alpha)
    a = alpha - 1
    images = {
        b + 1: [(g + 1, v) for g, v in enumerate(sc.c[a][b]) if v] for b in range(sc.dim)
    }
    return _derivation(t, lambda b: images[b])


def coad_action(sc: StructureConstants, alpha: int, t: TensorElement) -> TensorElement:
    """D_{v_alpha} on words over the dual basis: coad_v e*_b = -sum_g c_{alpha g}^b e*_g."""
    _check_sc(sc, t, alpha)
    a = alpha - 1
    images = {
        b + 1: [(g + 1, -sc.c[a][g][b]) for g in range(sc.dim) if sc.c[a][g][b]] for b in range(sc.dim)
    }
    return _derivation(t, lambda b: images[b])


def is_invariant(sc: StructureConstants, t: TensorElement, *, dual=False) -> bool:
    act = coad_action if dual else ad_action
    return all(act(sc, a, t).is_zero() for a in range(1, sc.dim + 1))


# ---------------------------------------------------------------------------
# (anti)symmetrisation


def _alt(t, signed):
    if t.m != 1:
        raise ValueError("symmetrisation acts on elements of T(g)")
    lengths = t.factor_lengths(0)
    if len(lengths) > 1:
        raise NonHomogeneous(f"word lengths {sorted(lengths)} are not homogeneous")

    def fn(k):
        w = k[0]
        for p in permutations(range(len(w))):
            yield (tuple(w[i] for i in p),), (_perm_sign(p) if signed else 1)

    return t.map_words(fn)


def symmetrize(t: TensorElement) -> TensorElement:
    """Unnormalised Alt: sum over all permutations of the letters."""
    return _alt(t, False)


def antisymmetrize(t: TensorElement) -> TensorElement:
    """Unnormalised signed Alt."""
    return _alt(t, True)


def wedge_word(dim, letters: Sequence[int], coeff=1) -> TensorElement:
    """v_{i1} ^ ... ^ v_{ik} as its signed-Alt representative."""
    return antisymmetrize(TensorElement.word(dim, letters, coeff))


def _swap_check(t, sign):
    for j in range(t.m):
        maxlen = max((len(k[j]) for k in t.terms), default=0)
        for i in range(maxlen - 1):
            part = {k: c for k, c in t.terms.items() if len(k[j]) > i + 1}
            swapped = {}
            for k, c in part.items():
                w = k[j]
                nw = w[:i] + (w[i + 1], w[i]) + w[i + 2:]
                swapped[k[:j] + (nw,) + k[j + 1:]] = c * sign
            if part != swapped:
                return False
    return True


def is_symmetric(t: TensorElement) -> bool:
    """Every boxed factor is a symmetric tensor."""
    return _swap_check(t, 1)


def is_antisymmetric(t: TensorElement) -> bool:
    """Every boxed factor is an antisymmetric tensor."""
    return _swap_check(t, -1)


# ---------------------------------------------------------------------------
# Casimir inputs


@dataclass(frozen=True)
class AbstractCasimir:
    element: TensorElement
    kind: str
    sc: StructureConstants

    def __post_init__(self):
        if self.kind not in ("symmetric", "antisymmetric", "general"):
            raise ValueError(f"unknown Casimir kind {self.kind!r}")
        if self.element.m != 1:
            raise ValueError("Casimir elements live in T(g)")
        if self.kind == "symmetric" and not is_symmetric(self.element):
            raise ValueError("element declared symmetric is not symmetric")
        if self.kind == "antisymmetric" and not is_antisymmetric(self.element):
            raise ValueError("element declared antisymmetric is not antisymmetric")
        for a in range(1, self.sc.dim + 1):
            if not ad_action(self.sc, a, self.element).is_zero():
                raise ValueError(f"element is not ad-invariant (fails for v{a})")


def casimir_from_entries(dim, entries: Iterable[Mapping]) -> TensorElement:
    """Entries ``{coeff: "p/q", word: [indices], wedge: bool}`` summed."""
    out = TensorElement.zero(dim)
    for e in entries:
        coeff = Fraction(str(e.get("coeff", "1")))
        word = [int(i) for i in e["word"]]
        if e.get("wedge", False):
            out = out + wedge_word(dim, word, coeff)
        else:
            out = out + TensorElement.word(dim, word, coeff)
    return out
