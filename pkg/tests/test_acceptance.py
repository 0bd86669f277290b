"""End-to-end acceptance checks on the four worked systems.

Oracle values are typed in from the published displays; the library and
the catalog only supply the computations.  Symbolic checks are exact.
"""

import random
import time
from fractions import Fraction

import pytest

from mslie import catalog
from mslie.coalgebra import (
    AbstractCasimir,
    TensorElement,
    ad_action,
    antisymmetrize,
    coproduct,
    coproduct_at,
    coproduct_m,
    counit_at,
    is_antisymmetric,
    is_symmetric,
    symmetrize,
    wedge_word,
)
from mslie.diffgeo import (
    as_tensor,
    diagonal,
    exterior_d,
    form_from_terms,
    interior,
    lie_derivative,
    tensor_product,
    vector_field,
    wedge,
    wedge_all,
)
from mslie.liealgebra import (
    StructureConstants,
    close_and_extract,
    is_locally_automorphic,
    solve_symmetries,
)
from mslie.linalg import express_in_span
from mslie.multisymplectic import (
    check_multisymplectic,
    dual_coframe,
    hamiltonian_form,
    invariant_volume,
    minimal_lie_hamilton_algebra,
)
from mslie.numeric import drift, integrate, sample_generic, TCoefficient
from mslie.prolong_invariants import (
    Realization,
    apply_chain,
    check_independence,
    constant_of_motion_check,
    realize,
    verify_evolution_invariant,
)
from mslie.replicate import build_boxed, unimodularity_cross_check
from mslie.symexpr import Chart, parse
from strategies import random_element, random_sc

S_CHART = Chart(("x", "v", "a"), constraints=("v",))
R_CHART = Chart(("u", "v", "w"), constraints=("v",))
C_CHART = Chart(("x1", "x2", "x3", "x4", "x5"))


def sc(dim, *rows):
    return StructureConstants.from_sparse(dim, rows)


def one_form(chart, **coeffs):
    return form_from_terms(chart, 1, [(c, [n]) for n, c in coeffs.items()])


def fields(chart, *rows):
    return [vector_field(chart, r) for r in rows]


def spans_equal(a, b):
    ca, cb = [X.coeffs for X in a], [X.coeffs for X in b]
    return len(a) == len(b) and all(express_in_span(x, cb) is not None for x in ca) and \
        all(express_in_span(y, ca) is not None for y in cb)


def timed(budget):
    """Assert that the wrapped block stays inside its budget."""
    class _T:
        def __enter__(self):
            self.t0 = time.perf_counter()
            return self

        def __exit__(self, *exc):
            self.seconds = time.perf_counter() - self.t0
            if exc[0] is None:
                assert self.seconds < budget, f"took {self.seconds:.2f}s, budget {budget}s"
    return _T()


# ---------------------------------------------------------------------------
# Schwarz equation

SCHWARZ_X = fields(S_CHART, ["0", "0", "2*v"], ["0", "v", "2*a"], ["v", "a", "3*a^2/(2*v)"])
SCHWARZ_Y = fields(S_CHART, ["1", "0", "0"], ["x", "v", "a"], ["x^2", "2*v*x", "2*(a*x+v^2)"])
SL2_FIELDS = sc(3, (1, 2, 1, 1), (1, 3, 2, 2), (2, 3, 3, 1))
SL2_HAMILTON = sc(3, (1, 2, 1, -1), (1, 3, 2, -2), (2, 3, 3, -1))


@pytest.fixture(scope="module")
def schwarz():
    alg = close_and_extract(SCHWARZ_X)
    theta = invariant_volume(alg)
    R = Realization(alg, theta, SL2_HAMILTON)
    return alg, theta, R


@pytest.mark.criterion(1, "Schwarz structure constants", 1)
def test_c1_schwarz_structure_constants():
    with timed(1):
        alg = close_and_extract(SCHWARZ_X)
        assert alg.dim == 3
        assert alg.basis == SCHWARZ_X
        assert alg.sc == SL2_FIELDS


@pytest.mark.criterion(2, "Schwarz coframe and invariant volume", 1)
def test_c2_schwarz_coframe_and_volume():
    with timed(1):
        alg = close_and_extract(SCHWARZ_X)
        eta = dual_coframe(alg)
        assert eta == [
            one_form(S_CHART, x="a^2/(4*v^3)", v="-a/v^2", a="1/(2*v)"),
            one_form(S_CHART, x="-a/v^2", v="1/v"),
            one_form(S_CHART, x="1/v"),
        ]
        theta = wedge_all(eta)
        assert theta == form_from_terms(S_CHART, 3, [("1/(2*v^3)", ["a", "v", "x"])])
        for X in SCHWARZ_X:
            assert not lie_derivative(X, theta)
        # the table of Lie derivatives of the coframe
        table = {(1, 1): -eta[1], (1, 2): eta[2] * -2, (2, 1): eta[0], (2, 3): -eta[2],
                 (3, 2): eta[0] * 2, (3, 3): eta[1]}
        for a in range(1, 4):
            for g in range(1, 4):
                got = lie_derivative(SCHWARZ_X[a - 1], eta[g - 1])
                want = table.get((a, g))
                assert (not got) if want is None else got == want


@pytest.mark.criterion(3, "Schwarz Hamiltonian forms and Lie-Hamilton algebra", 2)
def test_c3_schwarz_hamiltonian_data(schwarz):
    with timed(2):
        alg, theta, _ = schwarz
        X1, X2, X3 = SCHWARZ_X
        assert interior(X1, theta.form) == form_from_terms(S_CHART, 2, [("1/v^2", ["v", "x"])])
        assert interior(X2, theta.form) == form_from_terms(
            S_CHART, 2, [("a/v^3", ["v", "x"]), ("-1/(2*v^2)", ["a", "x"])])
        assert interior(X3, theta.form) == form_from_terms(
            S_CHART, 2, [("-3*a^2/(4*v^4)", ["x", "v"]), ("-a/(2*v^3)", ["a", "x"]), ("1/(2*v^2)", ["a", "v"])])
        eta = dual_coframe(alg)
        hs = [hamiltonian_form(X, theta, frame=alg.basis) for X in SCHWARZ_X]
        assert hs[0] == -eta[2]
        assert hs[1] == eta[1] * Fraction(1, 2)
        assert hs[2] == -eta[0]
        for X, h in zip(SCHWARZ_X, hs):
            assert exterior_d(h) == interior(X, theta.form)
        # {d theta_a, d theta_b} = i_[X_b, X_a] Theta
        assert minimal_lie_hamilton_algebra(alg, theta).sc == SL2_HAMILTON


@pytest.mark.criterion(4, "Casimir pipeline on the Schwarz system", 5)
def test_c4_casimir_pipeline(schwarz):
    with timed(5):
        alg, theta, R = schwarz
        C = TensorElement(3, 1, {((1, 3),): 1, ((3, 1),): 1, ((2, 2),): -2})
        cas = AbstractCasimir(C, "symmetric", SL2_HAMILTON)
        U = realize(R, cas.element)
        d = [as_tensor(g) for g in R.generators]
        assert U == tensor_product(d[0], d[2]) + tensor_product(d[2], d[0]) - tensor_product(d[1], d[1]) * 2
        assert verify_evolution_invariant(U, alg).invariant
        Y1, Y2, Y3 = SCHWARZ_Y
        for reading in ("inner", "outer"):
            assert apply_chain(U, [Y1, Y3, Y1, Y3], reading=reading).scalar() == -2
            assert apply_chain(U, [Y2, Y1, Y2, Y3], reading=reading).scalar() == -1


@pytest.mark.criterion(5, "Schwarz prolonged invariants and superposition constants", 10)
def test_c5_schwarz_prolonged_invariants(schwarz):
    with timed(10):
        alg, theta, R = schwarz
        C = TensorElement(3, 1, {((1, 3),): 1, ((3, 1),): 1, ((2, 2),): -2})
        I2tensor = realize(R, coproduct(C))
        Ud = diagonal(realize(R, C), 2)
        cross = realize(R, TensorElement(3, 2, {((3,), (1,)): 2, ((1,), (3,)): 2, ((2,), (2,)): -4}))
        assert I2tensor == Ud + cross
        assert I2tensor != Ud
        assert verify_evolution_invariant(I2tensor, alg).invariant

        P = S_CHART.product(2)
        Y1, Y2, Y3 = [diagonal(y, 2) for y in SCHWARZ_Y]
        Cx = I2tensor - Ud
        I1 = apply_chain(Cx, [Y1, Y2, Y1, Y2], reading="mean").scalar() * 2
        I2 = apply_chain(Cx, [Y1, Y2, Y1, Y3], reading="mean").scalar() * 2 / I1
        I3 = apply_chain(I2tensor, [Y1, Y3, Y1, Y3], reading="mean").scalar() / (2 * I1)
        D = "(a_2*v_1-a_1*v_2)"
        assert I1 == parse(f"{D}^2/(v_1^3*v_2^3)", P)
        assert I2 == parse("2*v_1*v_2*(v_1-v_2)/(a_2*v_1-v_2*a_1)+x_1+x_2", P)
        assert I3 == parse(f"(x_2-2*v_1*v_2^2/{D})*(x_1+2*v_1^2*v_2/{D})", P)
        # the printed I3 rewritten through I2
        assert I3 == parse(f"(x_2-2*v_1*v_2^2/{D})", P) * (I2 - parse(f"x_2-2*v_1*v_2^2/{D}", P))
        for f in (I1, I2, I3):
            assert constant_of_motion_check(f, alg)
        assert check_independence([I1, I2, I3], ["x_1", "v_1", "a_1"])


@pytest.mark.criterion(6, "Control system symmetries, coframe and 3-form", 10)
def test_c6_control_system():
    with timed(10):
        X = fields(C_CHART, ["1", "0", "0", "0", "0"], ["0", "1", "x1", "x1^2", "2*x1*x2"],
                   ["0", "0", "1", "2*x1", "2*x2"], ["0", "0", "0", "1", "0"], ["0", "0", "0", "0", "1"])
        alg = close_and_extract(X)
        assert alg.basis == X
        # X1 and X2 alone already generate the whole algebra
        assert spans_equal(close_and_extract(X[:2]).basis, X)
        assert alg.sc == sc(5, (1, 2, 3, 1), (1, 3, 4, 2), (2, 3, 5, 2))
        Y = fields(C_CHART, ["1", "0", "x2", "2*x3", "x2^2"], ["0", "1", "0", "0", "2*x3"],
                   ["0", "0", "1", "0", "0"], ["0", "0", "0", "1", "0"], ["0", "0", "0", "0", "1"])
        assert spans_equal(solve_symmetries(alg, 2), Y)
        assert close_and_extract([-y for y in Y]).sc == alg.sc
        eta = dual_coframe(Y)
        assert eta == [
            one_form(C_CHART, x1="1"),
            one_form(C_CHART, x2="1"),
            one_form(C_CHART, x1="-x2", x3="1"),
            one_form(C_CHART, x1="-2*x3", x4="1"),
            one_form(C_CHART, x1="-x2^2", x2="-2*x3", x5="1"),
        ]
        assert not exterior_d(eta[0]) and not exterior_d(eta[1])
        assert exterior_d(eta[2]) == wedge(eta[0], eta[1])
        assert exterior_d(eta[3]) == wedge(eta[0], eta[2]) * 2
        assert exterior_d(eta[4]) == wedge(eta[1], eta[2]) * 2
        theta = exterior_d(wedge(eta[2], eta[3])) + exterior_d(wedge(eta[3], eta[4]))
        assert theta == wedge_all([eta[0], eta[1], eta[3]]) + wedge_all([eta[0], eta[2], eta[4]]) * 2 \
            - wedge_all([eta[3], eta[1], eta[2]]) * 2
        expanded = form_from_terms(C_CHART, 3, [
            ("1-2*x2", ["x1", "x2", "x4"]), ("8*x3", ["x1", "x2", "x3"]),
            ("2", ["x1", "x3", "x5"]), ("-2", ["x2", "x3", "x4"])])
        assert theta == expanded
        ms = check_multisymplectic(theta)
        assert ms.generic_rank == 5
        assert all(not lie_derivative(Xa, theta) for Xa in X)
        vol = invariant_volume(alg)
        theta_vol = wedge_all(eta)
        assert vol.form == theta_vol
        assert all(not lie_derivative(Xa, theta_vol) for Xa in X)


# ---------------------------------------------------------------------------
# Riccati diffusion system

RICCATI_X = fields(R_CHART, ["4*u^2", "4*u*v", "v^2"], ["2*u", "v", "0"], ["1", "0", "0"])
RICCATI_Y = fields(R_CHART, ["v^2", "4*v*w", "4*w^2"], ["0", "v", "2*w"], ["0", "0", "1"])
RICCATI_HAMILTON = sc(3, (1, 2, 1, 2), (1, 3, 2, 4), (2, 3, 3, 2))


@pytest.fixture(scope="module")
def riccati():
    alg = close_and_extract(RICCATI_X)
    theta = invariant_volume(alg)
    R = Realization(alg, theta, RICCATI_HAMILTON)
    D = realize(R, coproduct(wedge_word(3, [1, 2, 3])))
    return alg, theta, R, D


@pytest.mark.criterion(7, "Riccati diffusion system", 10)
def test_c7_riccati_structure(riccati):
    with timed(10):
        alg, theta, R, D = riccati
        assert alg.sc == sc(3, (1, 2, 1, -2), (2, 3, 3, -2), (1, 3, 2, -4))
        assert is_locally_automorphic(alg)
        assert spans_equal(solve_symmetries(alg, 2), RICCATI_Y)
        eta = dual_coframe(alg)
        assert eta == [
            one_form(R_CHART, w="1/v^2"),
            one_form(R_CHART, v="1/v", w="-4*u/v^2"),
            one_form(R_CHART, u="1", v="-2*u/v", w="4*u^2/v^2"),
        ]
        assert theta.form == wedge_all(eta) == form_from_terms(R_CHART, 3, [("1/v^3", ["w", "v", "u"])])
        assert minimal_lie_hamilton_algebra(alg, theta).sc == RICCATI_HAMILTON
        display = build_boxed(3, [
            {"coeff": 1, "factors": f} for f in (
                [[1, 2, 3], []], [[], [1, 2, 3]], [[1, 2], [3]], [[2, 3], [1]],
                [[3, 1], [2]], [[3], [1, 2]], [[2], [3, 1]], [[1], [2, 3]])])
        assert coproduct(wedge_word(3, [1, 2, 3])) == display
        assert verify_evolution_invariant(D, alg).invariant


@pytest.mark.criterion(7, "Riccati diffusion system", 10)
def test_c7_riccati_first_integrals(riccati):
    with timed(10):
        alg = riccati[0]
        P = R_CHART.product(2)
        f1 = parse("(v_1^2+v_2^2-4*(u_1-u_2)*(w_1-w_2))/(v_1*v_2)", P)
        f2 = parse("(u_2-u_1)/(v_1*v_2)", P)
        f3 = parse("(v_1^2-v_2^2-4*(u_1-u_2)*(w_1+w_2))/(v_1*v_2)", P)
        for f in (f1, f2, f3):
            assert constant_of_motion_check(f, alg)
        assert check_independence([f1, f2, f3], ["v_1", "u_1", "w_1"])


@pytest.mark.criterion(7, "Riccati diffusion system", 10)
@pytest.mark.xfail(strict=True, reason="the printed six-fold contraction is not reproduced by any reading; "
                   "the computed value is a different constant of motion")
def test_c7_riccati_sixfold_contraction(riccati):
    alg, _, _, D = riccati
    P = R_CHART.product(2)
    printed = parse("-2*(v_1^2+v_2^2-4*(u_1-u_2)*(w_1-w_2))^2/(v_1^2*v_2^2)", P)
    Y1, Y2, Y3 = [diagonal(y, 2) for y in RICCATI_Y]
    values = {apply_chain(D, [Y1, Y2, Y1, Y3, Y2, Y3], reading=r).scalar() for r in ("inner", "outer", "mean")}
    # whatever the reading, the contraction is a constant of motion
    assert all(constant_of_motion_check(v, alg) for v in values)
    assert printed in values


# ---------------------------------------------------------------------------


@pytest.mark.criterion(8, "DBH structure constants and local automorphy", 5)
def test_c8_dbh():
    with timed(5):
        ch = Chart(("w1", "w2", "w3"), params=("alpha1", "alpha2", "alpha3"))
        tau2 = "(alpha1^2*(w1-w2)*(w3-w1)+alpha2^2*(w2-w3)*(w1-w2)+alpha3^2*(w3-w1)*(w2-w3))"
        X3 = [f"-(w3*w2-w1*(w3+w2)+{tau2})", f"-(w1*w3-w2*(w1+w3)+{tau2})", f"-(w2*w1-w3*(w2+w1)+{tau2})"]
        X = fields(ch, ["1", "1", "1"], ["w1", "w2", "w3"], X3)
        alg = close_and_extract(X)
        assert alg.dim == 3
        assert alg.sc == SL2_FIELDS
        la = is_locally_automorphic(alg)
        assert la and not la.witness.is_constant()
        # the catalog copy agrees
        assert catalog.load("dbh").alg.sc == alg.sc


@pytest.mark.criterion(9, "Coproduct lemma on random Lie algebras", 30)
def test_c9_coproduct_lemma():
    with timed(30):
        rng = random.Random(20240611)
        n_cases = 240
        for _ in range(n_cases):
            s = random_sc(rng)
            assert s.dim <= 4
            t = random_element(rng, s.dim, max_len=4)
            D = coproduct(t)
            assert coproduct_at(D, 0) == coproduct_at(D, 1)
            assert counit_at(D, 0) == t and counit_at(D, 1) == t
            length = rng.randint(0, 4)
            w = TensorElement(s.dim, 1, {(tuple(rng.randint(1, s.dim) for _ in range(length)),): 1})
            S, A = symmetrize(w), antisymmetrize(w)
            for m in (1, 2, 3):
                Dm = coproduct_m(t, m)
                assert is_symmetric(coproduct_m(S, m))
                assert is_antisymmetric(coproduct_m(A, m))
                for a in range(1, s.dim + 1):
                    assert ad_action(s, a, Dm) == coproduct_m(ad_action(s, a, t), m)


def _pairs(entry, rng, n):
    box = entry.expected["numeric"]["box"]
    P = entry.chart.product(2)
    avoid = [parse(e, P) for e in entry.expected["numeric"].get("avoid", [])]
    return [sample_generic(P, [tuple(box[nm]) for nm in entry.chart.names] * 2, rng, avoid=avoid)
            for _ in range(n)]


def _riccati_closed_form_error(h):
    entry = catalog.load("riccati")
    sys = entry.system.lie_system({"X1": TCoefficient("1"), "X2": TCoefficient("0"), "X3": TCoefficient("0")})
    u0, v0, w0 = -0.5, 1.2, 0.1
    s = 1 - 4 * u0
    exact = [u0 / s, v0 / s, w0 + v0 ** 2 / s]
    fin = integrate(sys, [u0, v0, w0], (0.0, 1.0), step=h).final
    return max(abs(a - b) for a, b in zip(fin, exact))


@pytest.mark.criterion(10, "Numerical drift of constants of motion and RK4 order", 30)
def test_c10_numeric_verification():
    with timed(30):
        rng = random.Random(7)
        for eid in ("schwarz", "riccati"):
            entry = catalog.load(eid)
            P = entry.chart.product(2)
            exp = entry.expected
            consts = {c["name"]: parse(c["value"], P) for c in exp.get("constants", [])}
            consts.update({k: parse(v, P) for k, v in exp.get("first_integrals", {}).items()})
            consts.update({k: parse(v, P) for k, v in exp.get("superposition", {}).items()})
            assert consts
            sys = entry.system.lie_system()
            for x in _pairs(entry, rng, 10):
                n = entry.chart.dim
                trajs = [integrate(sys, x[:n], (0.0, 1.0), step=1e-3), integrate(sys, x[n:], (0.0, 1.0), step=1e-3)]
                for name, f in consts.items():
                    assert drift(f, trajs) < 1e-6, (eid, name, x)
        # tdep coefficients as stated: b1 = sin t for Schwarz, (a, b, c) = (1, t, cos t) for Riccati
        assert catalog.load("schwarz").system.tdep["X1"](1.0) == pytest.approx(0.8414709848)
        ric = catalog.load("riccati").system.tdep
        assert (ric["X1"](2.0), ric["X2"](2.0), ric["X3"](2.0)) == pytest.approx((1.0, -0.4161468365, -2.0))
        ratio = _riccati_closed_form_error(0.1) / _riccati_closed_form_error(0.05)
        assert 12 <= ratio <= 20, ratio


@pytest.mark.criterion(11, "Unimodularity cross-check", 2)
def test_c11_unimodularity():
    with timed(2):
        for eid in catalog.IDS:
            uni, direct = unimodularity_cross_check(catalog.load(eid).alg)
            assert uni and direct, eid
        uni, direct = unimodularity_cross_check(catalog.load_demo("affine").alg)
        assert not uni and not direct
