import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mslie.diffgeo import (
    CovTensor,
    DiffForm,
    VectorField,
    as_tensor,
    contract_chain,
    contract_first,
    diagonal,
    exterior_d,
    form_from_terms,
    form_value,
    interior,
    lie_bracket,
    lie_derivative,
    prolong_to_product,
    tensor_product,
    vector_field,
    wedge,
    wedge_all,
)
from mslie.symexpr import Chart, parse
from strategies import CHART, forms, vector_fields

degrees = st.integers(0, 3)


def dx(name, chart=CHART):
    return DiffForm.differential(chart, chart.index(name))


def test_coordinate_forms_and_values():
    w = wedge(dx("x"), dx("y"))
    X, Y = VectorField.coordinate(CHART, "x"), VectorField.coordinate(CHART, "y")
    assert form_value(w, [X, Y]) == 1
    assert form_value(w, [Y, X]) == -1
    assert wedge(dx("y"), dx("x")) == -w
    assert not wedge(dx("x"), dx("x"))


def test_form_from_terms_sorts_and_signs():
    w = form_from_terms(CHART, 2, [("z", ["y", "x"])])
    assert w == form_from_terms(CHART, 2, [("-z", ["x", "y"])])
    assert not form_from_terms(CHART, 2, [("1", ["x", "x"])])


def test_known_bracket():
    ch = Chart(("x",))
    assert lie_bracket(vector_field(ch, ["1"]), vector_field(ch, ["x"])) == vector_field(ch, ["1"])
    assert lie_bracket(vector_field(ch, ["x"]), vector_field(ch, ["x^2"])) == vector_field(ch, ["x^2"])


def test_rational_coefficients_exterior_derivative():
    f = parse("x/(1+y^2)", CHART)
    df = exterior_d(DiffForm.function(f))
    assert df.coeff((0,)) == parse("1/(1+y^2)", CHART)
    assert df.coeff((1,)) == parse("-2*x*y/(1+y^2)^2", CHART)


def test_contraction_order():
    A = form_from_terms(CHART, 1, [("1", ["x"])])
    B = form_from_terms(CHART, 1, [("1", ["y"])])
    T = tensor_product(A, B)  # dx (x) dy
    X, Y = VectorField.coordinate(CHART, "x"), VectorField.coordinate(CHART, "y")
    assert contract_first(X, T).coeff((1,)) == 1
    assert contract_chain(T, [X, Y]).scalar() == 1
    assert contract_chain(T, [Y, X]).scalar() == 0
    with pytest.raises(ValueError):
        contract_chain(T, [X, Y, X])


@settings(max_examples=25, deadline=None)
@given(st.data())
def test_d_squared_vanishes(data):
    k = data.draw(st.integers(0, 1))
    w = data.draw(forms(k))
    assert not exterior_d(exterior_d(w))


@settings(max_examples=25, deadline=None)
@given(st.data())
def test_graded_leibniz(data):
    k = data.draw(st.integers(0, 2))
    a = data.draw(forms(k))
    b = data.draw(forms(1))
    lhs = exterior_d(wedge(a, b))
    rhs = wedge(exterior_d(a), b) + wedge(a, exterior_d(b)) * (-1) ** k
    assert lhs == rhs


@settings(max_examples=25, deadline=None)
@given(vector_fields(rational=True), st.data())
def test_cartan_formula_matches_tensor_lie_derivative(X, data):
    k = data.draw(st.integers(1, 2))
    w = data.draw(forms(k))
    assert as_tensor(lie_derivative(X, w)) == lie_derivative(X, as_tensor(w))


@settings(max_examples=25, deadline=None)
@given(vector_fields(), st.data())
def test_interior_twice_vanishes(X, data):
    w = data.draw(forms(2))
    assert not interior(X, interior(X, w))


@settings(max_examples=25, deadline=None)
@given(vector_fields(), vector_fields())
def test_bracket_antisymmetry(X, Y):
    assert lie_bracket(X, Y) == -lie_bracket(Y, X)


@settings(max_examples=15, deadline=None)
@given(vector_fields(), vector_fields(), vector_fields())
def test_jacobi_identity(X, Y, Z):
    j = lie_bracket(X, lie_bracket(Y, Z)) + lie_bracket(Y, lie_bracket(Z, X)) + lie_bracket(Z, lie_bracket(X, Y))
    assert not j


@settings(max_examples=15, deadline=None)
@given(vector_fields(), vector_fields(), st.data())
def test_lie_derivative_is_representation(X, Y, data):
    w = data.draw(forms(1))
    lhs = lie_derivative(X, lie_derivative(Y, w)) - lie_derivative(Y, lie_derivative(X, w))
    assert lhs == lie_derivative(lie_bracket(X, Y), w)


@settings(max_examples=15, deadline=None)
@given(vector_fields(), vector_fields())
def test_diagonal_prolongation_is_a_morphism(X, Y):
    assert lie_bracket(diagonal(X, 2), diagonal(Y, 2)) == diagonal(lie_bracket(X, Y), 2)


@settings(max_examples=15, deadline=None)
@given(vector_fields(), st.data())
def test_prolonged_invariance(X, data):
    w = data.draw(forms(1))
    assert lie_derivative(diagonal(X, 2), diagonal(w, 2)) == diagonal(lie_derivative(X, w), 2)


def test_prolong_to_slot():
    P = CHART.product(2)
    w = prolong_to_product(dx("x"), 2, 2)
    assert w == DiffForm.differential(P, P.index("x_2"))
    with pytest.raises(ValueError):
        prolong_to_product(dx("x"), 2, 3)


def test_wedge_all_volume():
    vol = wedge_all([dx("x"), dx("y"), dx("z")])
    frame = [VectorField.coordinate(CHART, n) for n in "xyz"]
    assert form_value(vol, frame) == 1
    assert form_value(vol, frame[::-1]) == -1


def test_bool_of_zero_objects():
    assert not VectorField.zero(CHART)
    assert not DiffForm.zero(CHART, 2)
    assert not CovTensor.zero(CHART, 2)
    assert dx("x")
