import io
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mslie import catalog
from mslie.diffgeo import vector_field
from mslie.numeric import (
    IntegratorConfig,
    LieSystem,
    NumericError,
    PoleEncountered,
    StepUnderflow,
    TCoefficient,
    Trajectory,
    drift,
    integrate,
    sample_generic,
    verify_superposition,
)
from mslie.symexpr import Chart, parse

LINE = Chart(("x",))


def riccati_flow(u0, v0, w0, t):
    """Exact flow of X1 = 4u^2 d/du + 4uv d/dv + v^2 d/dw."""
    s = 1 - 4 * u0 * t
    return [u0 / s, v0 / s, w0 + v0 ** 2 * t / s]


def riccati_x1_only():
    entry = catalog.load("riccati")
    return entry.system.lie_system({"X1": TCoefficient("1"), "X2": TCoefficient("0"), "X3": TCoefficient("0")})


# ---------------------------------------------------------------------------
# coefficients


@pytest.mark.parametrize("text,t,val", [
    ("sin(t)", 0.5, math.sin(0.5)),
    ("-t^2 + 3/4", 2.0, -3.25),
    ("exp(-t)*cos(2*t)", 1.0, math.exp(-1) * math.cos(2)),
    ("t^-1", 4.0, 0.25),
    ("2.5", 9.0, 2.5),
])
def test_coefficient_values(text, t, val):
    assert TCoefficient(text)(t) == pytest.approx(val)


@pytest.mark.parametrize("text", ["x", "t^t", "__import__('os')", "sin(t, t)", "t +", "t % 2", "log(t)"])
def test_coefficient_rejects(text):
    with pytest.raises(ValueError):
        TCoefficient(text)


# ---------------------------------------------------------------------------
# integrators


def test_zero_field_gives_constant_trajectory():
    sys = LieSystem([vector_field(LINE, ["0"])], ["1"])
    tr = integrate(sys, [0.7], (0.0, 1.0), step=0.1)
    assert len(tr.times) == 11
    assert all(s == [0.7] for s in tr.states)


def test_linear_case_is_exact():
    # u = 0 stays put; v' = 0, w' = v^2
    tr = integrate(riccati_x1_only(), [0.0, 1.0, 0.0], (0.0, 1.0), step=0.01)
    assert tr.final == pytest.approx([0.0, 1.0, 1.0], abs=1e-13)


def test_rk4_matches_closed_form():
    x0 = [-0.5, 1.2, 0.1]
    tr = integrate(riccati_x1_only(), x0, (0.0, 1.0), step=1e-3)
    assert tr.final == pytest.approx(riccati_flow(*x0, 1.0), rel=1e-10)


def test_rk4_fourth_order():
    x0 = [-0.5, 1.2, 0.1]
    exact = riccati_flow(*x0, 1.0)

    def err(h):
        fin = integrate(riccati_x1_only(), x0, (0.0, 1.0), step=h).final
        return max(abs(a - b) for a, b in zip(fin, exact))

    assert 12 <= err(0.1) / err(0.05) <= 20


def test_dopri_accuracy_and_grid():
    x0 = [-0.5, 1.2, 0.1]
    tr = integrate(riccati_x1_only(), x0, (0.0, 1.0), method="dopri5", rtol=1e-11, atol=1e-13,
                   t_eval=[0.25, 0.5, 1.0])
    assert tr.times == [0.0, 0.25, 0.5, 1.0]
    for t, x in zip(tr.times, tr.states):
        assert x == pytest.approx(riccati_flow(*x0, t), rel=1e-9)
    assert tr.meta["steps"] > 3


def test_pole_is_reported():
    # the orbit reaches v = 0 at t = 1
    ch = Chart(("v",), constraints=("v",))
    sys = LieSystem([vector_field(ch, ["-1"])], ["1"])
    with pytest.raises(PoleEncountered):
        integrate(sys, [1.0], (0.0, 2.0), step=0.25)


def test_start_on_pole():
    ch = Chart(("v",), constraints=("v",))
    sys = LieSystem([vector_field(ch, ["1/v"])], ["1"])
    with pytest.raises(PoleEncountered):
        integrate(sys, [0.0], (0.0, 1.0))


def test_blow_up():
    # x' = x^2 from x = 1 blows up at t = 1
    sys = LieSystem([vector_field(LINE, ["x^2"])], ["1"])
    with pytest.raises(NumericError):
        integrate(sys, [1.0], (0.0, 2.0), method="dopri5", step=0.1, min_step=1e-6)


def test_step_underflow():
    sys = LieSystem([vector_field(LINE, ["x^2"])], ["1"])
    with pytest.raises(StepUnderflow):
        integrate(sys, [1.0], (0.0, 0.99), method="dopri5", step=0.5, max_steps=5)


def test_bad_arguments():
    sys = LieSystem([vector_field(LINE, ["1"])], ["1"])
    with pytest.raises(ValueError):
        integrate(sys, [0.0], (1.0, 0.0))
    with pytest.raises(ValueError):
        integrate(sys, [0.0, 1.0], (0.0, 1.0))
    with pytest.raises(ValueError):
        integrate(sys, [0.0], (0.0, 1.0), method="euler")
    with pytest.raises(ValueError):
        LieSystem([vector_field(LINE, ["1"])], ["1", "2"])


def test_params_are_required():
    entry = catalog.load("dbh")
    with pytest.raises(ValueError, match="alpha"):
        entry.system.lie_system()
    sys = entry.system.lie_system(params={"alpha1": 0.1, "alpha2": 0.2, "alpha3": 0.3})
    tr = integrate(sys, [0.1, 0.5, 0.9], (0.0, 0.1), step=0.01)
    assert len(tr.states) == 11


def test_config_defaults():
    cfg = IntegratorConfig()
    assert cfg.method == "rk4" and cfg.step == 1e-3


# ---------------------------------------------------------------------------
# trajectories and drift


def test_csv_roundtrip():
    sys = riccati_x1_only()
    tr = integrate(sys, [-0.5, 1.0, 0.0], (0.0, 0.1), step=0.05)
    text = tr.to_csv()
    assert text.splitlines()[0] == "t,u,v,w"
    back = Trajectory.from_csv(io.StringIO(text))
    assert back.names == ("u", "v", "w")
    assert back.states == tr.states and back.times == tr.times


def test_trajectory_validation():
    with pytest.raises(ValueError):
        Trajectory(("x",), [0.0, 0.0], [[1.0], [1.0]])
    with pytest.raises(ValueError):
        Trajectory(("x",), [0.0, 1.0], [[1.0]])


def test_drift_of_a_constant_function():
    P = LINE.product(2)
    a = Trajectory(("x",), [0.0, 1.0], [[0.0], [5.0]])
    b = Trajectory(("x",), [0.0, 1.0], [[1.0], [2.0]])
    assert drift(parse("1", P), [a, b]) == 0.0
    assert drift(parse("x_1 - x_2", P), [a, b]) == pytest.approx(4.0)


def test_grid_mismatch():
    P = LINE.product(2)
    a = Trajectory(("x",), [0.0, 1.0], [[0.0], [1.0]])
    b = Trajectory(("x",), [0.0, 0.5], [[0.0], [1.0]])
    with pytest.raises(ValueError, match="grid"):
        drift(parse("x_1", P), [a, b])


def test_pole_in_relation_is_reported():
    P = LINE.product(2)
    a = Trajectory(("x",), [0.0, 1.0], [[0.0], [1.0]])
    res = verify_superposition({"r": parse("1/(x_1-x_2)", P)}, [a, a])
    assert not res["ok"]
    assert res["relations"]["r"]["error"]


def test_sampling_avoids_loci():
    ch = Chart(("u", "v"), constraints=("v",))
    avoid = [parse("u - v", ch)]
    rng = random.Random(3)
    for _ in range(50):
        u, v = sample_generic(ch, {"u": (-1, 1), "v": (-1, 1)}, rng, margin=0.05, avoid=avoid)
        assert abs(v) > 0.05 and abs(u - v) > 0.05
    with pytest.raises(NumericError):
        sample_generic(ch, {"u": (0, 0), "v": (0, 0)}, rng, max_tries=10)


@settings(max_examples=20, deadline=None)
@given(st.floats(-0.6, -0.1), st.floats(0.5, 1.5), st.floats(-0.5, 0.5))
def test_first_integral_conserved_along_pairs(u, v, w):
    entry = catalog.load("riccati")
    sys = entry.system.lie_system()
    P = entry.chart.product(2)
    a = integrate(sys, [u, v, w], (0.0, 0.5), step=1e-2)
    b = integrate(sys, [u - 0.2, v + 0.3, w - 0.1], (0.0, 0.5), step=1e-2)
    f2 = parse("(u_2-u_1)/(v_1*v_2)", P)
    assert drift(f2, [a, b]) < 1e-7
