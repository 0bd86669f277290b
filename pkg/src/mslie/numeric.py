"""Numerical integration of t-dependent Lie systems and drift checks of first integrals."""

from __future__ import annotations

import ast
import csv
import io
import math
import random
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .diffgeo import VectorField
from .symexpr import RationalExpr

__all__ = [
    "NumericError",
    "PoleEncountered",
    "StepUnderflow",
    "TCoefficient",
    "LieSystem",
    "Trajectory",
    "integrate",
    "drift",
    "verify_superposition",
    "sample_generic",
    "IntegratorConfig",
]


class NumericError(RuntimeError):
    pass


class PoleEncountered(NumericError):
    pass


class StepUnderflow(NumericError):
    pass


# ---------------------------------------------------------------------------
# t-dependent coefficients

_FUNCS = {"sin": math.sin, "cos": math.cos, "exp": math.exp}
_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
}


def _compile(node, text):
    if isinstance(node, ast.Expression):
        return _compile(node.body, text)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        v = float(node.value)
        return lambda t: v
    if isinstance(node, ast.Name):
        if node.id != "t":
            raise ValueError(f"unknown identifier {node.id!r} at column {node.col_offset} in {text!r}")
        return lambda t: t
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        f = _compile(node.operand, text)
        return (lambda t: -f(t)) if isinstance(node.op, ast.USub) else f
    if isinstance(node, ast.BinOp):
        a, b = _compile(node.left, text), _compile(node.right, text)
        if isinstance(node.op, ast.Pow):
            k = _integer_exponent(node.right, text)
            return lambda t: a(t) ** k
        op = _BINOPS.get(type(node.op))
        if op is None:
            raise ValueError(f"unsupported operator at column {node.col_offset} in {text!r}")
        return lambda t: op(a(t), b(t))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
        if len(node.args) != 1 or node.keywords:
            raise ValueError(f"{node.func.id} takes one argument")
        fn, arg = _FUNCS[node.func.id], _compile(node.args[0], text)
        return lambda t: fn(arg(t))
    raise ValueError(f"unsupported syntax at column {getattr(node, 'col_offset', 0)} in {text!r}")


def _integer_exponent(node, text):
    sign = 1
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
        sign, node = -1, node.operand
    if isinstance(node, ast.Constant) and isinstance(node.value, int) and not isinstance(node.value, bool):
        return sign * node.value
    raise ValueError(f"exponent must be an integer literal in {text!r}")


@dataclass(frozen=True)
class TCoefficient:
    """b(t) built from rationals, t, + - * /, integer powers, sin, cos, exp."""

    text: str
    fn: Callable = field(compare=False, repr=False, default=None)

    def __post_init__(self):
        src = self.text.strip().replace("^", "**")
        try:
            tree = ast.parse(src, mode="eval")
        except SyntaxError as e:
            raise ValueError(f"syntax error at column {e.offset} in {self.text!r}") from None
        object.__setattr__(self, "fn", _compile(tree, self.text))

    @classmethod
    def const(cls, value):
        return cls(str(value))

    def __call__(self, t):
        return self.fn(t)


# ---------------------------------------------------------------------------
# systems and trajectories


class LieSystem:
    """x' = sum_a b_a(t) X_a(x) on a chart."""

    def __init__(self, fields: Sequence[VectorField], coefficients: Sequence, params: Mapping | None = None,
                 pole_tol: float = 1e-12):
        if len(fields) != len(coefficients):
            raise ValueError("one coefficient per vector field is required")
        self.fields = list(fields)
        self.chart = self.fields[0].chart
        self.coefficients = [c if isinstance(c, TCoefficient) else TCoefficient(str(c)) for c in coefficients]
        self.params = dict(params or {})
        missing = set(self.chart.params) - set(self.params)
        if missing:
            raise ValueError(f"missing parameter values: {sorted(missing)}")
        self._pvals = [float(self.params[p]) for p in self.chart.params]
        self._comp = [[c.lambdify() if c else None for c in X.coeffs] for X in self.fields]
        self._constraints = [c.lambdify() for c in self.chart.constraint_exprs()]
        self.pole_tol = pole_tol

    @property
    def dim(self):
        return self.chart.dim

    def check_state(self, x):
        args = list(x) + self._pvals
        for g in self._constraints:
            if abs(g(*args)) <= self.pole_tol:
                raise PoleEncountered(f"state {list(x)} reached the constraint locus")
        if not all(math.isfinite(v) for v in x):
            raise PoleEncountered(f"non-finite state {list(x)}")

    def rhs(self, t, x):
        args = list(x) + self._pvals
        out = [0.0] * self.dim
        try:
            for b, comps in zip(self.coefficients, self._comp):
                bt = b(t)
                if bt == 0.0:
                    continue
                for i, f in enumerate(comps):
                    if f is not None:
                        out[i] += bt * f(*args)
        except ZeroDivisionError:
            raise PoleEncountered(f"pole at t={t}, x={list(x)}") from None
        except OverflowError:
            raise NumericError(f"solution blew up near t={t}") from None
        return out


@dataclass
class Trajectory:
    names: tuple
    times: list
    states: list
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("times must be strictly increasing")
        if len(self.times) != len(self.states):
            raise ValueError("times and states differ in length")

    @property
    def final(self):
        return self.states[-1]

    def to_csv(self, target=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", *self.names])
        for t, x in zip(self.times, self.states):
            w.writerow([repr(float(t)), *(repr(float(v)) for v in x)])
        text = buf.getvalue()
        if target is not None:
            if hasattr(target, "write"):
                target.write(text)
            else:
                with open(target, "w", newline="") as fh:
                    fh.write(text)
        return text

    @classmethod
    def from_csv(cls, source) -> "Trajectory":
        text = source.read() if hasattr(source, "read") else open(source).read()
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], rows[1:]
        if header[0] != "t":
            raise ValueError("first column must be t")
        return cls(tuple(header[1:]), [float(r[0]) for r in body], [[float(v) for v in r[1:]] for r in body])


# ---------------------------------------------------------------------------
# integrators

# Dormand-Prince 5(4) tableau
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_DP_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)


def _axpy(x, h, terms):
    out = list(x)
    for c, k in terms:
        if c:
            hc = h * c
            for i, v in enumerate(k):
                out[i] += hc * v
    return out


def _rk4_step(sys, t, x, h):
    k1 = sys.rhs(t, x)
    k2 = sys.rhs(t + h / 2, _axpy(x, h, [(0.5, k1)]))
    k3 = sys.rhs(t + h / 2, _axpy(x, h, [(0.5, k2)]))
    k4 = sys.rhs(t + h, _axpy(x, h, [(1.0, k3)]))
    return _axpy(x, h, [(1 / 6, k1), (1 / 3, k2), (1 / 3, k3), (1 / 6, k4)])


def _dp_step(sys, t, x, h):
    ks = []
    for s in range(7):
        xs = _axpy(x, h, list(zip(_DP_A[s], ks)))
        ks.append(sys.rhs(t + _DP_C[s] * h, xs))
    x5 = _axpy(x, h, list(zip(_DP_B5, ks)))
    x4 = _axpy(x, h, list(zip(_DP_B4, ks)))
    return x5, x4


@dataclass
class IntegratorConfig:
    method: str = "rk4"
    step: float = 1e-3
    rtol: float = 1e-10
    atol: float = 1e-12
    min_step: float = 1e-14
    max_steps: int = 10_000_000


def integrate(system: LieSystem, x0: Sequence[float], t_span, method: str = "rk4", step: float = 1e-3,
              rtol: float = 1e-10, atol: float = 1e-12, t_eval: Sequence[float] | None = None,
              min_step: float = 1e-14, max_steps: int = 10_000_000) -> Trajectory:
    """Integrate from t_span[0] to t_span[1].

    ``rk4`` uses the fixed step (the last step is shortened to land on
    t1); ``dopri5`` adapts its step to the tolerances and reports the
    state at every point of ``t_eval`` (default: the rk4 grid).
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t1 <= t0:
        raise ValueError("t1 must exceed t0")
    x = [float(v) for v in x0]
    if len(x) != system.dim:
        raise ValueError(f"initial state has {len(x)} entries, expected {system.dim}")
    system.check_state(x)
    if t_eval is None:
        n = max(1, int(round((t1 - t0) / step)))
        grid = [t0 + (t1 - t0) * k / n for k in range(n + 1)]
    else:
        grid = [float(t) for t in t_eval]
        if grid[0] != t0:
            grid.insert(0, t0)
    times, states = [grid[0]], [list(x)]
    if method == "rk4":
        for ta, tb in zip(grid, grid[1:]):
            x = _rk4_step(system, ta, x, tb - ta)
            system.check_state(x)
            times.append(tb)
            states.append(list(x))
        meta = {"method": "rk4", "step": step}
    elif method in ("dopri5", "dopri"):
        h = min(step, t1 - t0)
        t = t0
        steps = 0
        for target in grid[1:]:
            while t < target:
                steps += 1
                if steps > max_steps:
                    raise StepUnderflow("maximum number of steps exceeded")
                hh = min(h, target - t)
                x5, x4 = _dp_step(system, t, x, hh)
                err = 0.0
                for a, b, c in zip(x5, x4, x):
                    sc = atol + rtol * max(abs(a), abs(c))
                    err = max(err, abs(a - b) / sc)
                if err <= 1.0 and all(math.isfinite(v) for v in x5):
                    t += hh
                    x = x5
                    system.check_state(x)
                    if hh >= h:  # only grow after a step that was not clipped to an output time
                        h = hh * (5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2)))
                else:
                    fac = 0.2 if not math.isfinite(err) else max(0.2, 0.9 * err ** -0.25)
                    h = hh * fac
                    if h < min_step:
                        raise StepUnderflow(f"step size underflow at t={t}")
            times.append(target)
            states.append(list(x))
        meta = {"method": "dopri5", "rtol": rtol, "atol": atol, "steps": steps}
    else:
        raise ValueError(f"unknown method {method!r}")
    return Trajectory(system.chart.names, times, states, meta)


# ---------------------------------------------------------------------------
# first integrals along trajectories


def _joined(trajs: Sequence[Trajectory]):
    grid = trajs[0].times
    for tr in trajs[1:]:
        if len(tr.times) != len(grid) or any(abs(a - b) > 1e-12 * max(1.0, abs(a)) for a, b in zip(tr.times, grid)):
            raise ValueError("trajectories are not sampled on the same time grid")
    for k in range(len(grid)):
        state = []
        for tr in trajs:
            state.extend(tr.states[k])
        yield grid[k], state


def _evaluator(f: RationalExpr, params: Mapping | None):
    fn = f.lambdify()
    pv = [float((params or {})[p]) for p in f.chart.params]

    def ev(state):
        try:
            v = fn(*state, *pv)
        except ZeroDivisionError:
            raise PoleEncountered("pole while evaluating along the trajectory") from None
        if not math.isfinite(v):
            raise PoleEncountered("non-finite value along the trajectory")
        return v

    return ev


def drift(f: RationalExpr, trajs: Sequence[Trajectory], params: Mapping | None = None) -> float:
    """max_t |f(t) - f(0)| / max(1, |f(0)|) along the joined trajectories."""
    if f.chart.dim != sum(len(tr.names) for tr in trajs):
        raise ValueError("function chart does not match the joined trajectories")
    ev = _evaluator(f, params)
    f0 = None
    worst = 0.0
    for _, state in _joined(trajs):
        v = ev(state)
        if f0 is None:
            f0 = v
        worst = max(worst, abs(v - f0))
    return worst / max(1.0, abs(f0))


def verify_superposition(relations: Mapping[str, RationalExpr], trajs: Sequence[Trajectory], tol: float = 1e-7,
                         params: Mapping | None = None) -> dict:
    """Constancy of each relation on (probe, particular solutions); poles are reported."""
    out = {}
    for name, f in relations.items():
        try:
            d = drift(f, trajs, params)
            out[name] = {"drift": d, "ok": d < tol, "error": None}
        except PoleEncountered as e:
            out[name] = {"drift": None, "ok": False, "error": str(e)}
    return {"relations": out, "ok": all(r["ok"] for r in out.values())}


def sample_generic(chart, box: Mapping[str, tuple] | Sequence[tuple], rng: random.Random | None = None,
                   margin: float = 1e-3, avoid: Sequence[RationalExpr] = (), params: Mapping | None = None,
                   max_tries: int = 10_000) -> list:
    """Uniform point of ``box`` at distance > margin from the constraint and ``avoid`` loci."""
    rng = rng or random.Random(0)
    if isinstance(box, Mapping):
        bounds = [box[n] for n in chart.names]
    else:
        bounds = list(box)
    pv = [float((params or {})[p]) for p in chart.params]
    checks = [c.lambdify() for c in chart.constraint_exprs()] + [a.lambdify() for a in avoid]
    for _ in range(max_tries):
        x = [rng.uniform(lo, hi) for lo, hi in bounds]
        try:
            if all(abs(g(*x, *pv)) > margin for g in checks):
                return x
        except ZeroDivisionError:
            continue
    raise NumericError("could not sample a generic point")
