"""Command-line front end.

Every subcommand takes a system: a catalog id (schwarz, dbh, control,
riccati), the demo ``affine``, or a path to a system-definition JSON file.
Exit codes: 0 success, 2 input/schema error, 3 failed mathematical check,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction

from . import catalog
from .catalog import CatalogEntry, CatalogError
from .coalgebra import coproduct_m
from .diffgeo import diagonal, lie_bracket
from .liealgebra import ClosureError, StructureConstantsError, close_and_extract, is_unimodular, solve_symmetries
from .multisymplectic import (
    Degenerate,
    NoPrimitive,
    NotClosed,
    NotHamiltonian,
    NotLocallyAutomorphic,
    NotUnimodular,
    certification_report,
    check_multisymplectic,
    dual_coframe,
    hamiltonian_form,
    invariant_volume,
    minimal_lie_hamilton_algebra,
)
from .numeric import NumericError, TCoefficient, integrate, sample_generic, verify_superposition
from .prolong_invariants import (
    READINGS,
    Realization,
    apply_chain,
    check_independence,
    constant_of_motion_check,
    realize,
    verify_evolution_invariant,
)
from .symexpr import SymExprError, parse
from .sysdef import SchemaError

EXIT_OK, EXIT_INPUT, EXIT_MATH, EXIT_NUMERIC = 0, 2, 3, 4


class MathCheckFailed(Exception):
    def __init__(self, message, payload=None):
        super().__init__(message)
        self.payload = payload or {}


def _system(source):
    obj = catalog.resolve(source)
    return (obj.system, obj.alg) if isinstance(obj, CatalogEntry) else (obj, None)


def _algebra(sd, alg):
    if alg is not None:
        return alg
    a = close_and_extract(sd.basis)
    if a.dim != len(sd.basis):
        raise MathCheckFailed(f"the fields do not close: closure has dimension {a.dim}")
    return a


def _sc_json(sc):
    return [[a, b, g, str(v)] for a, b, g, v in sc.to_sparse()]


def _emit(args, payload, text_lines):
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for line in text_lines:
            print(line)


def _names(sd):
    return list(sd.fields)


# ---------------------------------------------------------------------------
# subcommands


def cmd_bracket(args):
    sd, _ = _system(args.system)
    pool = {**sd.fields, **sd.symmetries}
    for n in (args.a, args.b):
        if n not in pool:
            raise SchemaError(f"unknown field {n!r}; known: {sorted(pool)}")
    Z = lie_bracket(pool[args.a], pool[args.b])
    comps = [str(c) for c in Z.coeffs]
    _emit(args, {"bracket": [args.a, args.b], "components": comps, "coordinates": list(sd.chart.names)},
          [f"[{args.a}, {args.b}] = {Z}"])


def cmd_structure_constants(args):
    sd, _ = _system(args.system)
    try:
        alg = close_and_extract(sd.basis, max_dim=args.max_dim)
    except StructureConstantsError as e:
        raise MathCheckFailed(str(e))
    names = _names(sd) + [f"Z{k}" for k in range(1, alg.dim - len(sd.basis) + 1)]
    added = [str(X) for X in alg.basis[len(sd.basis):]]
    payload = {
        "dimension": alg.dim,
        "basis": names,
        "added_fields": added,
        "structure_constants": _sc_json(alg.sc),
        "antisymmetric": True,
        "jacobi": alg.sc.jacobi_violation() is None,
    }
    lines = [f"dimension {alg.dim}"]
    lines += [f"added {n} = {f}" for n, f in zip(names[len(sd.basis):], added)]
    lines += [f"[{names[a-1]}, {names[b-1]}] = {v}*{names[g-1]}" for a, b, g, v in alg.sc.to_sparse()]
    lines.append("antisymmetry ok, Jacobi ok")
    _emit(args, payload, lines)


def cmd_coframe(args):
    sd, alg = _system(args.system)
    frame = list(sd.symmetries.values()) if args.symmetries else sd.basis
    if args.symmetries and not frame:
        raise SchemaError("the system defines no symmetries")
    try:
        eta = dual_coframe(frame)
    except ValueError as e:
        raise MathCheckFailed(str(e))
    payload = {"coframe": [{n: str(eta_i.coeff((j,))) for j, n in enumerate(sd.chart.names)} for eta_i in eta]}
    _emit(args, payload, [f"eta{i} = {e}" for i, e in enumerate(eta, start=1)])


def cmd_symmetries(args):
    sd, alg = _system(args.system)
    alg = _algebra(sd, alg)
    Y = solve_symmetries(alg, args.degree)
    payload = {"degree": args.degree, "symmetries": [[str(c) for c in y.coeffs] for y in Y]}
    _emit(args, payload, [f"Y{i} = {y}" for i, y in enumerate(Y, start=1)] or ["no symmetries found"])
    if not Y:
        raise MathCheckFailed("no symmetries of the requested degree")


def cmd_check_multisymplectic(args):
    sd, alg = _system(args.system)
    w = sd.form(args.form)
    try:
        ms = check_multisymplectic(w)
    except (NotClosed, Degenerate) as e:
        raise MathCheckFailed(str(e), {"form": args.form, "multisymplectic": False, "reason": str(e)})
    rep = certification_report(ms, _algebra(sd, alg) if not args.no_algebra else None)
    rep["multisymplectic"] = True
    lines = [f"{args.form}: closed, generic rank {ms.generic_rank} of {ms.chart.dim}",
             f"degeneracy locus: {ms.degeneracy_locus} = 0"]
    for g in rep.get("generators", []):
        lines.append(f"{g['generator']}: locally Hamiltonian={g['locally_hamiltonian']}, primitive={g['hamiltonian_form']}")
    _emit(args, rep, lines)


def cmd_invariant_volume(args):
    sd, alg = _system(args.system)
    alg = _algebra(sd, alg)
    try:
        vol = invariant_volume(alg)
    except NotUnimodular as e:
        traces = [str(t) for t in e.traces]
        raise MathCheckFailed("algebra is not unimodular: Tr(ad) = " + ", ".join(traces),
                              {"unimodular": False, "traces": traces})
    except NotLocallyAutomorphic as e:
        raise MathCheckFailed(f"not locally automorphic: {e}", {"locally_automorphic": False})
    payload = {"unimodular": True, "traces": [str(t) for t in is_unimodular(alg.sc).traces],
               "volume_form": str(vol.form), "degeneracy_locus": str(vol.degeneracy_locus)}
    _emit(args, payload, [f"Theta = {vol.form}", f"nondegenerate off {vol.degeneracy_locus} = 0"])


def _theta(sd, alg, form_name):
    if form_name:
        try:
            return check_multisymplectic(sd.form(form_name))
        except (NotClosed, Degenerate) as e:
            raise MathCheckFailed(str(e))
    try:
        return invariant_volume(alg)
    except (NotUnimodular, NotLocallyAutomorphic) as e:
        raise MathCheckFailed(f"no invariant volume form: {e}")


def cmd_hamiltonian_forms(args):
    sd, alg = _system(args.system)
    alg = _algebra(sd, alg)
    theta = _theta(sd, alg, args.form)
    names = _names(sd)
    rows, lines = [], []
    try:
        for n, X in zip(names, alg.basis):
            h = hamiltonian_form(X, theta, frame=alg.basis)
            rows.append({"field": n, "hamiltonian_form": str(h)})
            lines.append(f"theta[{n}] = {h}")
        lh = minimal_lie_hamilton_algebra(alg, theta)
    except (NotHamiltonian, NoPrimitive) as e:
        raise MathCheckFailed(str(e))
    for r, g in zip(rows, lh.generators):
        r["differential"] = str(g)
    lines += [f"{{dtheta{a}, dtheta{b}}} = {v}*dtheta{g}" for a, b, g, v in lh.sc.to_sparse()]
    _emit(args, {"forms": rows, "lie_hamilton_sc": _sc_json(lh.sc)}, lines)


def _realization(sd, alg, args):
    if not sd.casimirs:
        raise SchemaError("the system defines no Casimir elements")
    name = args.casimir or next(iter(sd.casimirs))
    if name not in sd.casimirs:
        raise SchemaError(f"unknown Casimir {name!r}")
    cas = sd.casimirs[name]
    theta = _theta(sd, alg, args.form)
    sign = sd.expected.get("realization_sign", args.sign)
    try:
        return cas, Realization(alg, theta, cas.sc, sign)
    except ValueError as e:
        raise MathCheckFailed(str(e))


def cmd_casimir_invariant(args):
    sd, alg = _system(args.system)
    alg = _algebra(sd, alg)
    cas, R = _realization(sd, alg, args)
    t = coproduct_m(cas.element, args.m) if args.m > 1 else cas.element
    T = realize(R, t)
    rep = verify_evolution_invariant(T, alg)
    payload = rep.to_json(include_tensor=args.full)
    lines = [f"rank {T.rank} tensor on {T.chart}, {len(T.terms)} nonzero components",
             f"annihilated by: {', '.join(rep.annihilators) or '-'}",
             f"failures: {', '.join(rep.failures) or '-'}"]
    _emit(args, payload, lines)
    if not rep.invariant:
        raise MathCheckFailed("realized tensor is not invariant")


def _read_chains(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise SchemaError(f"cannot read chains file: {e}")
    if isinstance(doc, list):
        doc = {"chains": doc}
    chains = doc.get("chains")
    if isinstance(chains, list):
        chains = {"".join(f"Y{i}" for i in ch): ch for ch in chains}
    if not isinstance(chains, dict) or not chains:
        raise SchemaError("chains file needs a non-empty 'chains' list or object")
    return doc, chains


def cmd_constants(args):
    sd, alg = _system(args.system)
    alg = _algebra(sd, alg)
    doc, chains = _read_chains(args.chains)
    if not sd.symmetries:
        raise SchemaError("the system defines no symmetries to contract with")
    args.casimir = args.casimir or doc.get("casimir")
    cas, R = _realization(sd, alg, args)
    m = args.m
    full = realize(R, coproduct_m(cas.element, m) if m > 1 else cas.element)
    tensor = full
    if doc.get("tensor", "coproduct") == "cross":
        tensor = full - diagonal(realize(R, cas.element), m)
    reading = args.reading or doc.get("reading", "inner")
    if reading not in READINGS:
        raise SchemaError(f"reading must be one of {READINGS}")
    Y = [diagonal(y, m) if m > 1 else y for y in sd.symmetries.values()]
    values, lines = {}, []
    for name, item in chains.items():
        if isinstance(item, list):
            item = {"chain": item}
        ch = item["chain"]
        if any(not 1 <= i <= len(Y) for i in ch):
            raise SchemaError(f"chain {name} indexes a missing symmetry")
        if len(ch) != tensor.rank:
            raise SchemaError(f"chain {name} has length {len(ch)} but the tensor has rank {tensor.rank}")
        f = apply_chain(tensor, [Y[i - 1] for i in ch], reading=item.get("reading", reading)).scalar()
        f = f * Fraction(item.get("factor", "1"))
        if "divide_by" in item:
            f = f / values[item["divide_by"]]
        values[name] = f
        lines.append(f"{name} = {f}")
    com = {n: constant_of_motion_check(f, alg) for n, f in values.items()}
    payload = {"scalars": {n: str(f) for n, f in values.items()}, "constants_of_motion": com}
    wrt = doc.get("wrt")
    if wrt:
        funcs = doc.get("functions", list(values))
        ind = check_independence([values[n] for n in funcs], wrt)
        payload["jacobian"] = {"functions": funcs, "wrt": wrt, "determinant": str(ind.determinant), "ok": ind.independent}
        lines.append(f"Jacobian wrt {', '.join(wrt)}: {ind.determinant} ({'nonzero' if ind else 'ZERO'})")
    _emit(args, payload, lines)
    if not all(com.values()) or ("jacobian" in payload and not payload["jacobian"]["ok"]):
        raise MathCheckFailed("a scalar is not a constant of motion or the Jacobian vanishes")


def _floats(text, what):
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise SchemaError(f"{what} must be a comma-separated list of numbers") from None


def _pairs(items, what):
    out = {}
    for it in items or []:
        if "=" not in it:
            raise SchemaError(f"{what} must look like NAME=VALUE")
        k, v = it.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def cmd_integrate(args):
    sd, _ = _system(args.system)
    over = {k: TCoefficient(v) for k, v in _pairs(args.coef, "--coef").items()}
    unknown = set(over) - set(sd.fields)
    if unknown:
        raise SchemaError(f"--coef refers to unknown fields {sorted(unknown)}")
    params = {k: float(Fraction(v)) for k, v in _pairs(args.param, "--param").items()}
    system = sd.lie_system(over, params)
    x0 = _floats(args.x0, "--x0")
    tr = integrate(system, x0, (args.t0, args.t1), method=args.method, step=args.step, rtol=args.rtol, atol=args.atol)
    text = tr.to_csv(args.output) if args.output else tr.to_csv()
    if not args.output:
        sys.stdout.write(text)
    elif args.json:
        print(json.dumps({"output": args.output, "samples": len(tr.times), "final": tr.final, "meta": tr.meta},
                         indent=2, sort_keys=True))


def _relations(sd, m):
    exp = sd.expected
    P = sd.chart.product(m)
    rel = {}
    for item in exp.get("constants", []):
        if item.get("verify", True):
            rel[item["name"]] = parse(item["value"], P)
    for key in ("first_integrals", "superposition"):
        for n, text in exp.get(key, {}).items():
            rel[n] = parse(text, P)
    return rel


def cmd_verify(args):
    sd, alg = _system(args.system)
    alg = _algebra(sd, alg)
    num = sd.expected.get("numeric")
    m = args.m
    rel = _relations(sd, m)
    if not rel or num is None:
        raise SchemaError("the system stores no constants of motion or numeric settings to verify")
    symbolic = {n: constant_of_motion_check(f, alg) for n, f in rel.items()}
    system = sd.lie_system()
    P = sd.chart.product(m)
    avoid = [parse(a, P) for a in num.get("avoid", [])]
    rng = random.Random(args.seed)
    step = args.step or num["step"]
    t1 = num["t1"]
    worst = {n: 0.0 for n in rel}
    runs = []
    for k in range(args.samples):
        # a generic tuple: sample on the product chart so the avoid-loci apply jointly
        box = {f"{c}_{j}": tuple(num["box"][c]) for j in range(1, m + 1) for c in sd.chart.names}
        x = sample_generic(P, box, rng, avoid=avoid)
        n = sd.chart.dim
        trajs = [integrate(system, x[j * n:(j + 1) * n], (0.0, t1), step=step) for j in range(m)]
        res = verify_superposition(rel, trajs, tol=args.tol)
        for name, r in res["relations"].items():
            if r["drift"] is None:
                raise NumericError(f"pole while evaluating {name}: {r['error']}")
            worst[name] = max(worst[name], r["drift"])
        runs.append({"initial": x, "ok": res["ok"]})
    ok = all(d < args.tol for d in worst.values()) and all(symbolic.values())
    payload = {"m": m, "samples": args.samples, "step": step, "t1": t1, "tolerance": args.tol,
               "symbolic": symbolic, "max_drift": worst, "ok": ok}
    lines = [f"{n}: symbolic {'ok' if symbolic[n] else 'FAIL'}, max drift {worst[n]:.3e}" for n in rel]
    lines.append("verified" if ok else "FAILED")
    _emit(args, payload, lines)
    if not ok:
        raise MathCheckFailed("drift above tolerance or symbolic check failed")


def cmd_replicate(args):
    from .replicate import replicate

    rep = replicate(catalog.load(args.id))
    _emit(args, rep.to_json(), list(rep.lines()) + [f"{rep.entry}: {'all matched' if rep.ok else 'MISMATCHES'}"])
    if not rep.ok:
        raise MathCheckFailed("replication mismatch")


# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="mslie", description="Multisymplectic Lie systems toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, system=True):
        sp = sub.add_parser(name, help=help_, description=help_)
        if system:
            sp.add_argument("system", help="catalog id, 'affine', or path to a system JSON file")
        sp.add_argument("--json", action="store_true", help="machine-readable output")
        sp.set_defaults(func=fn)
        return sp

    sp = add("bracket", cmd_bracket, "Lie bracket of two named fields")
    sp.add_argument("a")
    sp.add_argument("b")
    sp = add("structure-constants", cmd_structure_constants, "close the fields and print structure constants")
    sp.add_argument("--max-dim", type=int, default=12)
    sp = add("coframe", cmd_coframe, "dual coframe of the basis (or of the symmetries)")
    sp.add_argument("--symmetries", action="store_true")
    sp = add("symmetries", cmd_symmetries, "polynomial vector fields commuting with the algebra")
    sp.add_argument("--degree", type=int, default=2)
    sp = add("check-multisymplectic", cmd_check_multisymplectic, "certify a stored form as multisymplectic")
    sp.add_argument("--form", required=True)
    sp.add_argument("--no-algebra", action="store_true", help="skip the Hamiltonian analysis of the basis")
    add("invariant-volume", cmd_invariant_volume, "invariant volume form or non-unimodularity diagnostic")
    sp = add("hamiltonian-forms", cmd_hamiltonian_forms, "Hamiltonian forms and Lie-Hamilton structure constants")
    sp.add_argument("--form", help="stored form name (default: invariant volume)")
    for name, fn, help_ in (("casimir-invariant", cmd_casimir_invariant, "realize an iterated coproduct of a Casimir"),
                            ("constants", cmd_constants, "contract the realized invariant with symmetries")):
        sp = add(name, fn, help_)
        sp.add_argument("--m", type=int, default=1)
        sp.add_argument("--casimir")
        sp.add_argument("--form", help="stored form name (default: invariant volume)")
        sp.add_argument("--sign", choices=("plain", "negated"), default="plain")
        if name == "casimir-invariant":
            sp.add_argument("--full", action="store_true", help="include the tensor in JSON output")
        else:
            sp.add_argument("--chains", required=True, help="JSON file with the contraction chains")
            sp.add_argument("--reading", choices=READINGS)
    sp = add("integrate", cmd_integrate, "integrate the t-dependent system and print a CSV trajectory")
    sp.add_argument("--x0", required=True, help="comma-separated initial state")
    sp.add_argument("--t0", type=float, default=0.0)
    sp.add_argument("--t1", type=float, default=1.0)
    sp.add_argument("--step", type=float, default=1e-3)
    sp.add_argument("--method", choices=("rk4", "dopri5"), default="rk4")
    sp.add_argument("--rtol", type=float, default=1e-10)
    sp.add_argument("--atol", type=float, default=1e-12)
    sp.add_argument("--coef", action="append", help="override a coefficient, e.g. X1=sin(t)")
    sp.add_argument("--param", action="append", help="parameter value, e.g. alpha1=1/2")
    sp.add_argument("-o", "--output")
    sp = add("verify", cmd_verify, "numerical drift of stored constants of motion")
    sp.add_argument("--m", type=int, default=2)
    sp.add_argument("--samples", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--step", type=float)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp = add("replicate", cmd_replicate, "recompute every stored expectation of a catalog entry", system=False)
    sp.add_argument("id", choices=catalog.IDS)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
        return EXIT_OK
    except MathCheckFailed as e:
        if getattr(args, "json", False) and e.payload:
            print(json.dumps({"error": str(e), **e.payload}, indent=2, sort_keys=True, default=str))
        print(f"check failed: {e}", file=sys.stderr)
        return EXIT_MATH
    except (ClosureError, NotHamiltonian, NoPrimitive, NotClosed, Degenerate) as e:
        print(f"check failed: {e}", file=sys.stderr)
        return EXIT_MATH
    except NumericError as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (SchemaError, CatalogError, SymExprError, ValueError, KeyError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
