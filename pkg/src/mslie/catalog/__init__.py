"""Golden definitions of the four worked systems, verified on load.

Entries are JSON documents in the system-definition format.  The
directory is taken from ``MSLIE_CATALOG_DIR`` when set, otherwise the
copies shipped with the package are used.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..diffgeo import exterior_d, form_value, interior, lie_bracket, lie_derivative
from ..liealgebra import StructureConstantsError, VGLieAlgebra, close_and_extract
from ..sysdef import LieSystemDef, SchemaError, load_system, parse_form, parse_sc

__all__ = ["IDS", "DEMOS", "ENV_VAR", "CatalogError", "CatalogEntry", "load", "load_demo", "catalog_dir", "resolve"]

IDS = ("schwarz", "dbh", "control", "riccati")
DEMOS = ("affine",)
ENV_VAR = "MSLIE_CATALOG_DIR"


class CatalogError(ValueError):
    """Unknown id, or an entry whose data fail their own consistency checks."""


def catalog_dir() -> Path:
    env = os.environ.get(ENV_VAR)
    if env:
        return Path(env)
    return Path(str(resources.files("mslie.catalog").joinpath("data")))


@dataclass
class CatalogEntry:
    system: LieSystemDef
    alg: VGLieAlgebra

    @property
    def id(self):
        return self.system.id

    @property
    def expected(self):
        return self.system.expected

    @property
    def chart(self):
        return self.system.chart

    def form(self, name):
        return self.system.form(name)

    @property
    def symmetries(self):
        return list(self.system.symmetries.values())

    def expected_forms(self, key) -> list:
        return [parse_form(self.chart, f) for f in self.expected[key].values()]


def _fail(entry_id, msg):
    raise CatalogError(f"catalog entry {entry_id!r}: {msg}")


def _verify(sd: LieSystemDef) -> VGLieAlgebra:
    eid = sd.id
    exp = sd.expected
    basis = sd.basis
    alg = close_and_extract(basis)
    if alg.dim != len(basis):
        _fail(eid, f"basis does not close: closure has dimension {alg.dim}")
    if "structure_constants" in exp:
        try:
            stored = parse_sc(alg.dim, exp["structure_constants"])
        except StructureConstantsError as e:
            _fail(eid, f"stored structure constants are invalid: {e}")
        if alg.sc != stored:
            _fail(eid, f"structure constants {alg.sc} differ from the stored table")
    for name, w in sd.forms.items():
        if exterior_d(w):
            _fail(eid, f"form {name} is not closed")
        for a, X in enumerate(basis, start=1):
            if lie_derivative(X, w):
                _fail(eid, f"form {name} is not invariant under X{a}")
    theta_name = exp.get("volume_form")
    for name, f in exp.get("hamiltonian_differentials", {}).items():
        if interior(sd.field(name), sd.form(theta_name)) != parse_form(sd.chart, f):
            _fail(eid, f"stored contraction of {name} with {theta_name} is wrong")
    for name, Y in sd.symmetries.items():
        for a, X in enumerate(basis, start=1):
            if lie_bracket(X, Y):
                _fail(eid, f"{name} does not commute with X{a}")
    for key, frame in (("coframe", basis), ("symmetry_coframe", list(sd.symmetries.values()))):
        if key not in exp:
            continue
        forms = [parse_form(sd.chart, f) for f in exp[key].values()]
        for i, eta in enumerate(forms):
            for j, X in enumerate(frame):
                val = form_value(eta, [X])
                if val != (1 if i == j else 0):
                    _fail(eid, f"{key} form {i+1} evaluates to {val} on frame field {j+1}")
    return alg


def _read(path: Path) -> CatalogEntry:
    sd = load_system(path)
    return CatalogEntry(sd, _verify(sd))


def load(entry_id: str) -> CatalogEntry:
    if entry_id not in IDS:
        raise CatalogError(f"unknown catalog id {entry_id!r}; available: {', '.join(IDS)}")
    path = catalog_dir() / f"{entry_id}.json"
    if not path.exists():
        raise CatalogError(f"catalog file {path} not found")
    return _read(path)


def load_demo(name: str) -> CatalogEntry:
    if name not in DEMOS:
        raise CatalogError(f"unknown demo system {name!r}; available: {', '.join(DEMOS)}")
    return _read(Path(str(resources.files("mslie.catalog").joinpath("demo", f"{name}.json"))))


def resolve(source: str) -> CatalogEntry | LieSystemDef:
    """A catalog id, demo name or path to a system-definition file."""
    if source in IDS:
        return load(source)
    if source in DEMOS:
        return load_demo(source)
    p = Path(source)
    if p.exists():
        return load_system(p)
    raise SchemaError(f"{source!r} is neither a catalog id ({', '.join(IDS + DEMOS)}) nor an existing file")
