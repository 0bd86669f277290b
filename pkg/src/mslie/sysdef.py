"""The JSON system-definition format: loading, validation and conversion to library objects."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import jsonschema

from .coalgebra import AbstractCasimir, casimir_from_entries
from .diffgeo import DiffForm, VectorField, form_from_terms, vector_field
from .liealgebra import StructureConstants
from .numeric import LieSystem, TCoefficient
from .symexpr import Chart, SymExprError

__all__ = ["SCHEMA_VERSION", "SchemaError", "LieSystemDef", "load_system", "parse_system", "parse_form", "parse_sc", "schema"]

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    """The document does not conform to the system-definition schema."""


def schema() -> dict:
    return json.loads(resources.files("mslie").joinpath("schema.json").read_text())


def parse_sc(dim, rows) -> StructureConstants:
    return StructureConstants.from_sparse(dim, [(a, b, g, Fraction(v)) for a, b, g, v in rows])


def parse_form(chart, item) -> DiffForm:
    return form_from_terms(chart, item["degree"], [(t["coeff"], t["dx"]) for t in item["terms"]])


@dataclass
class LieSystemDef:
    raw: dict
    chart: Chart
    fields: dict
    tdep: dict
    forms: dict = field(default_factory=dict)
    casimirs: dict = field(default_factory=dict)
    symmetries: dict = field(default_factory=dict)
    source: str = ""

    @property
    def id(self):
        return self.raw.get("id", "")

    @property
    def basis(self) -> list:
        return list(self.fields.values())

    @property
    def expected(self) -> dict:
        return self.raw.get("expected", {})

    def field(self, name) -> VectorField:
        try:
            return self.fields[name]
        except KeyError:
            raise SchemaError(f"unknown field {name!r}; known: {sorted(self.fields)}") from None

    def form(self, name) -> DiffForm:
        try:
            return self.forms[name]
        except KeyError:
            raise SchemaError(f"unknown form {name!r}; known: {sorted(self.forms)}") from None

    def lie_system(self, overrides=None, params=None) -> LieSystem:
        coeffs = dict(self.tdep)
        coeffs.update(overrides or {})
        return LieSystem(self.basis, [coeffs.get(n, TCoefficient("0")) for n in self.fields], params=params)


def parse_system(doc: dict, source: str = "") -> LieSystemDef:
    if not isinstance(doc, dict):
        raise SchemaError("system definition must be a JSON object")
    if "schema_version" not in doc:
        raise SchemaError("missing mandatory field 'schema_version'")
    try:
        jsonschema.validate(doc, schema())
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise SchemaError(f"{where}: {e.message}") from None
    try:
        chart = Chart(tuple(doc["coordinates"]), tuple(doc.get("constraints", ())), tuple(doc.get("params", ())))
        n = chart.dim
        fields = {}
        for name, comps in doc["fields"].items():
            if len(comps) != n:
                raise SchemaError(f"field {name} has {len(comps)} components, expected {n}")
            fields[name] = vector_field(chart, comps)
        tdep = {}
        for name, text in doc.get("tdep", {}).items():
            if name not in fields:
                raise SchemaError(f"tdep refers to unknown field {name!r}")
            tdep[name] = TCoefficient(text)
        forms = {name: parse_form(chart, f) for name, f in doc.get("forms", {}).items()}
        casimirs = {}
        for c in doc.get("casimirs", []):
            sc = parse_sc(len(fields), c["sc"])
            elem = casimir_from_entries(sc.dim, c["terms"])
            casimirs[c["name"]] = AbstractCasimir(elem, c["kind"], sc)
        symmetries = {}
        for name, comps in doc.get("symmetries", {}).items():
            if len(comps) != n:
                raise SchemaError(f"symmetry {name} has {len(comps)} components, expected {n}")
            symmetries[name] = vector_field(chart, comps)
    except SchemaError:
        raise
    except (SymExprError, ValueError) as e:
        raise SchemaError(str(e)) from None
    return LieSystemDef(doc, chart, fields, tdep, forms, casimirs, symmetries, source)


def load_system(path) -> LieSystemDef:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: invalid JSON ({e})") from None
    return parse_system(doc, str(path))
