"""JSON manifests: one schema for the inputs of every command.

Rationals are written as strings ``"p/q"``; unbounded box ends as ``"inf"``.
An atlas is either a built-in ``atlas`` fixture or the charts named by
``transitions`` and ``faces``; other charts only serve as sources and
targets of ``maps``.  Loading collects every problem it can
find into :class:`ManifestInvalid` instead of stopping at the first.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import jsonschema

from .atlas import (
    Atlas,
    Chart,
    ChartedMap,
    Transition,
    circle_atlas,
    half_line,
    interval_atlas,
    point_atlas,
    product_atlas,
    quotient_cylinder,
)
from .btangent import BVectorField
from .elliptic import BOperator1D
from .errors import BCalcError, ManifestError
from .expr import BExpr, parse
from .phg import IndexSet
from .weights import parse_rational

_rational = {"type": ["string", "number"]}
_bound = {"type": ["string", "number"]}
_box = {"type": "array", "items": {"type": "array", "items": _bound, "minItems": 2, "maxItems": 2}}
_strings = {"type": "array", "items": {"type": "string"}}
_weight_map = {"type": "object", "additionalProperties": _rational}
_index_map = {"type": "object", "additionalProperties": {
    "type": "array", "items": {"type": "array", "prefixItems": [_rational, {"type": "integer", "minimum": 0}],
                               "minItems": 2, "maxItems": 2}}}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "atlas": {
            "type": "object",
            "required": ["fixture"],
            "additionalProperties": False,
            "properties": {
                "fixture": {"enum": ["point", "half_line", "interval", "circle", "quotient_cylinder", "product"]},
                "alpha": _rational,
                "factors": {"type": "array", "items": {"$ref": "#/properties/atlas"}},
            },
        },
        "charts": {"type": "array", "items": {
            "type": "object", "required": ["id", "coords"], "additionalProperties": False,
            "properties": {"id": {"type": "string"}, "coords": _strings,
                           "boundary": {"type": "integer", "minimum": 0}, "box": _box}}},
        "transitions": {"type": "array", "items": {
            "type": "object", "required": ["source", "target", "components"], "additionalProperties": False,
            "properties": {"name": {"type": "string"}, "source": {"type": "string"}, "target": {"type": "string"},
                           "components": _strings, "domain": _box, "inverse": _strings,
                           "inverse_domain": _box}}},
        "faces": {"type": "array", "items": {
            "type": "object", "required": ["id", "locals"], "additionalProperties": False,
            "properties": {"id": {"type": "string"},
                           "locals": {"type": "array", "items": {"type": "array", "items": {"type": "string"},
                                                                 "minItems": 2, "maxItems": 2}}}}},
        "functions": {"type": "array", "items": {
            "type": "object", "required": ["id", "expr"], "additionalProperties": False,
            "properties": {"id": {"type": "string"}, "expr": {"type": "string"}, "interior": _strings,
                           "chart": {"type": "string"}, "expect": {"type": "string"}}}},
        "maps": {"type": "array", "items": {
            "type": "object", "required": ["id", "source", "target", "components"], "additionalProperties": False,
            "properties": {"id": {"type": "string"}, "source": {"type": "string"}, "target": {"type": "string"},
                           "components": _strings, "domain": _box,
                           "pullback": _weight_map, "pushforward": _weight_map,
                           "probe_point": {"type": "object", "additionalProperties": {"type": "number"}},
                           "corners": {"type": "array", "items": _strings}}}},
        "vector_fields": {"type": "array", "items": {
            "type": "object", "required": ["id", "chart", "coeffs"], "additionalProperties": False,
            "properties": {"id": {"type": "string"}, "chart": {"type": "string"}, "coeffs": _strings}}},
        "weights": _weight_map,
        "operators": {"type": "array", "items": {
            "type": "object", "required": ["id", "coeffs"], "additionalProperties": False,
            "properties": {"id": {"type": "string"}, "order": {"type": "integer", "minimum": 1},
                           "coeffs": _strings,
                           "sweep": {"type": "object", "additionalProperties": False,
                                     "properties": {"lo": {"type": "number"}, "hi": {"type": "number"},
                                                    "steps": {"type": "integer", "minimum": 0}}},
                           "solve": {"type": "array", "items": {"type": "array", "items": {"type": "number"},
                                                                "minItems": 2, "maxItems": 2}}}}},
        "index_sets": _index_map,
        "cohomology": {"type": "object", "additionalProperties": False, "properties": {
            "interval": {"type": "boolean"},
            "twisted_circle": {"type": "array", "items": {"type": "number"}},
            "quotient_alpha": {"type": "array", "items": {"type": "number"}}}},
    },
}


class ManifestInvalid(ManifestError):
    """Validation failed; ``errors`` lists every problem found."""

    def __init__(self, errors: list):
        super().__init__("; ".join(e["message"] for e in errors))
        self.errors = errors


def _err(path: str, message: str) -> dict:
    return {"path": path, "message": f"{path}: {message}" if path else message}


@dataclass
class Manifest:
    raw: dict
    path: str = ""
    atlas: Atlas | None = None
    charts: dict = field(default_factory=dict)
    functions: dict = field(default_factory=dict)
    maps: dict = field(default_factory=dict)
    map_specs: dict = field(default_factory=dict)
    vector_fields: dict = field(default_factory=dict)
    operators: dict = field(default_factory=dict)
    operator_specs: dict = field(default_factory=dict)
    weights: dict = field(default_factory=dict)
    index_sets: dict = field(default_factory=dict)
    cohomology: dict = field(default_factory=dict)

    @property
    def digest(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def _fixture(spec: dict) -> Atlas:
    kind = spec["fixture"]
    if kind == "point":
        return point_atlas()
    if kind == "half_line":
        return half_line()
    if kind == "interval":
        return interval_atlas()
    if kind == "circle":
        return circle_atlas()
    if kind == "quotient_cylinder":
        return quotient_cylinder(parse_rational(spec.get("alpha", 1)))
    factors = spec.get("factors") or []
    if len(factors) < 2:
        raise ManifestError("product fixture needs at least two factors")
    out = _fixture(factors[0])
    for f in factors[1:]:
        out = product_atlas(out, _fixture(f))
    return out


def _chart(spec: dict) -> Chart:
    coords = spec["coords"]
    k = spec.get("boundary", len(coords))
    box = spec.get("box")
    if box is None:
        return Chart.model(spec["id"], coords[:k], coords[k:])
    return Chart.model(spec["id"], coords[:k], coords[k:], box=[[_bound_value(a), _bound_value(b)] for a, b in box])


def _bound_value(v) -> float:
    if isinstance(v, str):
        s = v.strip().lower()
        if s in ("inf", "+inf"):
            return float("inf")
        if s == "-inf":
            return float("-inf")
        return float(Fraction(s))
    return float(v)


def _domain(box):
    return None if box is None else [(_bound_value(a), _bound_value(b)) for a, b in box]


def load_manifest(source) -> Manifest:
    """Read and validate a manifest from a path, a JSON string or a dict."""
    if isinstance(source, dict):
        raw, path = source, ""
    else:
        p = Path(source)
        try:
            text = p.read_text() if p.exists() else str(source)
        except OSError as e:
            raise ManifestInvalid([_err("", f"cannot read manifest: {e}")])
        path = str(p) if p.exists() else ""
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise ManifestInvalid([_err("", f"invalid JSON: {e}")])
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = [_err("/".join(str(x) for x in e.absolute_path), e.message)
              for e in sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path)))]
    if errors:
        raise ManifestInvalid(errors)
    m = Manifest(raw, path)
    _resolve(m, errors)
    if errors:
        raise ManifestInvalid(errors)
    return m


def _guard(errors: list, path: str, fn):
    try:
        return fn()
    except BCalcError as e:
        errors.append(_err(path, f"{type(e).__name__}: {e}"))
    except (ValueError, ZeroDivisionError, KeyError) as e:
        errors.append(_err(path, f"{type(e).__name__}: {e}"))
    return None


def _resolve(m: Manifest, errors: list) -> None:
    raw = m.raw
    if "atlas" in raw and "charts" in raw:
        errors.append(_err("atlas", "give either an atlas fixture or explicit charts, not both"))
        return
    if "atlas" in raw:
        m.atlas = _guard(errors, "atlas", lambda: _fixture(raw["atlas"]))
        if m.atlas:
            m.charts.update(m.atlas.charts)
    for i, c in enumerate(raw.get("charts", [])):
        ch = _guard(errors, f"charts/{i}", lambda c=c: _chart(c))
        if ch:
            if ch.id in m.charts:
                errors.append(_err(f"charts/{i}", f"duplicate chart id {ch.id}"))
            m.charts[ch.id] = ch
    if "charts" in raw:
        transitions = []
        for i, t in enumerate(raw.get("transitions", [])):
            path = f"transitions/{i}"
            if t["source"] not in m.charts or t["target"] not in m.charts:
                errors.append(_err(path, f"unknown chart in {t['source']} -> {t['target']}"))
                continue

            def build(t=t):
                src, tgt = m.charts[t["source"]], m.charts[t["target"]]
                name = t.get("name", f"{src.id}->{tgt.id}")
                f = ChartedMap(src, tgt, t["components"], _domain(t.get("domain")), name=name)
                if "inverse" in t:
                    g = ChartedMap(tgt, src, t["inverse"], _domain(t.get("inverse_domain")), name=name + "^-1")
                    f.inverse, g.inverse = g, f
                else:
                    g = None
                return Transition(src.id, tgt.id, f, g)

            tr = _guard(errors, path, build)
            if tr:
                transitions.append(tr)
        faces = {}
        for i, f in enumerate(raw.get("faces", [])):
            for j, (chart, coord) in enumerate(f["locals"]):
                if chart not in m.charts or coord not in m.charts[chart].boundary_coords:
                    errors.append(_err(f"faces/{i}/locals/{j}", f"{chart}.{coord} is not a boundary coordinate"))
            faces[f["id"]] = [tuple(l) for l in f["locals"]]
        used = {t.source for t in transitions} | {t.target for t in transitions}
        used |= {chart for locs in faces.values() for chart, _ in locs}
        if not errors and used:
            charts = [c for cid, c in m.charts.items() if cid in used]
            m.atlas = _guard(errors, "charts", lambda: Atlas(charts, transitions, faces, name=raw.get("name", "X")))
            if m.atlas is not None:
                _guard(errors, "faces", lambda: m.atlas.face_ids)
    for i, f in enumerate(raw.get("functions", [])):
        path = f"functions/{i}"
        if "chart" in f and f["chart"] not in m.charts:
            errors.append(_err(path, f"unknown chart {f['chart']}"))
            continue
        e = _guard(errors, path, lambda f=f: m.charts[f["chart"]].parse(f["expr"]) if "chart" in f
                   else parse(f["expr"], f.get("interior", ())))
        if isinstance(e, BExpr):
            m.functions[f["id"]] = e
    for i, s in enumerate(raw.get("maps", [])):
        path = f"maps/{i}"
        if s["source"] not in m.charts or s["target"] not in m.charts:
            errors.append(_err(path, f"unknown chart in {s['source']} -> {s['target']}"))
            continue
        f = _guard(errors, path, lambda s=s: ChartedMap(m.charts[s["source"]], m.charts[s["target"]],
                                                        s["components"], _domain(s.get("domain")), name=s["id"]))
        if f:
            m.maps[s["id"]] = f
            m.map_specs[s["id"]] = s
            for key, chart in (("pullback", f.target), ("pushforward", f.source)):
                for face in s.get(key, {}):
                    if face not in chart.boundary_coords:
                        errors.append(_err(f"{path}/{key}", f"{face} is not a boundary coordinate of {chart.id}"))
                _guard(errors, f"{path}/{key}", lambda: [parse_rational(v) for v in s.get(key, {}).values()])
            for j, S in enumerate(s.get("corners", [])):
                if not set(S) <= set(f.source.boundary_coords):
                    errors.append(_err(f"{path}/corners/{j}", f"{S} are not boundary coordinates of {f.source.id}"))
    for i, v in enumerate(raw.get("vector_fields", [])):
        path = f"vector_fields/{i}"
        if v["chart"] not in m.charts:
            errors.append(_err(path, f"unknown chart {v['chart']}"))
            continue
        vf = _guard(errors, path, lambda v=v: BVectorField.from_strings(m.charts[v["chart"]], v["coeffs"]))
        if vf:
            m.vector_fields[v["id"]] = vf
    for i, o in enumerate(raw.get("operators", [])):
        op = _guard(errors, f"operators/{i}", lambda o=o: BOperator1D.from_manifest(o))
        if op:
            m.operators[o["id"]] = op
            m.operator_specs[o["id"]] = o
    if "weights" in raw:
        m.weights = _guard(errors, "weights", lambda: {k: parse_rational(v) for k, v in raw["weights"].items()}) or {}
    if "index_sets" in raw:
        m.index_sets = _guard(errors, "index_sets",
                              lambda: {k: IndexSet.from_json(v) for k, v in raw["index_sets"].items()}) or {}
    m.cohomology = dict(raw.get("cohomology", {}))
