"""JSON problem files and reports."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .envelope import StrutNet
from .equilibrium import BAL_TOL, EquilibriumError, ForceSystem
from .geometry import GeometryError, PlaneFunc, Segment
from .synthesis import Obstacle, SupportSegment, approximate_shape, discretize_supports

_PT = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

_SHAPES = {
    "polygon": {"vertices": {"type": "array", "items": _PT, "minItems": 3}},
    "circle": {"center": _PT, "radius": {"type": "number", "exclusiveMinimum": 0}},
    "ellipse": {
        "center": _PT,
        "semi_axes": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 2, "maxItems": 2},
        "angle": {"type": "number"},
    },
    "halfdisk": {"center": _PT, "radius": {"type": "number", "exclusiveMinimum": 0}, "angle": {"type": "number"}},
}

_REQUIRED = {"polygon": ["vertices"], "circle": ["center", "radius"], "ellipse": ["center", "semi_axes"], "halfdisk": ["center", "radius"]}


def _obstacle_schema(kind: str) -> dict:
    props = {"type": {"const": kind}, "sides": {"type": "integer", "minimum": 3}, "label": {"type": "string"}}
    props.update(_SHAPES[kind])
    return {
        "if": {"properties": {"type": {"const": kind}}},
        "then": {"properties": props, "required": ["type"] + _REQUIRED[kind], "additionalProperties": False},
    }


PROBLEM_SCHEMA: dict = {
    "type": "object",
    "properties": {
        "_comment": {"type": "string"},
        "points": {"type": "array", "items": _PT},
        "forces": {"type": "array", "items": {"anyOf": [_PT, {"type": "null"}]}},
        "reactive": {"type": "array", "items": {"type": "integer", "minimum": 0}, "uniqueItems": True},
        "supports": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {"a": _PT, "b": _PT, "count": {"type": "integer", "minimum": 2}},
                "required": ["a", "b", "count"],
                "additionalProperties": False,
            },
        },
        "obstacles": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {"type": {"enum": sorted(_SHAPES)}},
                "required": ["type"],
                "allOf": [_obstacle_schema(k) for k in sorted(_SHAPES)],
            },
        },
        "objective": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["total_weight", "cleave_height"]},
                "obstacle": {"type": "integer", "minimum": 0},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "tolerances": {
            "type": "object",
            "properties": {
                "bal": {"type": "number", "exclusiveMinimum": 0},
                "geom": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "net": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["complete", "explicit"]},
                "nodes": {"type": "array", "items": _PT},
                "struts": {
                    "type": "array",
                    "items": {
                        "type": "array",
                        "prefixItems": [{"type": "integer"}, {"type": "integer"}, {"type": "number", "minimum": 0}],
                        "minItems": 3,
                        "maxItems": 3,
                    },
                },
                "applied": {"type": "object", "additionalProperties": _PT},
            },
            "required": ["kind"],
        },
        "seed": {"type": "integer", "minimum": 1},
    },
    "required": ["points"],
    "additionalProperties": False,
}


class ProblemError(ValueError):
    """Malformed problem file; ``errors`` lists ``(json_path, message)`` pairs."""

    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = errors
        super().__init__("; ".join(f"{p}: {m}" for p, m in errors))


def _path(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


@dataclass
class Problem:
    raw: dict
    force_system: ForceSystem
    obstacles: list[Obstacle] = field(default_factory=list)
    objective: Any = "weight"
    bal_tol: float = BAL_TOL
    geom_tol: float | None = None
    seed: int | None = None

    @property
    def net_spec(self) -> dict | None:
        return self.raw.get("net")


def validate(doc: Any) -> list[tuple[str, str]]:
    """Schema and consistency errors, each tagged with its JSON path."""
    v = jsonschema.Draft202012Validator(PROBLEM_SCHEMA)
    errs = sorted(v.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    out = [(_path(e.absolute_path), e.message) for e in errs]
    if out or not isinstance(doc, dict):
        return out
    n = len(doc["points"])
    forces = doc.get("forces")
    reactive = set(doc.get("reactive", []))
    for k in sorted(reactive):
        if k >= n:
            out.append((_path(["reactive"]), f"index {k} out of range for {n} points"))
    if forces is None:
        if n and not doc.get("net"):
            out.append(("$", "'forces' is required"))
    elif len(forces) != n:
        out.append((_path(["forces"]), f"has {len(forces)} entries for {n} points"))
    else:
        for i, f in enumerate(forces):
            if f is None and i not in reactive:
                out.append((_path(["forces", i]), "missing force for a non-reactive point"))
    total = n + sum(s["count"] for s in doc.get("supports", []))
    if total < 3 and not doc.get("net"):
        out.append((_path(["points"]), "need at least 3 force points in total"))
    obj = doc.get("objective")
    if obj is not None:
        if obj["kind"] == "cleave_height":
            q = obj.get("obstacle")
            if q is None:
                out.append((_path(["objective"]), "'obstacle' is required for cleave_height"))
            elif q >= len(doc.get("obstacles", [])):
                out.append((_path(["objective", "obstacle"]), f"no obstacle {q}"))
    net = doc.get("net")
    if net is not None and net["kind"] == "explicit":
        nn = len(net.get("nodes", []))
        if "nodes" not in net or "struts" not in net:
            out.append((_path(["net"]), "explicit net needs 'nodes' and 'struts'"))
        for k, s in enumerate(net.get("struts", [])):
            if len(s) == 3 and not (0 <= s[0] < nn and 0 <= s[1] < nn):
                out.append((_path(["net", "struts", k]), "node index out of range"))
        for key in net.get("applied", {}):
            if not key.isdigit() or int(key) >= nn:
                out.append((_path(["net", "applied", key]), "node index out of range"))
    return out


def build_obstacle(spec: dict, index: int = 0) -> Obstacle:
    kind = spec["type"]
    label = spec.get("label", f"obstacle{index}")
    sides = spec.get("sides", 20)
    if kind == "polygon":
        return approximate_shape("polygon", vertices=spec["vertices"], label=label)
    if kind == "circle":
        return approximate_shape("circle", sides, spec["center"], spec["radius"], label=label)
    if kind == "ellipse":
        return approximate_shape(
            "ellipse", sides, spec["center"], semi_axes=spec["semi_axes"], angle=spec.get("angle", 0.0), label=label
        )
    return approximate_shape("half-disk", sides, spec["center"], spec["radius"], angle=spec.get("angle", 0.0), label=label)


def load_problem(src, bal_tol: float | None = None) -> Problem:
    """Problem from a path, JSON text or an already parsed dict."""
    if isinstance(src, dict):
        doc = src
    else:
        p = Path(src)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ProblemError([("$", f"cannot read {p}: {exc.strerror}")]) from exc
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ProblemError([("$", f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}")]) from exc
    errors = validate(doc)
    if errors:
        raise ProblemError(errors)
    tol = doc.get("tolerances", {})
    bt = bal_tol if bal_tol is not None else tol.get("bal", BAL_TOL)
    obstacles = []
    for k, spec in enumerate(doc.get("obstacles", [])):
        try:
            obstacles.append(build_obstacle(spec, k))
        except GeometryError as exc:
            raise ProblemError([(_path(["obstacles", k]), str(exc))]) from exc
    pts = doc["points"]
    forces = doc.get("forces") or [None] * len(pts)
    reactive = doc.get("reactive", [])
    try:
        if doc.get("supports"):
            items = []
            for i, (p, f) in enumerate(zip(pts, forces)):
                items.append((tuple(p), None if i in reactive else tuple(f)))
            sup = [SupportSegment(Segment(np.asarray(s["a"], float), np.asarray(s["b"], float)), s["count"]) for s in doc["supports"]]
            fs = discretize_supports(items, sup, bal_tol=bt)
        elif len(pts) >= 3:
            fs = ForceSystem(pts, forces, reactive, bal_tol=bt)
        else:
            fs = None
    except (GeometryError, EquilibriumError) as exc:
        if doc.get("net") is None:
            raise ProblemError([(_path(["points"]), str(exc))]) from exc
        # a general net may carry loads at interior points
        fs = None
    obj = doc.get("objective", {"kind": "total_weight"})
    objective = "weight" if obj["kind"] == "total_weight" else ("cleave", obj["obstacle"])
    return Problem(doc, fs, obstacles, objective, bt, tol.get("geom"), doc.get("seed"))


# ---------------------------------------------------------------------------
# reports


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if not math.isfinite(v):
            return None
        return 0.0 if v == 0 else v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, PlaneFunc):
        return obj.to_dict()
    if isinstance(obj, StrutNet):
        return obj.to_dict()
    return obj


def dumps_report(report: dict) -> str:
    """Deterministic JSON text (sorted keys, fixed layout)."""
    return json.dumps(_clean(report), indent=2, sort_keys=True) + "\n"


def write_report(report: dict, path) -> None:
    Path(path).write_text(dumps_report(report))


def net_from_report(report: dict) -> StrutNet | None:
    d = report.get("net")
    return None if d is None else StrutNet.from_dict(d)


def verify_report(report: dict) -> list[str]:
    """Re-check the invariants of a reported net; returns problems found."""
    problems = []
    net = net_from_report(report)
    if net is None:
        return problems
    bal = float(report.get("bal_tol", BAL_TOL))
    if net.n_struts and net.forces.min() < -bal:
        problems.append(f"negative strut force {net.forces.min():.3g}")
    res = net.max_residual()
    if res > bal * net.force_scale():
        problems.append(f"node residual {res:.3g}")
    return problems
