"""Built-in scenarios and the JSON scenario format.

A scenario document (``schema_version`` 1) holds expressions, not code::

    {
      "schema_version": 1,
      "name": "jacobi-arctan",
      "dims": {"ambient": 2, "base": 1},
      "variables": {"q": ["a", "b"], "qdot": ["adot", "bdot"], "x": ["x"], ...},
      "lagrangian": "(2 - arctan(b/a))*(adot**2 + bdot**2)",
      "scaling": {"psi": [...], "f": "...", "pi": [...], "triv_inv": [...], "generator": [...]},
      "reduced": "...",          # optional, directly specified ell(x, xdot, y)
      "herglotz": "...",         # optional, Lhat(x, xdot, y)
      "abelian": {"group": "additive", "psi": [...]},   # optional, psi(g, q)
      "initial": {"q": [...], "qdot": [...]} or {"x": [...], "xdot": [...], "y": ...},
      "integrator": {"steps": 2000, "horizon": 2.0},
      "sampling_box": {"lower": [...], "upper": [...], "count": 64, "seed": 0}
    }

Expressions are infix strings or JSON trees (see :mod:`homlag.expressions`).
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import jsonschema

from homlag import expressions as ex
from homlag.dynamics import HerglotzLagrangian, IntegratorConfig
from homlag.errors import DimensionError, ScenarioError
from homlag.reduction import ReducedLagrangian, reduce_lagrangian
from homlag.systems import LagrangianSystem, SamplingBox, ScalingSystem

SCHEMA_VERSION = 1

_EXPR = {"type": ["string", "number", "object"]}
_EXPR_LIST = {"type": "array", "items": _EXPR, "minItems": 1}
_NUM_LIST = {"type": "array", "items": {"type": "number"}}
_NAMES = {"type": "array", "items": {"type": "string"}}

SCHEMA = {
    "type": "object",
    "required": ["schema_version", "name", "dims", "integrator", "sampling_box"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string", "minLength": 1},
        "doc": {"type": "string"},
        "dims": {
            "type": "object",
            "required": ["ambient", "base"],
            "properties": {
                "ambient": {"type": "integer", "minimum": 1},
                "base": {"type": "integer", "minimum": 0},
            },
        },
        "variables": {
            "type": "object",
            "properties": {
                "q": _NAMES, "qdot": _NAMES, "x": _NAMES, "xdot": _NAMES,
                "y": {"type": "string"}, "s": {"type": "string"},
                "sigma": {"type": "string"}, "g": {"type": "string"},
            },
            "additionalProperties": False,
        },
        "lagrangian": _EXPR,
        "scaling": {
            "type": "object",
            "required": ["psi", "f", "pi", "triv_inv"],
            "properties": {
                "psi": _EXPR_LIST,
                "f": _EXPR,
                "pi": _EXPR_LIST,
                "triv_inv": _EXPR_LIST,
                "generator": _EXPR_LIST,
            },
            "additionalProperties": False,
        },
        "reduced": _EXPR,
        "herglotz": _EXPR,
        "abelian": {
            "type": "object",
            "required": ["group", "psi"],
            "properties": {
                "group": {"enum": ["additive", "multiplicative"]},
                "psi": _EXPR_LIST,
            },
        },
        "initial": {
            "type": "object",
            "properties": {
                "q": _NUM_LIST, "qdot": _NUM_LIST, "x": _NUM_LIST, "xdot": _NUM_LIST,
                "y": {"type": "number"},
            },
            "additionalProperties": False,
        },
        "integrator": {
            "type": "object",
            "required": ["steps", "horizon"],
            "properties": {
                "steps": {"type": "integer", "minimum": 1},
                "horizon": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "sampling_box": {
            "type": "object",
            "required": ["lower", "upper"],
            "properties": {
                "lower": _NUM_LIST, "upper": _NUM_LIST,
                "count": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer"},
                "speed": {"type": "number", "exclusiveMinimum": 0},
            },
        },
    },
}


@dataclass(frozen=True)
class Scenario:
    name: str
    doc: str
    document: dict = field(repr=False, compare=False)
    integrator: IntegratorConfig
    box: SamplingBox
    initial: dict
    lagrangian: Optional[LagrangianSystem] = None
    scaling: Optional[ScalingSystem] = None
    reduced_specified: Optional[ReducedLagrangian] = None
    herglotz: Optional[HerglotzLagrangian] = None
    abelian_group: Optional[str] = None
    abelian_psi: Optional[object] = None

    @property
    def reduced(self) -> Optional[ReducedLagrangian]:
        """Directly specified ``ell`` if present, otherwise derived from ``L`` and the scaling."""
        if self.reduced_specified is not None:
            return self.reduced_specified
        if self.lagrangian is not None and self.scaling is not None:
            return reduce_lagrangian(self.lagrangian, self.scaling)
        return None

    @property
    def base_dim(self) -> int:
        return self.document["dims"]["base"]

    def to_dict(self) -> dict:
        return copy.deepcopy(self.document)


def _variables(doc: dict) -> dict:
    n, k = doc["dims"]["ambient"], doc["dims"]["base"]
    given = doc.get("variables", {})
    q = given.get("q", [f"q{i + 1}" for i in range(n)])
    x = given.get("x", ["x"] if k == 1 else [f"x{i + 1}" for i in range(k)])
    names = {
        "q": q,
        "qdot": given.get("qdot", [f"{v}dot" for v in q]),
        "x": x,
        "xdot": given.get("xdot", [f"{v}dot" for v in x]),
        "y": given.get("y", "y"),
        "s": given.get("s", "s"),
        "sigma": given.get("sigma", "sigma"),
        "g": given.get("g", "g"),
    }
    if len(names["q"]) != n or len(names["qdot"]) != n:
        raise ScenarioError(f"expected {n} configuration variable names", "/variables")
    if len(names["x"]) != k or len(names["xdot"]) != k:
        raise ScenarioError(f"expected {k} base variable names", "/variables")
    return names


def _exprs(items, path):
    return [ex.parse(item, f"{path}/{i}") for i, item in enumerate(items)]


def _expect_len(items, want, path):
    if len(items) != want:
        raise ScenarioError(f"expected {want} component(s), got {len(items)}", path)


def from_dict(doc: dict) -> Scenario:
    """Validate and compile a scenario document."""
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/" + "/".join(str(p) for p in exc.absolute_path)
        raise ScenarioError(exc.message, path) from None
    doc = copy.deepcopy(doc)
    n, k = doc["dims"]["ambient"], doc["dims"]["base"]
    names = _variables(doc)
    state = [*names["q"], *names["qdot"]]
    reduced_vars = [*names["x"], *names["xdot"], names["y"]]

    lagrangian = None
    if "lagrangian" in doc:
        lagrangian = LagrangianSystem(
            n, ex.compile_field(ex.parse(doc["lagrangian"], "/lagrangian"), state, "L", "/lagrangian")
        )

    scaling = None
    if "scaling" in doc:
        sc = doc["scaling"]
        if k != n - 1:
            raise ScenarioError("a scaling structure needs base = ambient - 1", "/dims")
        for key, want in (("psi", n), ("pi", k), ("triv_inv", n), ("generator", n)):
            if key in sc:
                _expect_len(sc[key], want, f"/scaling/{key}")
        try:
            scaling = ScalingSystem(
                n,
                k,
                ex.compile_map(_exprs(sc["psi"], "/scaling/psi"), [names["s"], *names["q"]], "psi", "/scaling/psi"),
                ex.compile_field(ex.parse(sc["f"], "/scaling/f"), names["q"], "f", "/scaling/f"),
                ex.compile_map(_exprs(sc["pi"], "/scaling/pi"), names["q"], "pi", "/scaling/pi"),
                ex.compile_map(
                    _exprs(sc["triv_inv"], "/scaling/triv_inv"),
                    [*names["x"], names["sigma"]],
                    "triv_inv",
                    "/scaling/triv_inv",
                ),
                ex.compile_map(_exprs(sc["generator"], "/scaling/generator"), names["q"], "generator", "/scaling/generator")
                if "generator" in sc
                else None,
            )
        except DimensionError as exc:
            raise ScenarioError(str(exc), "/scaling") from None

    reduced = None
    if "reduced" in doc:
        reduced = ReducedLagrangian(
            k, ex.compile_field(ex.parse(doc["reduced"], "/reduced"), reduced_vars, "ell", "/reduced")
        )
    herglotz = None
    if "herglotz" in doc:
        herglotz = HerglotzLagrangian(
            k, ex.compile_field(ex.parse(doc["herglotz"], "/herglotz"), reduced_vars, "Lhat", "/herglotz")
        )
    abelian_group = abelian_psi = None
    if "abelian" in doc:
        ab = doc["abelian"]
        _expect_len(ab["psi"], n, "/abelian/psi")
        abelian_group = ab["group"]
        abelian_psi = ex.compile_map(_exprs(ab["psi"], "/abelian/psi"), [names["g"], *names["q"]], "psi_abelian", "/abelian/psi")

    if lagrangian is None and reduced is None and herglotz is None:
        raise ScenarioError("scenario defines none of lagrangian, reduced, herglotz", "/")

    initial = doc.get("initial", {})
    for key, want in (("q", n), ("qdot", n), ("x", k), ("xdot", k)):
        if key in initial:
            _expect_len(initial[key], want, f"/initial/{key}")

    box_doc = doc["sampling_box"]
    box_dim = n if (scaling is not None or lagrangian is not None) else k
    if len(box_doc["lower"]) != box_dim or len(box_doc["upper"]) != box_dim:
        raise ScenarioError(f"sampling box must have dimension {box_dim}", "/sampling_box")
    try:
        box = SamplingBox(
            tuple(box_doc["lower"]),
            tuple(box_doc["upper"]),
            box_doc.get("count", 64),
            box_doc.get("seed", 0),
            box_doc.get("speed", 1.0),
        )
    except ValueError as exc:
        raise ScenarioError(str(exc), "/sampling_box") from None

    integ = doc["integrator"]
    return Scenario(
        name=doc["name"],
        doc=doc.get("doc", ""),
        document=doc,
        integrator=IntegratorConfig(int(integ["steps"]), float(integ["horizon"])),
        box=box,
        initial=initial,
        lagrangian=lagrangian,
        scaling=scaling,
        reduced_specified=reduced,
        herglotz=herglotz,
        abelian_group=abelian_group,
        abelian_psi=abelian_psi,
    )


def load(path) -> Scenario:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ScenarioError(f"no such scenario file {str(path)!r}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc.msg} (line {exc.lineno})", str(path)) from None
    return from_dict(doc)


def dumps(scenario: Scenario) -> str:
    return json.dumps(scenario.to_dict(), indent=2, sort_keys=True)


def save(scenario: Scenario, path) -> None:
    Path(path).write_text(dumps(scenario) + "\n")


_RADIAL_PSI = ["sqrt(s)*q1", "sqrt(s)*q2"]
_ANGLE_PI = ["arctan2(q2, q1)"]

BUILTIN_DOCS = {
    "jacobi-arctan": {
        "doc": "Jacobi-metric example on R+ x R+ with V = arctan(b/a) and e = 2 (> pi/2); "
        "scaling function f = (a^2 + b^2)/2, quotient chart x = arctan(b/a).",
        "dims": {"ambient": 2, "base": 1},
        "variables": {"q": ["a", "b"], "qdot": ["adot", "bdot"]},
        "lagrangian": "(2 - arctan(b/a))*(adot**2 + bdot**2)",
        "scaling": {
            "psi": ["sqrt(s)*a", "sqrt(s)*b"],
            "f": "0.5*(a**2 + b**2)",
            "pi": ["arctan(b/a)"],
            "triv_inv": ["sqrt(2*sigma)*cos(x)", "sqrt(2*sigma)*sin(x)"],
            "generator": ["0.5*a", "0.5*b"],
        },
        "initial": {"q": [1.0, 1.0], "qdot": [0.1, -0.2]},
        "integrator": {"steps": 2000, "horizon": 2.0},
        "sampling_box": {"lower": [0.5, 0.5], "upper": [2.0, 2.0], "count": 64, "seed": 7},
    },
    "jacobi-arctan-unhalved": {
        "doc": "jacobi-arctan with the scaling function f = a^2 + b^2; the reduced Lagrangian "
        "is then (e - x)(xdot^2 + (y/2)^2), half of the canonical variant.",
        "dims": {"ambient": 2, "base": 1},
        "variables": {"q": ["a", "b"], "qdot": ["adot", "bdot"]},
        "lagrangian": "(2 - arctan(b/a))*(adot**2 + bdot**2)",
        "scaling": {
            "psi": ["sqrt(s)*a", "sqrt(s)*b"],
            "f": "a**2 + b**2",
            "pi": ["arctan(b/a)"],
            "triv_inv": ["sqrt(sigma)*cos(x)", "sqrt(sigma)*sin(x)"],
            "generator": ["0.5*a", "0.5*b"],
        },
        "initial": {"q": [1.0, 1.0], "qdot": [0.1, -0.2]},
        "integrator": {"steps": 2000, "horizon": 2.0},
        "sampling_box": {"lower": [0.5, 0.5], "upper": [2.0, 2.0], "count": 64, "seed": 7},
    },
    "harmonic-oscillator": {
        "doc": "Planar isotropic oscillator, M = k = 1, with psi(s, q) = sqrt(s) q, f = |q|^2 "
        "and the angle chart on the circle.",
        "dims": {"ambient": 2, "base": 1},
        "lagrangian": "0.5*(q1dot**2 + q2dot**2) - 0.5*(q1**2 + q2**2)",
        "scaling": {
            "psi": _RADIAL_PSI,
            "f": "q1**2 + q2**2",
            "pi": _ANGLE_PI,
            "triv_inv": ["sqrt(sigma)*cos(x)", "sqrt(sigma)*sin(x)"],
            "generator": ["0.5*q1", "0.5*q2"],
        },
        "initial": {"q": [1.0, 0.2], "qdot": [0.1, 0.6]},
        "integrator": {"steps": 2000, "horizon": 2.0},
        "sampling_box": {"lower": [0.3, -1.5], "upper": [2.0, 1.5], "count": 64, "seed": 11},
    },
    "linear-counterexample": {
        "doc": "Degenerate homogeneous Lagrangian L = 2k<q, qdot> with k = 1; its reduced "
        "Lagrangian is k*y and every reduced curve solves the scaling equations.  "
        "Carries Lhat = 0 for the Herglotz comparison.",
        "dims": {"ambient": 2, "base": 1},
        "lagrangian": "2*(q1*q1dot + q2*q2dot)",
        "scaling": {
            "psi": _RADIAL_PSI,
            "f": "q1**2 + q2**2",
            "pi": _ANGLE_PI,
            "triv_inv": ["sqrt(sigma)*cos(x)", "sqrt(sigma)*sin(x)"],
            "generator": ["0.5*q1", "0.5*q2"],
        },
        "herglotz": "0",
        "initial": {"q": [1.0, 0.2], "qdot": [0.1, 0.6]},
        "integrator": {"steps": 2000, "horizon": 2.0},
        "sampling_box": {"lower": [0.3, -1.5], "upper": [2.0, 1.5], "count": 64, "seed": 11},
    },
    "herglotz-zero": {
        "doc": "Action-dependent Lagrangian Lhat = 0 on the circle (angle chart); its solutions "
        "are exactly the curves (x(t), y0).",
        "dims": {"ambient": 2, "base": 1},
        "herglotz": "0",
        "initial": {"x": [0.3], "xdot": [0.5], "y": 0.2},
        "integrator": {"steps": 2000, "horizon": 2.0},
        "sampling_box": {"lower": [-3.0], "upper": [3.0], "count": 32, "seed": 3},
    },
    "kinetic-geodesic": {
        "doc": "Kinetic Lagrangian g(v, v) of the constant metric [[2, 0.5], [0.5, 1]] on "
        "R^2 - {0}; f(q) = g(D_q, D_q) with generator D_q = q/2.",
        "dims": {"ambient": 2, "base": 1},
        "lagrangian": "2*q1dot**2 + q1dot*q2dot + q2dot**2",
        "scaling": {
            "psi": _RADIAL_PSI,
            "f": "0.25*(2*q1**2 + q1*q2 + q2**2)",
            "pi": _ANGLE_PI,
            "triv_inv": [
                "2*sqrt(sigma/(2*cos(x)**2 + cos(x)*sin(x) + sin(x)**2))*cos(x)",
                "2*sqrt(sigma/(2*cos(x)**2 + cos(x)*sin(x) + sin(x)**2))*sin(x)",
            ],
            "generator": ["0.5*q1", "0.5*q2"],
        },
        "initial": {"q": [1.0, 0.5], "qdot": [-0.2, 0.4]},
        "integrator": {"steps": 2000, "horizon": 2.0},
        "sampling_box": {"lower": [0.3, -1.5], "upper": [2.0, 1.5], "count": 64, "seed": 5},
    },
    "abelian-translation": {
        "doc": "Translation-invariant system on R^2 = {(x, th)}: the group (R, +) shifts th, "
        "the connection is d(th), and ell(x, xdot, y) is L with thdot replaced by y.",
        "dims": {"ambient": 2, "base": 1},
        "variables": {"q": ["x", "th"], "qdot": ["xdot", "thdot"]},
        "lagrangian": "0.5*xdot**2 + 0.5*(1 + 0.5*x**2)*thdot**2 + 0.3*xdot*thdot - 0.5*x**2",
        "reduced": "0.5*xdot**2 + 0.5*(1 + 0.5*x**2)*y**2 + 0.3*xdot*y - 0.5*x**2",
        "abelian": {"group": "additive", "psi": ["x", "th + g"]},
        "initial": {"x": [0.5], "xdot": [0.0], "y": 0.8},
        "integrator": {"steps": 5000, "horizon": 10.0},
        "sampling_box": {"lower": [-1.0, -1.0], "upper": [1.0, 1.0], "count": 32, "seed": 1},
    },
}


def _builtin_document(name: str) -> dict:
    return {"schema_version": SCHEMA_VERSION, "name": name, **copy.deepcopy(BUILTIN_DOCS[name])}


_CACHE: dict = {}


def builtin_names() -> list:
    return sorted(BUILTIN_DOCS)


def builtin(name: str) -> Scenario:
    if name not in BUILTIN_DOCS:
        raise ScenarioError(f"unknown scenario {name!r}; registered: {', '.join(builtin_names())}")
    if name not in _CACHE:
        _CACHE[name] = from_dict(_builtin_document(name))
    return _CACHE[name]


def resolve(ref: str) -> Scenario:
    """A registered name, or a path to a scenario JSON file."""
    if ref in BUILTIN_DOCS:
        return builtin(ref)
    if ref.endswith(".json") or Path(ref).exists():
        return load(ref)
    return builtin(ref)
