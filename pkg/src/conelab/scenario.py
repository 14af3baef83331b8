"""Scenario files: schema, defaults and object construction."""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from typing import Optional

import jsonschema

from .cone_density import (Circular, ExpressionProfile, FullSphere, HalfSpace, HomogeneousDensity, LinearPower,
                           Monomial, PerturbedRadial, PlanarSector, Radial, SolidCone)
from .errors import ConfigError
from .hypersurface import (load_obj, load_polyline_csv, make_cap, make_ellipsoid, make_off_center_sphere,
                           make_radial_graph, make_sphere_through_origin)

_num = {"type": "number"}
_vec = {"type": "array", "items": _num, "minItems": 2, "maxItems": 3}
_pos_int = {"type": "integer", "minimum": 1}

ANALYSIS_TYPES = ("certify_cd", "geometry", "minkowski", "spectrum", "variation", "cutoff_decay", "sweep")

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["ambient_dim", "cone", "density", "surface"],
    "properties": {
        "ambient_dim": {"type": "integer", "enum": [2, 3]},
        "cone": {
            "type": "object",
            "additionalProperties": False,
            "required": ["region"],
            "properties": {
                "region": {"enum": ["full", "half_space", "circular", "sector"]},
                "axis": _vec,
                "normal": _vec,
                "half_aperture": {"type": "number", "exclusiveMinimum": 0},
                "angle": {"type": "number", "exclusiveMinimum": 0},
                "start": _num,
            },
        },
        "density": {
            "type": "object",
            "additionalProperties": False,
            "required": ["family"],
            "properties": {
                "family": {"enum": ["radial", "monomial", "linear_power", "perturbed_radial", "expression"]},
                "k": _num,
                "c": {"type": "number", "exclusiveMinimum": 0},
                "exponents": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "xi": _vec,
                "power": _num,
                "amplitude": _num,
                "b": _vec,
                "S": {"type": "array", "items": _vec},
                "expression": {"type": "string"},
                "derivative_mode": {"enum": ["analytic", "finite_difference"]},
            },
        },
        "surface": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["cap", "sphere_through_origin", "graph", "ellipsoid", "sphere", "import"]},
                "radius": {"type": "number", "exclusiveMinimum": 0},
                "center": _vec,
                "semi_axes": _vec,
                "amplitude": _num,
                "b": _vec,
                "puncture": {"type": "number", "exclusiveMinimum": 0},
                "path": {"type": "string"},
                "grid": _pos_int,
                "backend": {"enum": ["parametric", "fem"]},
            },
        },
        "analyses": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["type"],
                "properties": {
                    "type": {"enum": list(ANALYSIS_TYPES)},
                    "mode": {"enum": ["all", "mean_zero", "both"]},
                    "count": _pos_int,
                    "kind": {"enum": ["normal", "dilation", "parallel", "rescaled_parallel"]},
                    "samples": _pos_int,
                    "eps": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 2},
                    "parameter": {"enum": ["k", "radius"]},
                    "values": {"type": "array", "items": _num, "minItems": 1},
                    "stability": {"type": "boolean"},
                    "expect": {"type": "object", "additionalProperties": {"type": "boolean"}},
                },
            },
        },
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "stationary": {"type": "number", "exclusiveMinimum": 0},
                "spectrum": {"type": "number", "exclusiveMinimum": 0},
                "minkowski": {"type": "number", "exclusiveMinimum": 0},
                "variation": {"type": "number", "exclusiveMinimum": 0},
                "certify": {"type": "number", "exclusiveMinimum": 0},
                "decay": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"report": {"type": "string"}, "directory": {"type": "string"}},
        },
        "seed": {"type": "integer"},
    },
}

DEFAULTS = {
    "surface": {"grid": 64, "backend": "parametric"},
    "analyses": [],
    "tolerances": {"certify": 1e-8, "variation": 0.01, "decay": 0.1},
    "output": {},
    "seed": 0,
}


def _fill(cfg: dict) -> dict:
    out = copy.deepcopy(cfg)
    for key, val in DEFAULTS.items():
        if isinstance(val, dict):
            merged = dict(val)
            merged.update(out.get(key, {}))
            out[key] = merged
        else:
            out.setdefault(key, copy.deepcopy(val))
    return out


@dataclass
class Scenario:
    data: dict

    @classmethod
    def from_dict(cls, cfg) -> "Scenario":
        try:
            jsonschema.validate(cfg, SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"invalid scenario at {where}: {exc.message}") from None
        return cls(_fill(cfg))

    @classmethod
    def from_text(cls, text: str) -> "Scenario":
        try:
            cfg = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        return cls.from_dict(cfg)

    @classmethod
    def load(cls, path) -> "Scenario":
        with open(path) as fh:
            return cls.from_text(fh.read())

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)

    def canonical(self) -> str:
        return json.dumps(self.data, sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def with_overrides(self, grid: Optional[int] = None, backend: Optional[str] = None,
                       tol: Optional[float] = None) -> "Scenario":
        d = self.to_dict()
        if grid is not None:
            d["surface"]["grid"] = int(grid)
        if backend is not None:
            d["surface"]["backend"] = backend
        if tol is not None:
            for key in ("stationary", "spectrum", "minkowski"):
                d["tolerances"][key] = float(tol)
        return Scenario.from_dict(d)

    # ------------------------------------------------------------ builders
    @property
    def ambient_dim(self) -> int:
        return int(self.data["ambient_dim"])

    def cone(self) -> SolidCone:
        c = self.data["cone"]
        d = self.ambient_dim
        region = c["region"]
        if region == "full":
            reg = FullSphere()
        elif region == "half_space":
            reg = HalfSpace(tuple(c.get("normal", [0.0] * (d - 1) + [1.0])))
        elif region == "circular":
            if d != 3:
                raise ConfigError("circular cones live in R^3")
            reg = Circular(tuple(c.get("axis", [0.0, 0.0, 1.0])), float(c["half_aperture"]))
        else:
            if d != 2:
                raise ConfigError("sectors live in R^2")
            reg = PlanarSector(float(c["angle"]), float(c.get("start", 0.0)))
        try:
            return SolidCone(d, reg)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def density(self, k: Optional[float] = None) -> HomogeneousDensity:
        c = self.data["density"]
        fam = c["family"]
        k = c.get("k") if k is None else k
        if fam == "radial":
            prof = Radial(float(c.get("c", 1.0)))
        elif fam == "monomial":
            prof = Monomial(tuple(c["exponents"]))
        elif fam == "linear_power":
            prof = LinearPower(tuple(c["xi"]), float(c["power"]))
        elif fam == "perturbed_radial":
            prof = PerturbedRadial(float(c.get("amplitude", 0.1)), c.get("b"), c.get("S"))
        else:
            if "expression" not in c:
                raise ConfigError("expression densities need an 'expression' string")
            prof = ExpressionProfile(c["expression"])
        try:
            return HomogeneousDensity(k, prof, c.get("derivative_mode", "analytic"))
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"density: {exc}") from None

    def surface(self, cone: Optional[SolidCone] = None, radius: Optional[float] = None):
        s = self.data["surface"]
        cone = self.cone() if cone is None else cone
        grid, backend = int(s["grid"]), s["backend"]
        kind = s["kind"]
        r = float(s.get("radius", 1.0)) if radius is None else radius
        if kind == "cap":
            return make_cap(cone, r, grid, backend)
        if kind == "sphere_through_origin":
            center = s.get("center")
            if center is None:
                center = list(cone.axis * r)
            return make_sphere_through_origin(cone, center, grid, s.get("puncture"), backend)
        if kind == "graph":
            return make_radial_graph(cone, r, s.get("amplitude", 0.1), s.get("b"), grid)
        if kind == "ellipsoid":
            return make_ellipsoid(s["center"], s["semi_axes"], grid, backend, cone)
        if kind == "sphere":
            return make_off_center_sphere(s["center"], r, grid, backend, cone)
        path = s.get("path")
        if path is None:
            raise ConfigError("import surfaces need a 'path'")
        if path.endswith(".obj"):
            return load_obj(path, cone)
        return load_polyline_csv(path, cone)
