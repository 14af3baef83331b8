"""Discretised hypersurfaces in a solid cone and their extrinsic geometry."""
from .base import BoundarySamples, DiscreteHypersurface, ScalarField, Shape
from .builders import (
    make_cap,
    make_ellipsoid,
    make_off_center_sphere,
    make_radial_graph,
    make_sphere_through_origin,
    restrict_band,
)
from .geometry import (
    BoundaryGeometry,
    GeometryCache,
    barbosa_test_field,
    default_tol_stationary,
    geometry,
    support_function,
)
from .io import load_obj, load_polyline_csv
from .parametric import ParametricSurface
from .simplicial import SimplicialSurface

__all__ = [
    "BoundaryGeometry", "BoundarySamples", "DiscreteHypersurface", "GeometryCache",
    "ParametricSurface", "ScalarField", "Shape", "SimplicialSurface", "barbosa_test_field",
    "default_tol_stationary", "geometry", "load_obj", "load_polyline_csv", "make_cap",
    "make_ellipsoid", "make_off_center_sphere", "make_radial_graph", "make_sphere_through_origin",
    "restrict_band", "support_function",
]
