"""Density-dependent geometry: weighted mean curvature, potentials, boundary data."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..cone_density import HomogeneousDensity, SolidCone, VERTEX_RADIUS
from ..errors import OutsideCone, SingularMass, VertexSingular
from .base import DiscreteHypersurface, ScalarField


@dataclass
class BoundaryGeometry:
    points: np.ndarray
    normal: np.ndarray
    conormal: np.ndarray
    dl: np.ndarray
    f: np.ndarray
    free: np.ndarray
    ii_nn: np.ndarray
    cone_normal: np.ndarray
    grad_psi: np.ndarray

    @property
    def dl_f(self) -> np.ndarray:
        return self.dl * self.f

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass
class GeometryCache:
    """Per-sample extrinsic and weighted data of a surface under a density."""

    surface: DiscreteHypersurface
    density: HomogeneousDensity
    cone: SolidCone
    n: int
    k: float
    points: np.ndarray
    normal: np.ndarray
    H: np.ndarray
    sigma2: np.ndarray
    support: np.ndarray
    area: np.ndarray
    f: np.ndarray
    grad_psi: np.ndarray
    hess_psi: np.ndarray
    ric_nn: np.ndarray
    H_f: np.ndarray
    boundary: BoundaryGeometry
    h: float

    @property
    def weights(self) -> np.ndarray:
        """Quadrature weights of ``da_f``."""
        return self.area * self.f

    @property
    def potential(self) -> np.ndarray:
        """``Ric_f(N,N) + |sigma|^2``."""
        return self.ric_nn + self.sigma2


def geometry(surface: DiscreteHypersurface, density: HomogeneousDensity, cone: SolidCone,
             tol_inside: float = 1e-9) -> GeometryCache:
    """Fill the geometry cache (memoised per density/cone pair)."""
    key = (id(density), id(cone))
    hit = surface._geom_cache.get(key)
    if hit is not None and hit[0] is density and hit[1] is cone:
        return hit[2]
    sh = surface.shape()
    P = sh.points
    if not np.all(cone.contains(P, tol_inside)):
        raise OutsideCone("surface samples outside the cone")
    r = np.linalg.norm(P, axis=1)
    if np.any(r < VERTEX_RADIUS):
        raise VertexSingular("a sample sits on the vertex")
    J = density.jet(P, cone)
    if not np.all(np.isfinite(J.f_value)) or np.any(J.f_value <= 0):
        raise SingularMass("density weight is not finite and positive at every sample")
    N = sh.normal
    ric_nn = -np.einsum("si,sij,sj->s", N, J.hess_psi, N)
    H_f = surface.n * sh.H - (J.grad_psi * N).sum(1)
    bd = sh.boundary
    d = surface.ambient_dim
    if len(bd):
        Jb = density.jet(bd.points, cone)
        fb, gb = Jb.f_value, Jb.grad_psi
        ii = np.zeros(len(bd))
        cn = np.full((len(bd), d), np.nan)
        if cone.has_boundary and np.any(bd.free):
            idx = np.flatnonzero(bd.free)
            B = cone.boundary_ii(bd.points[idx])
            ii[idx] = np.einsum("si,sij,sj->s", bd.normal[idx], B, bd.normal[idx])
            cn[idx] = cone.inner_normal(bd.points[idx])
    else:
        fb = np.zeros(0)
        gb = np.zeros((0, d))
        ii = np.zeros(0)
        cn = np.zeros((0, d))
    bgeo = BoundaryGeometry(bd.points, bd.normal, bd.conormal, bd.dl, fb, bd.free, ii, cn, gb)
    geo = GeometryCache(
        surface=surface, density=density, cone=cone, n=surface.n, k=density.k,
        points=P, normal=N, H=sh.H, sigma2=sh.sigma2, support=(P * N).sum(1),
        area=sh.area_weights, f=J.f_value, grad_psi=J.grad_psi, hess_psi=J.hess_psi,
        ric_nn=ric_nn, H_f=H_f, boundary=bgeo, h=sh.h,
    )
    surface._geom_cache[key] = (density, cone, geo)
    return geo


def default_tol_stationary(surface: DiscreteHypersurface) -> float:
    if surface.backend == "parametric":
        return 1e-6
    return 10 * surface.shape().h ** 2


def support_function(surface: DiscreteHypersurface) -> ScalarField:
    """``g = <X, N>`` at every sample (and on the boundary)."""
    sh = surface.shape()
    bd = sh.boundary
    return ScalarField((sh.points * sh.normal).sum(1), (bd.points * bd.normal).sum(1))


def barbosa_test_field(surface: DiscreteHypersurface, density: HomogeneousDensity, cone: SolidCone,
                       tol_stationary: Optional[float] = None) -> ScalarField:
    """``u = n + k + H_f g``; uses the per-sample ``H_f`` with a warning when it is not constant."""
    geo = geometry(surface, density, cone)
    tol = default_tol_stationary(surface) if tol_stationary is None else tol_stationary
    mean = float(np.mean(geo.H_f))
    spread = float(np.std(geo.H_f))
    g = support_function(surface)
    warn = None
    if spread > tol * (1 + abs(mean)):
        warn = f"H_f is not constant (std {spread:.3e}); using per-sample values"
        warnings.warn(warn, RuntimeWarning, stacklevel=2)
        Hf = geo.H_f
        bd_vals = None
    else:
        Hf = mean
        bd_vals = geo.n + geo.k + mean * g.boundary
    u = geo.n + geo.k + Hf * g.values
    return ScalarField(u, bd_vals, warn, {"H_f_mean": mean, "H_f_std": spread})
