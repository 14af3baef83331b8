"""Weighted integrals over discretised hypersurfaces and the identities they satisfy.

All sums go through :func:`math.fsum` in sample order, so results do not
depend on thread counts or summation trees.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .cone_density import HomogeneousDensity, SolidCone
from .errors import CriticalDegree
from .hypersurface import DiscreteHypersurface, ScalarField, geometry, make_cap
from .hypersurface.geometry import default_tol_stationary

SWEEP_COLUMNS = ("parameter", "area", "volume", "H_f_mean", "H_f_std", "minkowski_residual", "identity_gap")


def fsum(values) -> float:
    return math.fsum(np.asarray(values, float).ravel())


def integrate(surface, density, cone, values) -> float:
    """``int_Sigma values da_f``."""
    geo = geometry(surface, density, cone)
    return fsum(geo.weights * surface.values_of(values))


def integrate_boundary(surface, density, cone, values, free_only: bool = False) -> float:
    """``int_{dSigma} values dl_f`` over boundary samples."""
    bd = geometry(surface, density, cone).boundary
    w = bd.dl_f if not free_only else bd.dl_f * bd.free
    return fsum(w * np.asarray(values, float))


def weighted_area(surface: DiscreteHypersurface, density: HomogeneousDensity, cone: SolidCone) -> float:
    return fsum(geometry(surface, density, cone).weights)


def weighted_boundary_length(surface, density, cone) -> float:
    return fsum(geometry(surface, density, cone).boundary.dl_f)


def _check_volume_degree(n: int, k: float) -> None:
    if abs(n + k + 1) < 1e-12:
        raise CriticalDegree(f"oriented volume is undefined at k = -(n+1) = {-(n + 1)}")


def oriented_volume(surface: DiscreteHypersurface, density: HomogeneousDensity, cone: SolidCone) -> float:
    """``-1/(n+k+1) int <X, N> da_f``; equals the enclosed weighted volume for inward ``N``."""
    geo = geometry(surface, density, cone)
    _check_volume_degree(geo.n, geo.k)
    return -fsum(geo.support * geo.weights) / (geo.n + geo.k + 1)


# ------------------------------------------------------------ divergences

def _field_values(field, P: np.ndarray) -> np.ndarray:
    V = np.asarray(field(P), float)
    return V.reshape(P.shape)


def euclidean_divergence(field: Callable, p, h: float = 1e-4) -> np.ndarray:
    """Fourth-order central-difference divergence of ``field`` at points ``p``."""
    P = np.atleast_2d(np.asarray(p, float))
    d = P.shape[1]
    out = np.zeros(P.shape[0])
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        vals = [_field_values(field, P + s * e)[:, i] for s in (-2, -1, 1, 2)]
        out += (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * h)
    return out


def f_divergence(density: HomogeneousDensity, field: Callable, p, cone: Optional[SolidCone] = None,
                 h: Optional[float] = None) -> np.ndarray:
    """``div X + <grad psi, X>`` at points ``p``.

    ``field`` maps an ``(m, d)`` array of points to an ``(m, d)`` array.  If it
    has a ``divergence`` attribute that callable is used instead of finite
    differences.
    """
    P = np.atleast_2d(np.asarray(p, float))
    if hasattr(field, "divergence"):
        div = np.asarray(field.divergence(P), float)
    else:
        step = h if h is not None else 1e-3 * float(np.linalg.norm(P, axis=1).min())
        div = euclidean_divergence(field, P, step)
    J = density.jet(P, cone)
    return div + (J.grad_psi * _field_values(field, P)).sum(1)


def surface_f_divergence(surface: DiscreteHypersurface, density: HomogeneousDensity, cone: SolidCone,
                         vectors) -> ScalarField:
    """``div_Sigma X + <grad psi, X>`` per sample; ``vectors`` is a callable or an ``(m, d)`` array."""
    geo = geometry(surface, density, cone)
    V = _field_values(vectors, geo.points) if callable(vectors) else np.asarray(vectors, float)
    return ScalarField(surface.divergence(V) + (geo.grad_psi * V).sum(1))


def f_laplacian(surface, density, cone, values) -> np.ndarray:
    """``Delta_Sigma u + <grad psi, grad_Sigma u>``."""
    geo = geometry(surface, density, cone)
    u = surface.values_of(values)
    return surface.laplacian(u) + (geo.grad_psi * surface.gradient(u)).sum(1)


@dataclass
class DivergenceCheck:
    lhs: float
    interior: float
    boundary: float
    residual: float


def surface_divergence_terms(surface, density, cone, field: Callable) -> DivergenceCheck:
    """Both sides of ``int div_f X da_f = -int H_f <X,N> da_f - int_{dSigma} <X,nu> dl_f``.

    ``nu`` is the inner conormal.
    """
    geo = geometry(surface, density, cone)
    V = _field_values(field, geo.points)
    div = surface.divergence(V) + (geo.grad_psi * V).sum(1)
    lhs = fsum(div * geo.weights)
    interior = -fsum(geo.H_f * (V * geo.normal).sum(1) * geo.weights)
    bd = geo.boundary
    if len(bd):
        Vb = _field_values(field, bd.points)
        boundary = -fsum((Vb * bd.conormal).sum(1) * bd.dl_f)
    else:
        boundary = 0.0
    return DivergenceCheck(lhs, interior, boundary, abs(lhs - interior - boundary))


def verify_surface_divergence_theorem(surface, density, cone, field: Callable) -> float:
    """Absolute residual of the weighted surface divergence theorem."""
    return surface_divergence_terms(surface, density, cone, field).residual


def integration_by_parts_residual(surface, density, cone, u1, u2) -> float:
    """Residual of ``int (u1 Lf u2 - u2 Lf u1) da_f = -int_{dSigma} (u1 du2/dnu - u2 du1/dnu) dl_f``.

    ``Lf`` is the weighted Laplacian and ``nu`` the inner conormal.
    """
    geo = geometry(surface, density, cone)
    a, b = surface.values_of(u1), surface.values_of(u2)
    lhs = fsum((a * f_laplacian(surface, density, cone, b) - b * f_laplacian(surface, density, cone, a))
               * geo.weights)
    bd = geo.boundary
    if len(bd):
        ta, tb = surface.boundary_trace(a), surface.boundary_trace(b)
        da, db = surface.boundary_normal_derivative(a), surface.boundary_normal_derivative(b)
        rhs = -fsum((ta * db - tb * da) * bd.dl_f)
    else:
        rhs = 0.0
    return abs(lhs - rhs)


# ------------------------------------------------------------ ambient shells

@dataclass
class ShellCheck:
    volume_integral: float
    boundary_integral: float
    residual: float


def shell_divergence_check(density: HomogeneousDensity, cone: SolidCone, field: Callable,
                           r1: float, r2: float, grid: int = 48, radial_nodes: int = 24) -> ShellCheck:
    """Ambient divergence theorem on ``{r1 <= |p| <= r2}`` inside the cone.

    ``int div_f X dv_f = -int <X, N> da_f`` with ``N`` the inner unit normal of
    the shell; the boundary consists of two caps and, for cones with a
    boundary, the lateral part of the cone boundary.
    """
    if not 0 < r1 < r2:
        raise ValueError("need 0 < r1 < r2")
    unit = make_cap(cone, 1.0, grid)
    sh = unit.shape()
    U, wU = sh.points, sh.area_weights
    n = cone.n
    x, w = np.polynomial.legendre.leggauss(radial_nodes)
    rho = 0.5 * (r2 - r1) * x + 0.5 * (r2 + r1)
    wr = 0.5 * (r2 - r1) * w
    vol_terms = []
    for rj, wj in zip(rho, wr):
        P = rj * U
        vals = f_divergence(density, field, P, cone) * density.value(P)
        vol_terms.append(vals * wU * wj * rj ** n)
    volume = fsum(np.concatenate(vol_terms))

    bterms = []
    for radius, sign in ((r1, 1.0), (r2, -1.0)):
        P = radius * U
        Nin = sign * U  # inner normal of the shell: outward on the inner cap, inward on the outer one
        bterms.append((_field_values(field, P) * Nin).sum(1) * density.value(P) * wU * radius ** n)
    bd = sh.boundary
    if cone.has_boundary and len(bd):
        ub, dl = bd.points[bd.free], bd.dl[bd.free]
        for rj, wj in zip(rho, wr):
            P = rj * ub
            Nin = cone.inner_normal(P)
            bterms.append((_field_values(field, P) * Nin).sum(1) * density.value(P) * dl * wj * rj ** (n - 1))
    boundary = -fsum(np.concatenate(bterms))
    return ShellCheck(volume, boundary, abs(volume - boundary))


# ------------------------------------------------------------ Minkowski

@dataclass
class MinkowskiReport:
    """Weighted Minkowski identities on one surface.

    ``oriented_volume``, ``identity_gap`` and ``relative_identity_gap`` are
    ``None`` at the critical degree ``k = -(n+1)``.
    """

    residual_integral: float
    area: float
    oriented_volume: Optional[float]
    identity_gap: Optional[float]
    relative_residual: float
    relative_identity_gap: Optional[float]
    H_f_mean: float
    H_f_std: float
    stationary: bool
    note: Optional[str] = None

    def to_dict(self) -> dict:
        return asdict(self)


def minkowski(surface: DiscreteHypersurface, density: HomogeneousDensity, cone: SolidCone,
              tol_stationary: Optional[float] = None) -> MinkowskiReport:
    geo = geometry(surface, density, cone)
    n, k = geo.n, geo.k
    tol = default_tol_stationary(surface) if tol_stationary is None else tol_stationary
    area = fsum(geo.weights)
    residual = fsum((n + k + geo.H_f * geo.support) * geo.weights)
    Hm, Hs = float(np.mean(geo.H_f)), float(np.std(geo.H_f))
    stationary = Hs <= tol * (1 + abs(Hm))
    note = None
    try:
        V = oriented_volume(surface, density, cone)
    except CriticalDegree:
        V = gap = rel_gap = None
        note = "k = -(n+1): volume identity undefined, only the integral identity is reported"
    else:
        gap = (n + k) * area - (n + k + 1) * Hm * V
        rel_gap = abs(gap) / abs(area)
    if abs(n + k) < 1e-12:
        note = "k = -n: a stationary surface must have H_f = 0"
    return MinkowskiReport(residual, area, V, gap, abs(residual) / abs(area), rel_gap, Hm, Hs,
                           bool(stationary), note)


# ------------------------------------------------------------ scaling

def scaling_exponents(surface, density, cone, ts: Sequence[float] = (0.5, 1.0, 2.0, 4.0)):
    """Log-log slopes of ``A_f`` and ``|V_f|`` under dilations ``p -> t p``."""
    lt, la, lv = [], [], []
    for t in ts:
        S = surface.dilate(t)
        lt.append(math.log(t))
        la.append(math.log(weighted_area(S, density, cone)))
        lv.append(math.log(abs(oriented_volume(S, density, cone))))
    area_slope = np.polyfit(lt, la, 1)[0]
    vol_slope = np.polyfit(lt, lv, 1)[0]
    return float(area_slope), float(vol_slope)


# ------------------------------------------------------------ sweeps

def sweep_row(parameter: float, surface, density, cone) -> dict:
    rep = minkowski(surface, density, cone)
    return {
        "parameter": parameter,
        "area": rep.area,
        "volume": rep.oriented_volume,
        "H_f_mean": rep.H_f_mean,
        "H_f_std": rep.H_f_std,
        "minkowski_residual": rep.residual_integral,
        "identity_gap": rep.identity_gap,
    }


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path, rows: Iterable[dict], columns: Sequence[str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in columns])


def write_sweep_csv(path, rows: Iterable[dict]) -> None:
    write_csv(path, rows, SWEEP_COLUMNS)
