"""Constructors for the test surfaces used throughout the package."""
from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from ..cone_density import SolidCone, orthonormal_frame
from ..errors import HypothesisViolated, OutsideCone
from ..spectral import ChebyshevAxis, FourierAxis, PolarAxis
from .parametric import ParametricSurface
from .simplicial import SimplicialSurface


def _orient(surface, inward_to: Optional[np.ndarray] = None, outward_from=None):
    """Flip ``surface`` so that its normal points towards ``inward_to`` (a point)."""
    sh = surface.shape()
    P, N = sh.points, sh.normal
    target = (np.asarray(inward_to, float) - P) if inward_to is not None else -P
    if float(np.median((N * target).sum(-1))) < 0:
        surface = surface.flipped()
    return surface


def _check_inside(surface, cone: SolidCone, tol: float = 1e-9):
    if not np.all(cone.contains(surface.positions, tol)):
        raise OutsideCone("surface leaves the cone")


# ------------------------------------------------------------ meshes

def _disk_mesh(rings: int):
    """Concentric hexagonal rings on the unit disk: radii (0..1), angles, triangles."""
    rho = [0.0]
    ang = [0.0]
    start = [0]
    count = [1]
    for i in range(1, rings + 1):
        m = 6 * i
        start.append(len(rho))
        count.append(m)
        rho.extend([i / rings] * m)
        ang.extend(2 * math.pi * np.arange(m) / m)
    tris = []
    for i in range(1, rings + 1):
        o0, m1 = start[i], count[i]
        if i == 1:
            for b in range(m1):
                tris.append((0, o0 + b, o0 + (b + 1) % m1))
            continue
        i0, m0 = start[i - 1], count[i - 1]
        a = b = 0
        while a < m0 or b < m1:
            next_outer = 2 * math.pi * (b + 1) / m1
            next_inner = 2 * math.pi * (a + 1) / m0
            if b < m1 and (a >= m0 or next_outer <= next_inner + 1e-12):
                tris.append((i0 + a % m0, o0 + b, o0 + (b + 1) % m1))
                b += 1
            else:
                tris.append((i0 + a % m0, o0 + b % m1, i0 + (a + 1) % m0))
                a += 1
    return np.array(rho), np.array(ang), np.array(tris, dtype=np.int64)


def _icosphere(level: int):
    t = (1 + 5**0.5) / 2
    V = np.array([[-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0], [0, -1, t], [0, 1, t],
                  [0, -1, -t], [0, 1, -t], [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1]], float)
    F = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4),
         (11, 10, 2), (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8),
         (3, 8, 9), (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    V = list(V / np.linalg.norm(V, axis=1, keepdims=True))
    for _ in range(level):
        mid = {}
        newF = []

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in mid:
                p = V[i] + V[j]
                V.append(p / np.linalg.norm(p))
                mid[key] = len(V) - 1
            return mid[key]

        for a, b, c in F:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            newF += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        F = newF
    return np.array(V), np.array(F, dtype=np.int64)


def _polyline(points: np.ndarray, closed: bool):
    m = len(points)
    idx = np.arange(m)
    if closed:
        E = np.stack([idx, (idx + 1) % m], 1)
    else:
        E = np.stack([idx[:-1], idx[1:]], 1)
    return E


# ------------------------------------------------------------ caps

def make_cap(cone: SolidCone, r: float, grid: int = 64, backend: str = "parametric"):
    """Intersection of the sphere ``|p| = r`` with the cone, normal ``-p/r``.

    :param grid: samples per parameter direction (parametric) or rings /
        vertices (simplicial)
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    d = cone.ambient_dim
    beta = cone.half_width
    if backend == "parametric":
        if d == 2:
            if cone.is_full:
                axes = [FourierAxis(grid)]
                ends = {}
            else:
                axes = [ChebyshevAxis(grid, -beta, beta)]
                ends = {(0, -1): "free", (0, 1): "free"}
            chart = lambda t: r * cone.unit(t)
        else:
            if cone.is_full:
                axes = [ChebyshevAxis(grid, 0.0, beta), FourierAxis(grid)]
                ends = {(0, -1): "pole", (0, 1): "pole"}
            else:
                # polar axis keeps the first ring away from the chart pole
                axes = [PolarAxis(grid, beta), FourierAxis(grid)]
                ends = {(0, 1): "free"}
            chart = lambda t, p: r * cone.unit(t, p)
        X = chart(*np.meshgrid(*[a.nodes for a in axes], indexing="ij"))
        surf = ParametricSurface(axes, X, ends, 1, chart)
    elif backend in ("simplicial", "fem"):
        if d == 2:
            if cone.is_full:
                t = 2 * math.pi * np.arange(grid) / grid
                surf = SimplicialSurface(r * cone.unit(t), _polyline(t, True), 1, cone)
            else:
                t = np.linspace(-beta, beta, grid)
                surf = SimplicialSurface(r * cone.unit(t), _polyline(t, False), 1, cone)
        else:
            if cone.is_full:
                level = max(1, int(round(math.log2(max(grid, 2) / 2.5))))
                V, F = _icosphere(level)
                surf = SimplicialSurface(r * V, F, 1, cone)
            else:
                rho, ang, F = _disk_mesh(max(grid, 2))
                surf = SimplicialSurface(r * cone.unit(beta * rho, ang), F, 1, cone)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    surf = _orient(surf)
    surf.meta.update(kind="cap", radius=float(r))
    return surf


def make_sphere_through_origin(cone: SolidCone, center: Sequence[float], grid: int = 64,
                               puncture: Optional[float] = None, backend: str = "parametric"):
    """Round sphere of radius ``|center|`` through the vertex, minus a small neighbourhood of it.

    :param puncture: chord radius of the excluded vertex neighbourhood,
        default ``1e-3 * r``
    """
    c = np.asarray(center, float)
    d = c.size
    if d != cone.ambient_dim:
        raise ValueError("center dimension does not match the cone")
    r = float(np.linalg.norm(c))
    eps = 1e-3 * r if puncture is None else float(puncture)
    tp = 2 * math.asin(eps / (2 * r))
    F = orthonormal_frame(c)
    a = F[0]
    if backend == "parametric":
        if d == 2:
            axes = [ChebyshevAxis(grid, tp, 2 * math.pi - tp)]
            ends = {(0, -1): "puncture", (0, 1): "puncture"}
            chart = lambda t: c - r * (np.cos(t)[..., None] * a - np.sin(t)[..., None] * F[1])
        else:
            axes = [ChebyshevAxis(grid, tp, math.pi), FourierAxis(grid)]
            ends = {(0, -1): "puncture", (0, 1): "pole"}

            def chart(t, p):
                w = np.cos(p)[..., None] * F[1] + np.sin(p)[..., None] * F[2]
                return c - r * (np.cos(t)[..., None] * a - np.sin(t)[..., None] * w)
        X = chart(*np.meshgrid(*[ax.nodes for ax in axes], indexing="ij"))
        surf = ParametricSurface(axes, X, ends, 1, chart)
    elif backend in ("simplicial", "fem"):
        if d == 2:
            t = np.linspace(tp, 2 * math.pi - tp, grid)
            P = c - r * (np.cos(t)[:, None] * a - np.sin(t)[:, None] * F[1])
            surf = SimplicialSurface(P, _polyline(t, False), 1, None)
        else:
            rho, ang, T = _disk_mesh(max(grid, 2))
            th = math.pi - (math.pi - tp) * rho
            w = np.cos(ang)[:, None] * F[1] + np.sin(ang)[:, None] * F[2]
            P = c - r * (np.cos(th)[:, None] * a - np.sin(th)[:, None] * w)
            surf = SimplicialSurface(P, T, 1, None)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    _check_inside(surf, cone)
    surf = _orient(surf, inward_to=c)
    surf.meta.update(kind="sphere_through_origin", radius=r, center=c.tolist(), puncture=eps)
    return surf


def make_ellipsoid(center: Sequence[float], semi_axes: Sequence[float], grid: int = 64,
                   backend: str = "parametric", cone: Optional[SolidCone] = None):
    """Closed ellipse (R^2) or ellipsoid (R^3) with inward normal."""
    c = np.asarray(center, float)
    s = np.asarray(semi_axes, float)
    d = c.size
    if backend == "parametric":
        if d == 2:
            axes = [FourierAxis(grid)]
            chart = lambda t: c + np.stack([s[0] * np.cos(t), s[1] * np.sin(t)], -1)
            ends = {}
        else:
            axes = [ChebyshevAxis(grid, 0.0, math.pi), FourierAxis(grid)]
            ends = {(0, -1): "pole", (0, 1): "pole"}
            chart = lambda t, p: c + np.stack(
                [s[0] * np.sin(t) * np.cos(p), s[1] * np.sin(t) * np.sin(p), s[2] * np.cos(t)], -1)
        X = chart(*np.meshgrid(*[ax.nodes for ax in axes], indexing="ij"))
        surf = ParametricSurface(axes, X, ends, 1, chart)
    elif backend in ("simplicial", "fem"):
        if d == 2:
            t = 2 * math.pi * np.arange(grid) / grid
            P = c + np.stack([s[0] * np.cos(t), s[1] * np.sin(t)], -1)
            surf = SimplicialSurface(P, _polyline(t, True), 1, cone)
        else:
            level = max(1, int(round(math.log2(max(grid, 2) / 2.5))))
            V, F = _icosphere(level)
            surf = SimplicialSurface(c + V * s, F, 1, cone)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    if cone is not None:
        _check_inside(surf, cone)
    surf = _orient(surf, inward_to=c)
    surf.meta.update(kind="ellipsoid", center=c.tolist(), semi_axes=s.tolist())
    return surf


def make_off_center_sphere(center: Sequence[float], radius: float, grid: int = 64,
                           backend: str = "parametric", cone: Optional[SolidCone] = None):
    d = len(center)
    surf = make_ellipsoid(center, [radius] * d, grid, backend, cone)
    surf.meta.update(kind="sphere", radius=float(radius))
    return surf


def make_radial_graph(cone: SolidCone, r: float, amplitude: float = 0.1,
                      b: Optional[Sequence[float]] = None, grid: int = 64):
    """Radial graph ``rho(u) u`` over the region meeting the cone boundary orthogonally.

    ``rho(u) = r exp(a (c - cos beta)^2 (1 + <b, u>))`` with ``c = <u, axis>``,
    so the radial derivative of ``rho`` vanishes on the region boundary.
    """
    d = cone.ambient_dim
    bvec = np.zeros(d) if b is None else np.asarray(b, float)
    cb = math.cos(cone.half_width)

    def rho(u):
        cc = u @ cone.axis
        return r * np.exp(amplitude * (cc - cb) ** 2 * (1 + u @ bvec))

    base = make_cap(cone, 1.0, grid, "parametric")
    inner = base.chart

    def chart(*params):
        u = inner(*params)
        return rho(u)[..., None] * u

    X = chart(*base.params())
    surf = ParametricSurface(base.axes, X, base.ends, 1, chart)
    surf = _orient(surf)
    surf.meta.update(kind="radial_graph", radius=float(r), amplitude=float(amplitude))
    return surf


def restrict_band(surface: ParametricSurface, r_min: float, r_max: float, grid: Optional[int] = None):
    """Part of a chart surface with ``r_min <= |p| <= r_max``.

    The distance to the vertex must be monotone along the first parameter and
    independent of the others (true for spheres through the vertex and caps
    of rotational graphs).
    """
    if getattr(surface, "chart", None) is None:
        raise HypothesisViolated("band restriction needs a chart")
    ax0 = surface.axes[0]
    if ax0.periodic:
        raise HypothesisViolated("first axis must be an interval")
    others = [a.nodes for a in surface.axes[1:]]

    def radius(t):
        pts = surface.chart(*np.meshgrid([t], *others, indexing="ij"))
        rr = np.linalg.norm(pts, axis=-1)
        if rr.size > 1 and np.ptp(rr) > 1e-9 * rr.max():
            raise HypothesisViolated("distance to the vertex depends on more than one parameter")
        return float(rr.ravel()[0])

    lo, hi = ax0.a, ax0.b
    if not (radius(lo) <= r_min < r_max <= radius(hi)) and not (radius(hi) <= r_min < r_max <= radius(lo)):
        raise HypothesisViolated("band is not covered by the chart")
    t1 = brentq(lambda t: radius(t) - r_min, lo, hi, xtol=1e-15, rtol=1e-15)
    t2 = brentq(lambda t: radius(t) - r_max, lo, hi, xtol=1e-15, rtol=1e-15)
    t1, t2 = min(t1, t2), max(t1, t2)
    n0 = grid or ax0.n
    axes = [ChebyshevAxis(n0, t1, t2)] + list(surface.axes[1:])
    X = surface.chart(*np.meshgrid(*[a.nodes for a in axes], indexing="ij"))
    out = ParametricSurface(axes, X, {(0, -1): "open", (0, 1): "open"}, surface.orientation, surface.chart)
    out.meta = dict(surface.meta, band=(float(r_min), float(r_max)))
    return out
