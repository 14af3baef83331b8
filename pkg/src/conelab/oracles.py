"""Slow, independent reference values.

Nothing here goes through the sphere-jet, spectral-derivative or assembly
code it is used to check: values come from closed forms, plain polar sums or
finite differences of the density itself.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .cone_density import Circular, FullSphere, HalfSpace, HomogeneousDensity, PlanarSector, SolidCone
from .errors import CriticalDegree, NoSpectralReference


@dataclass
class OracleResult:
    name: str
    expected: dict
    method: str
    params: dict = field(default_factory=dict)
    reliable: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


def sphere_measure(n: int) -> float:
    """Area of the unit n-sphere in R^{n+1}."""
    return 2 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)


def _first_neumann(cone: SolidCone) -> float:
    """First nonzero Neumann eigenvalue of the spherical region, where separable."""
    reg, n = cone.region, cone.n
    if n == 1:
        if isinstance(reg, (FullSphere, HalfSpace)):
            return 1.0
        if isinstance(reg, PlanarSector):
            return (math.pi / reg.angle) ** 2
    if n == 2 and isinstance(reg, (FullSphere, HalfSpace)):
        return 2.0
    if n == 2 and isinstance(reg, Circular) and abs(reg.half_aperture - math.pi / 2) < 1e-15:
        return 2.0
    raise NoSpectralReference(f"no separable Neumann reference for {reg!r}")


def cap_reference(n: int, k: float, r: float, cone: SolidCone) -> OracleResult:
    """Closed-form values on the cap ``|p| = r`` for ``f = |p|^k``.

    Eigenvalue entries are ``None`` when the region has no separable
    reference; call :func:`first_neumann_reference` to get the error.
    """
    if cone.n != n:
        raise ValueError("dimension mismatch")
    area = cone.measure() * r ** (n + k)
    exp = {
        "H_f": (n + k) / r,
        "area": area,
        "area_formula_check": area,
        "potential": (n + k) / r ** 2,
        "min_eigen_all": -(n + k) / r ** 2,
    }
    if abs(n + k + 1) > 1e-12:
        exp["oriented_volume"] = r * area / (n + k + 1)
    try:
        lam = _first_neumann(cone)
    except NoSpectralReference:
        exp["min_eigen_meanzero"] = None
        method = "closed_form"
    else:
        exp["min_eigen_meanzero"] = (lam - (n + k)) / r ** 2
        method = "fourier_modes"
    return OracleResult("cap_reference", exp, method, {"n": n, "k": k, "r": r, "cone": cone.to_dict()})


def first_neumann_reference(cone: SolidCone) -> float:
    return _first_neumann(cone)


def circle_rayleigh(k: float, r: float, m: int, samples: int = 4096, arc: Optional[float] = None) -> float:
    """Rayleigh quotient of ``I_f`` for the mode ``cos(m theta)`` on a circle (or
    ``cos(m pi theta/arc)`` on an arc), by a plain midpoint sum.

    The density is constant on the circle, so it cancels.
    """
    if arc is None:
        t = 2 * math.pi * (np.arange(samples) + 0.5) / samples
        u, du = np.cos(m * t), -m * np.sin(m * t)
    else:
        t = arc * (np.arange(samples) + 0.5) / samples
        w = m * math.pi / arc
        u, du = np.cos(w * t), -w * np.sin(w * t)
    num = np.sum((du / r) ** 2 - (1 + k) / r ** 2 * u ** 2)
    return float(num / np.sum(u ** 2))


def circle_spectrum(k: float, r: float = 1.0, modes: int = 5) -> OracleResult:
    vals = [circle_rayleigh(k, r, m) for m in range(modes)]
    return OracleResult("circle_spectrum", {"eigenvalues": vals, "min_eigen_all": vals[0],
                                            "min_eigen_meanzero": vals[1]},
                        "fourier_modes", {"k": k, "r": r})


def radial_integrals(n: int, k: float, r: float) -> OracleResult:
    """``A_f`` and ``V_f`` of the round sphere ``|p| = r`` for ``f = |p|^k``.

    For ``k > -(n+1)`` the volume is the ball integral ``|S^n| r^{n+k+1}/(n+k+1)``;
    below that the same number is the oriented (boundary-integral) volume.
    """
    if abs(n + k + 1) < 1e-12:
        raise CriticalDegree("k = -(n+1)")
    s = sphere_measure(n)
    A = s * r ** (n + k)
    V = s * r ** (n + k + 1) / (n + k + 1)
    out = {"circle_area" if n == 1 else "sphere_area": A, "area": A, "oriented_volume": V}
    return OracleResult("radial_integrals", out, "closed_form", {"n": n, "k": k, "r": r})


def polar_volume(density: HomogeneousDensity, r: float, n_theta: int = 2000, n_rho: int = 400) -> float:
    """Weighted area of the disk of radius ``r`` in R^2 by a midpoint polar sum."""
    th = 2 * math.pi * (np.arange(n_theta) + 0.5) / n_theta
    x, w = np.polynomial.legendre.leggauss(n_rho)
    rho = 0.5 * r * (x + 1)
    total = 0.0
    for rj, wj in zip(rho, w):
        P = rj * np.stack([np.cos(th), np.sin(th)], 1)
        total += 0.5 * r * wj * rj * np.sum(density.value(P)) * (2 * math.pi / n_theta)
    return float(total)


# ------------------------------------------------------------ jets

def radial_jet(k: float, p):
    """Gradient and Hessian of ``psi = k log|p|``."""
    p = np.asarray(p, float)
    r2 = p @ p
    g = k * p / r2
    Hs = k * (np.eye(len(p)) - 2 * np.outer(p, p) / r2) / r2
    return g, Hs


def linear_power_jet(xi, power: float, p):
    """Gradient and Hessian of ``psi = power log<xi, p>``."""
    xi = np.asarray(xi, float)
    p = np.asarray(p, float)
    s = xi @ p
    return power * xi / s, -power * np.outer(xi, xi) / s ** 2


def fd_psi_jet(density: HomogeneousDensity, p, h: float = 1e-4):
    """Fourth-order finite differences of ``log f`` (value evaluations only)."""
    p = np.asarray(p, float)
    d = len(p)

    def psi(q):
        return float(np.log(density.value(np.asarray(q)[None, :]))[0])

    g = np.zeros(d)
    H = np.zeros((d, d))
    E = np.eye(d) * h
    for i in range(d):
        g[i] = (psi(p - 2 * E[i]) - 8 * psi(p - E[i]) + 8 * psi(p + E[i]) - psi(p + 2 * E[i])) / (12 * h)
        H[i, i] = (-psi(p - 2 * E[i]) + 16 * psi(p - E[i]) - 30 * psi(p) + 16 * psi(p + E[i])
                   - psi(p + 2 * E[i])) / (12 * h * h)
        for j in range(i + 1, d):
            vals = 0.0
            for a, ca in ((1, 8), (-1, -8), (2, -1), (-2, 1)):
                for b, cb in ((1, 8), (-1, -8), (2, -1), (-2, 1)):
                    vals += ca * cb * psi(p + a * E[i] + b * E[j])
            H[i, j] = H[j, i] = vals / (144 * h * h)
    return g, H


def fd_boundary_ii(cone: SolidCone, p, v, h: float = 1e-4) -> float:
    """Normal curvature of the cone boundary at ``p`` in the tangent direction ``v``.

    Uses a curve on the boundary through ``p`` with velocity ``v``, built by
    rotating about the axis and scaling along rays, and the inner normal
    computed from scratch.  Supported for circular (and half-space) cones in
    R^3 and sectors in R^2.
    """
    p = np.asarray(p, float)
    v = np.asarray(v, float)
    reg = cone.region
    if cone.ambient_dim == 2:
        return 0.0  # boundary rays are straight
    if isinstance(reg, HalfSpace):
        return 0.0
    if not isinstance(reg, Circular):
        raise ValueError("no boundary oracle for this region")
    a = np.asarray(reg.axis, float)
    a = a / np.linalg.norm(a)
    rho = np.linalg.norm(p)
    # decompose v into ray direction and rotation about the axis
    ray = p / rho
    rot = np.cross(a, p)
    coef = np.linalg.lstsq(np.stack([ray, rot], 1), v, rcond=None)[0]

    def curve(s):
        ang = coef[1] * s
        c, sn = math.cos(ang), math.sin(ang)
        # Rodrigues rotation of p about a
        q = p * c + np.cross(a, p) * sn + a * (a @ p) * (1 - c)
        return q * (1 + coef[0] * s / rho)

    acc = (curve(h) - 2 * curve(0.0) + curve(-h)) / h ** 2
    w = p - (p @ a) * a
    w = w / np.linalg.norm(w)
    beta = reg.half_aperture
    n_in = math.sin(beta) * a - math.cos(beta) * w
    return float(acc @ n_in / (v @ v))


# ------------------------------------------------------------ variations

@dataclass
class BruteDerivative:
    estimates: list
    extrapolated: float
    ratio: Optional[float]
    reliable: bool


def _richardson(vals: Sequence[float], scale: float) -> BruteDerivative:
    """Central-difference estimates at ``dt, dt/2, dt/4...``; error ratio should be ~4."""
    ratio = None
    reliable = True
    if len(vals) >= 3:
        d1, d2 = vals[0] - vals[1], vals[1] - vals[2]
        if max(abs(d1), abs(d2)) <= 1e-9 * max(scale, 1.0):
            ratio = math.inf
        else:
            ratio = abs(d1 / d2) if d2 != 0 else math.inf
            reliable = ratio >= 3.5
    ext = vals[-1] + (vals[-1] - vals[-2]) / 3 if len(vals) >= 2 else vals[-1]
    return BruteDerivative(list(vals), float(ext), ratio, reliable)


def brute_variation(surface, density, cone, u=None, dt_list: Sequence[float] = (1e-2, 5e-3, 2.5e-3)):
    """Three-point central differences of ``A_f`` and ``V_f`` along ``X + t u N``.

    With ``u=None`` the variation is the dilation ``e^t X``.  Returns
    :class:`OracleResult` whose ``expected`` holds ``dA``, ``dV`` and their
    stencil histories.
    """
    from .hypersurface import geometry
    from .weighted_measures import oriented_volume, weighted_area

    geo = geometry(surface, density, cone)
    X, N = geo.points, geo.normal
    if u is None:
        def move(t):
            return math.exp(t) * X
    else:
        uu = surface.values_of(u) if callable(u) else np.asarray(u, float)

        def move(t):
            return X + t * uu[:, None] * N

    critical = abs(geo.n + geo.k + 1) < 1e-12
    dA, dV = [], []
    for dt in dt_list:
        Sp, Sm = surface.with_positions(move(dt)), surface.with_positions(move(-dt))
        dA.append((weighted_area(Sp, density, cone) - weighted_area(Sm, density, cone)) / (2 * dt))
        if not critical:
            dV.append((oriented_volume(Sp, density, cone) - oriented_volume(Sm, density, cone)) / (2 * dt))
    A = _richardson(dA, abs(dA[-1]))
    exp = {"dA": A.extrapolated, "dA_history": A.estimates, "dA_ratio": A.ratio}
    reliable = A.reliable
    if dV:
        V = _richardson(dV, abs(dV[-1]))
        exp.update(dV=V.extrapolated, dV_history=V.estimates, dV_ratio=V.ratio)
        reliable = reliable and V.reliable
    kind = "dilation" if u is None else "normal"
    return OracleResult("brute_variation", exp, "finite_difference",
                        {"kind": kind, "dt_list": list(dt_list)}, reliable)
