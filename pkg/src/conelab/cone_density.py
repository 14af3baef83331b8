"""Solid cones and k-homogeneous densities on them.

A density is stored as a degree ``k`` and a positive profile ``eta`` on the
unit sphere, so that ``f(p) = eta(p/|p|) |p|^k`` and ``psi = log f``.
Ambient derivatives of ``psi`` are assembled from the gradient ``g`` and
Hessian ``Hs`` of ``mu = log eta`` on the sphere:

    grad psi = (k u + g) / r
    hess psi = (-k u u^T - (u g^T + g u^T) + k P + Hs) / r^2

with ``u = p/r`` and ``P = I - u u^T``.  Builtin profiles supply ``mu``
through an ambient extension with closed-form derivatives; expressions
fall back to fourth-order central differences along great circles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import (
    BoundaryTooClose,
    DegreeZero,
    HypothesisViolated,
    OutsideCone,
    VertexSingular,
)
from .expression import Expression

VERTEX_RADIUS = 1e-14


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise ValueError("zero vector has no direction")
    return v / nrm


def orthonormal_frame(a) -> np.ndarray:
    """Rows ``a, e1[, e2]`` forming a right-handed orthonormal basis."""
    a = _unit(a)
    if a.size == 2:
        return np.array([a, [-a[1], a[0]]])
    helper = np.eye(3)[int(np.argmin(np.abs(a)))]
    e1 = _unit(helper - helper @ a * a)
    return np.array([a, e1, np.cross(a, e1)])


# ---------------------------------------------------------------- regions


@dataclass(frozen=True)
class FullSphere:
    """The whole ambient space."""


@dataclass(frozen=True)
class HalfSpace:
    """``{p : <p, normal> >= 0}``."""

    normal: tuple


@dataclass(frozen=True)
class Circular:
    """Round cone of half-aperture ``half_aperture`` around ``axis``."""

    axis: tuple
    half_aperture: float


@dataclass(frozen=True)
class PlanarSector:
    """Planar wedge ``start <= angle(p) <= start + angle`` (R^2 only)."""

    angle: float
    start: float = 0.0


Region = Union[FullSphere, HalfSpace, Circular, PlanarSector]


class SolidCone:
    """Solid cone over a spherical region.

    Every supported region is a geodesic ball on the unit sphere: an axis
    ``a`` and a half-width ``beta`` (``pi`` for the whole space).

    :param ambient_dim: 2 or 3
    :param region: one of :class:`FullSphere`, :class:`HalfSpace`,
        :class:`Circular`, :class:`PlanarSector`
    """

    def __init__(self, ambient_dim: int, region: Region = FullSphere()):
        if ambient_dim not in (2, 3):
            raise ValueError("ambient_dim must be 2 or 3")
        self.ambient_dim = d = int(ambient_dim)
        self.region = region
        if isinstance(region, FullSphere):
            axis, half = np.eye(d)[-1], math.pi
        elif isinstance(region, HalfSpace):
            axis, half = _unit(region.normal), math.pi / 2
        elif isinstance(region, Circular):
            axis, half = _unit(region.axis), float(region.half_aperture)
            if not 0 < half <= math.pi / 2 + 1e-15:
                raise ValueError("half_aperture must lie in (0, pi/2]")
        elif isinstance(region, PlanarSector):
            if d != 2:
                raise ValueError("planar sectors live in R^2")
            if not 0 < region.angle < 2 * math.pi:
                raise ValueError("sector angle must lie in (0, 2*pi)")
            mid = region.start + region.angle / 2
            axis, half = np.array([math.cos(mid), math.sin(mid)]), region.angle / 2
        else:
            raise TypeError(f"unknown region {region!r}")
        if axis.shape != (d,):
            raise ValueError("axis dimension does not match ambient_dim")
        self.axis = axis
        self.half_width = half
        self._frame = self._build_frame()

    # geometry of the region
    @property
    def n(self) -> int:
        return self.ambient_dim - 1

    @property
    def is_full(self) -> bool:
        return self.half_width >= math.pi

    @property
    def convex(self) -> bool:
        return self.is_full or self.half_width <= math.pi / 2 + 1e-15

    @property
    def has_boundary(self) -> bool:
        return not self.is_full

    def _build_frame(self) -> np.ndarray:
        return orthonormal_frame(self.axis)

    @property
    def frame(self) -> np.ndarray:
        """Rows: axis followed by an orthonormal completion."""
        return self._frame

    def measure(self) -> float:
        """n-dimensional measure of the spherical region."""
        if self.ambient_dim == 2:
            return 2 * self.half_width
        return 2 * math.pi * (1 - math.cos(self.half_width))

    def unit(self, theta, phi=0.0) -> np.ndarray:
        """Unit vector at angle ``theta`` from the axis (and azimuth ``phi`` in R^3)."""
        theta = np.asarray(theta, float)
        F = self._frame
        if self.ambient_dim == 2:
            return np.cos(theta)[..., None] * F[0] + np.sin(theta)[..., None] * F[1]
        phi = np.asarray(phi, float)
        return (
            np.cos(theta)[..., None] * F[0]
            + (np.sin(theta) * np.cos(phi))[..., None] * F[1]
            + (np.sin(theta) * np.sin(phi))[..., None] * F[2]
        )

    def angle_from_axis(self, p) -> np.ndarray:
        p = np.asarray(p, float)
        c = p @ self.axis
        s = np.linalg.norm(p - c[..., None] * self.axis, axis=-1)
        return np.arctan2(s, c)

    def boundary_distance(self, p) -> np.ndarray:
        """Spherical distance from ``p/|p|`` to the boundary (negative outside)."""
        if self.is_full:
            return np.full(np.shape(p)[:-1], np.inf)
        return self.half_width - self.angle_from_axis(p)

    def contains(self, p, tol: float = 1e-12) -> Union[bool, np.ndarray]:
        """Membership in the closed cone; scale invariant and true at the vertex."""
        p = np.asarray(p, float)
        r = np.linalg.norm(p, axis=-1)
        inside = (r == 0) | (self.boundary_distance(p) >= -tol)
        return bool(inside) if np.ndim(inside) == 0 else inside

    def require(self, p, tol: float = 1e-12) -> None:
        if not np.all(self.contains(p, tol)):
            raise OutsideCone("point outside the cone")

    def _radial_dir(self, p) -> np.ndarray:
        """Unit direction of ``p`` orthogonal to the axis."""
        p = np.asarray(p, float)
        w = p - (p @ self.axis)[..., None] * self.axis
        nw = np.linalg.norm(w, axis=-1, keepdims=True)
        fallback = np.broadcast_to(self._frame[1], w.shape)
        return np.where(nw > 1e-300, w / np.where(nw > 0, nw, 1), fallback)

    def inner_normal(self, p) -> np.ndarray:
        """Unit normal of the boundary face through the ray of ``p``, pointing into the cone."""
        if self.is_full:
            raise HypothesisViolated("the whole space has no boundary")
        w = self._radial_dir(p)
        b = self.half_width
        return math.sin(b) * self.axis - math.cos(b) * w

    def boundary_ii(self, p) -> np.ndarray:
        """Second fundamental form of the boundary at ``p`` w.r.t. the inner normal.

        For a round cone of half-aperture ``b`` in R^3 it is ``cot(b)/s`` in the
        circumferential direction (``s = |p|``) and zero along rulings; flat faces
        give zero.
        """
        p = np.asarray(p, float)
        d = self.ambient_dim
        out = np.zeros(p.shape[:-1] + (d, d))
        if d == 2 or self.is_full or abs(self.half_width - math.pi / 2) < 1e-15:
            return out
        w = self._radial_dir(p)
        t = np.cross(self.axis, w)
        s = np.linalg.norm(p, axis=-1)
        coef = (1.0 / math.tan(self.half_width)) / s
        return coef[..., None, None] * t[..., :, None] * t[..., None, :]

    def sample_directions(self, n_polar: int = 24, n_azimuth: int = 48, guard: float = 0.0):
        """Deterministic equal-angle grid of unit vectors in the region, ``guard`` away from the boundary."""
        if self.ambient_dim == 2:
            if self.is_full:
                th = 2 * math.pi * np.arange(n_azimuth) / n_azimuth
            else:
                h = self.half_width - guard
                th = np.linspace(-h, h, max(n_polar, 2))
            return self.unit(th)
        top = self.half_width - (0.0 if self.is_full else guard)
        th = np.linspace(0.0, top, max(n_polar, 2))
        ph = 2 * math.pi * np.arange(n_azimuth) / n_azimuth
        T, P = np.meshgrid(th[1:], ph, indexing="ij")
        pts = [self.unit(0.0)[None, :], self.unit(T, P).reshape(-1, 3)]
        if self.is_full:
            pts = pts[:1] + [self.unit(T[:-1], P[:-1]).reshape(-1, 3), -self.axis[None, :]]
        return np.concatenate(pts, axis=0)

    def to_dict(self) -> dict:
        r = self.region
        if isinstance(r, FullSphere):
            spec = {"region": "full"}
        elif isinstance(r, HalfSpace):
            spec = {"region": "half_space", "normal": list(map(float, r.normal))}
        elif isinstance(r, Circular):
            spec = {"region": "circular", "axis": list(map(float, r.axis)),
                    "half_aperture": float(r.half_aperture)}
        else:
            spec = {"region": "sector", "angle": float(r.angle), "start": float(r.start)}
        spec["ambient_dim"] = self.ambient_dim
        return spec

    def __repr__(self) -> str:
        return f"SolidCone({self.ambient_dim}, {self.region!r})"


# --------------------------------------------------------------- profiles


class DensityProfile:
    """Positive spherical profile ``eta``; subclasses may add an analytic log-extension."""

    analytic = True
    name = "profile"

    def eta(self, u: np.ndarray) -> np.ndarray:
        Phi = self.log_extension(u)[0]
        return np.exp(Phi)

    def log_extension(self, x: np.ndarray):
        """Return ``(Phi, grad Phi, hess Phi)`` for a function agreeing with ``log eta`` on the sphere."""
        raise NotImplementedError

    def degree(self) -> Optional[float]:
        """Degree forced by the family, if any."""
        return None

    def params(self) -> dict:
        return {}


@dataclass
class Radial(DensityProfile):
    """``f = c |p|^k``."""

    c: float = 1.0
    name = "radial"

    def log_extension(self, x):
        x = np.asarray(x, float)
        d = x.shape[-1]
        return (np.full(x.shape[:-1], math.log(self.c)), np.zeros_like(x),
                np.zeros(x.shape[:-1] + (d, d)))

    def params(self):
        return {"c": self.c}


@dataclass
class Monomial(DensityProfile):
    """``f = prod |x_i|^{alpha_i}`` with degree ``sum(alpha)``."""

    exponents: Sequence[float] = (1.0, 1.0)
    name = "monomial"

    def __post_init__(self):
        self.exponents = tuple(float(a) for a in self.exponents)
        if any(a < 0 for a in self.exponents):
            raise ValueError("monomial exponents must be nonnegative")

    def degree(self):
        return float(sum(self.exponents))

    def log_extension(self, x):
        x = np.asarray(x, float)
        a = np.asarray(self.exponents)
        if x.shape[-1] != a.size:
            raise ValueError("exponent count must equal the ambient dimension")
        with np.errstate(divide="ignore", invalid="ignore"):
            ax = np.abs(x)
            Phi = np.where(a > 0, a * np.log(ax), 0.0).sum(-1)
            grad = np.where(a > 0, a / x, 0.0)
            diag = np.where(a > 0, -a / x**2, 0.0)
        hess = diag[..., :, None] * np.eye(a.size)
        return Phi, grad, hess

    def params(self):
        return {"exponents": list(self.exponents)}


@dataclass
class LinearPower(DensityProfile):
    """``f = <xi, p>^k`` on the half-space where the linear form is positive."""

    xi: Sequence[float] = (0.0, 0.0, 1.0)
    power: float = 1.0
    name = "linear_power"

    def __post_init__(self):
        self.xi = tuple(float(v) for v in self.xi)

    def degree(self):
        return float(self.power)

    def log_extension(self, x):
        x = np.asarray(x, float)
        xi = np.asarray(self.xi)
        s = x @ xi
        if np.any(s <= 0):
            raise HypothesisViolated("linear form must be positive on the samples")
        g = self.power * xi / s[..., None]
        h = -self.power * xi[:, None] * xi[None, :] / (s**2)[..., None, None]
        return self.power * np.log(s), g, h

    def params(self):
        return {"xi": list(self.xi), "power": self.power}


@dataclass
class PerturbedRadial(DensityProfile):
    """``log eta(u) = amplitude * (<b, u> + u^T S u)``."""

    amplitude: float = 0.1
    b: Optional[Sequence[float]] = None
    S: Optional[Sequence[Sequence[float]]] = None
    name = "perturbed_radial"

    def _bs(self, d):
        b = np.zeros(d) if self.b is None else np.asarray(self.b, float)
        if self.b is None:
            b[0] = 1.0
        S = np.zeros((d, d)) if self.S is None else np.asarray(self.S, float)
        return b, 0.5 * (S + S.T)

    def log_extension(self, x):
        x = np.asarray(x, float)
        b, S = self._bs(x.shape[-1])
        a = self.amplitude
        Phi = a * (x @ b + np.einsum("...i,ij,...j->...", x, S, x))
        grad = a * (b + 2 * x @ S)
        hess = np.broadcast_to(2 * a * S, x.shape[:-1] + S.shape).copy()
        return Phi, grad, hess

    def params(self):
        out = {"amplitude": self.amplitude}
        if self.b is not None:
            out["b"] = list(map(float, self.b))
        if self.S is not None:
            out["S"] = [list(map(float, row)) for row in self.S]
        return out


class ExpressionProfile(DensityProfile):
    """Profile given by a formula in ``theta, phi, x, y, z`` (see :mod:`conelab.expression`)."""

    analytic = False
    name = "expression"

    def __init__(self, source: Union[str, Expression]):
        self.expr = source if isinstance(source, Expression) else Expression(source)

    def eta(self, u):
        u = np.asarray(u, float)
        if u.shape[-1] == 2:
            env = dict(x=u[..., 0], y=u[..., 1], z=np.zeros(u.shape[:-1]),
                       theta=np.arctan2(u[..., 1], u[..., 0]), phi=np.zeros(u.shape[:-1]))
        else:
            env = dict(x=u[..., 0], y=u[..., 1], z=u[..., 2],
                       theta=np.arccos(np.clip(u[..., 2], -1, 1)),
                       phi=np.arctan2(u[..., 1], u[..., 0]))
        return self.expr(**{k: env[k] for k in self.expr.variables}) * np.ones(u.shape[:-1])

    def params(self):
        return {"expression": self.expr.source}


# ---------------------------------------------------------------- density


def _tangent_frame(u: np.ndarray) -> np.ndarray:
    """Orthonormal tangent vectors at unit vectors ``u``: shape (..., n, d)."""
    d = u.shape[-1]
    if d == 2:
        return np.stack([-u[..., 1], u[..., 0]], axis=-1)[..., None, :]
    helper = np.where(np.abs(u[..., 2:3]) < 0.9, np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0]))
    t1 = helper - (helper * u).sum(-1, keepdims=True) * u
    t1 /= np.linalg.norm(t1, axis=-1, keepdims=True)
    t2 = np.cross(u, t1)
    return np.stack([t1, t2], axis=-2)


@dataclass
class AmbientJet:
    """Value, log-gradient and log-Hessian of a density at (possibly batched) points."""

    point: np.ndarray
    f_value: np.ndarray
    grad_psi: np.ndarray
    hess_psi: np.ndarray
    degree: float

    def ric_f(self) -> np.ndarray:
        return -self.hess_psi

    def ric_f_k(self) -> np.ndarray:
        if self.degree == 0:
            raise DegreeZero("Ric_f^k needs k != 0")
        g = self.grad_psi
        return -self.hess_psi - g[..., :, None] * g[..., None, :] / self.degree


class HomogeneousDensity:
    """``f(p) = eta(p/|p|) |p|^k``.

    :param degree: homogeneity degree ``k``; for Monomial and LinearPower it
        may be omitted and is taken from the family
    :param profile: a :class:`DensityProfile`
    :param derivative_mode: ``"analytic"`` or ``"finite_difference"``
    :param h_sphere: great-circle step for finite differences (radians)
    """

    def __init__(self, degree: Optional[float] = None, profile: Optional[DensityProfile] = None,
                 derivative_mode: str = "analytic", h_sphere: float = 1e-4):
        profile = Radial() if profile is None else profile
        forced = profile.degree()
        if degree is None:
            if forced is None:
                raise ValueError("degree is required for this profile")
            degree = forced
        elif forced is not None and abs(forced - degree) > 1e-12:
            raise ValueError(f"{profile.name} density has degree {forced}, not {degree}")
        if derivative_mode not in ("analytic", "finite_difference"):
            raise ValueError("derivative_mode must be 'analytic' or 'finite_difference'")
        if not profile.analytic:
            derivative_mode = "finite_difference"
        self.k = float(degree)
        self.profile = profile
        self.derivative_mode = derivative_mode
        self.h_sphere = float(h_sphere)

    @property
    def is_radial(self) -> bool:
        return isinstance(self.profile, Radial)

    def __repr__(self) -> str:
        return f"HomogeneousDensity(k={self.k}, {self.profile.name}, {self.derivative_mode})"

    def to_dict(self) -> dict:
        return {"family": self.profile.name, "degree": self.k, **self.profile.params(),
                "derivative_mode": self.derivative_mode}

    # values
    def value(self, p) -> np.ndarray:
        """``f(p)``; zero at the vertex when k > 0, :class:`VertexSingular` otherwise."""
        p = np.asarray(p, float)
        r = np.linalg.norm(p, axis=-1)
        at_vertex = r < VERTEX_RADIUS
        if np.any(at_vertex):
            if self.k < 0 or (self.k == 0 and not self.is_radial):
                raise VertexSingular("density is singular at the vertex")
        safe = np.where(at_vertex, 1.0, r)
        u = p / safe[..., None]
        eta = self.profile.eta(u)
        out = eta * safe**self.k
        if self.k > 0:
            out = np.where(at_vertex, 0.0, out)
        return out

    def psi(self, p) -> np.ndarray:
        p = np.asarray(p, float)
        r = np.linalg.norm(p, axis=-1)
        return np.log(self.profile.eta(p / r[..., None])) + self.k * np.log(r)

    # sphere derivatives of mu = log eta
    def sphere_jet(self, u, cone: Optional[SolidCone] = None):
        """Return ``(mu, g, Hs)`` at unit vectors ``u``: ``g`` and ``Hs`` act on the tangent space."""
        u = np.asarray(u, float)
        d = u.shape[-1]
        P = np.eye(d) - u[..., :, None] * u[..., None, :]
        if self.derivative_mode == "analytic":
            Phi, gP, hP = self.profile.log_extension(u)
            g = np.einsum("...ij,...j->...i", P, gP)
            Hs = P @ hP @ P - (gP * u).sum(-1)[..., None, None] * P
            return Phi, g, Hs
        return self._sphere_jet_fd(u, P, cone)

    def _sphere_jet_fd(self, u, P, cone):
        h = self.h_sphere
        if cone is not None and not cone.is_full:
            if np.any(cone.boundary_distance(u) < 2 * h):
                raise BoundaryTooClose("finite-difference stencil reaches the region boundary")
        mu = lambda q: np.log(self.profile.eta(q))
        T = _tangent_frame(u)
        n = T.shape[-2]
        mu0 = mu(u)

        def along(v):
            vals = {s: mu(math.cos(s * h) * u + math.sin(s * h) * v) for s in (-2, -1, 1, 2)}
            d1 = (vals[-2] - 8 * vals[-1] + 8 * vals[1] - vals[2]) / (12 * h)
            d2 = (-vals[2] + 16 * vals[1] - 30 * mu0 + 16 * vals[-1] - vals[-2]) / (12 * h * h)
            return d1, d2

        first = np.zeros(u.shape[:-1] + (n,))
        second = np.zeros(u.shape[:-1] + (n, n))
        for a in range(n):
            first[..., a], second[..., a, a] = along(T[..., a, :])
        for a in range(n):
            for b in range(a + 1, n):
                _, plus = along((T[..., a, :] + T[..., b, :]) / math.sqrt(2))
                _, minus = along((T[..., a, :] - T[..., b, :]) / math.sqrt(2))
                second[..., a, b] = second[..., b, a] = (plus - minus) / 2
        g = np.einsum("...a,...ai->...i", first, T)
        Hs = np.einsum("...ab,...ai,...bj->...ij", second, T, T)
        return mu0, g, Hs

    def jet(self, p, cone: Optional[SolidCone] = None) -> AmbientJet:
        p = np.asarray(p, float)
        r = np.linalg.norm(p, axis=-1)
        if np.any(r < VERTEX_RADIUS):
            raise VertexSingular("jet requested at the vertex")
        u = p / r[..., None]
        mu, g, Hs = self.sphere_jet(u, cone)
        k = self.k
        d = p.shape[-1]
        P = np.eye(d) - u[..., :, None] * u[..., None, :]
        uu = u[..., :, None] * u[..., None, :]
        ug = u[..., :, None] * g[..., None, :]
        grad = (k * u + g) / r[..., None]
        hess = (-k * uu - (ug + np.swapaxes(ug, -1, -2)) + k * P + Hs) / (r**2)[..., None, None]
        fval = np.exp(mu) * r**k
        return AmbientJet(p, fval, grad, hess, k)


# ------------------------------------------------------------- operations


def evaluate(density: HomogeneousDensity, cone: SolidCone, p) -> np.ndarray:
    """``f(p) = eta(p/|p|) |p|^k`` with vertex handling and a membership check."""
    cone.require(p)
    out = density.value(p)
    return float(out) if np.ndim(out) == 0 else out


def ambient_jet(density: HomogeneousDensity, cone: SolidCone, p) -> AmbientJet:
    """Value, gradient and Hessian of ``psi`` at ``p`` in the open cone."""
    cone.require(p)
    return density.jet(p, cone)


def ric_f(density, cone, p, v) -> float:
    """``Ric_f(v, v) = -hess psi(v, v)`` in Euclidean space."""
    J = ambient_jet(density, cone, p)
    v = np.asarray(v, float)
    return np.einsum("...i,...ij,...j->...", v, J.ric_f(), v)


def ric_f_k(density, cone, p, v) -> float:
    """``Ric_f(v, v) - <grad psi, v>^2 / k``."""
    if density.k == 0:
        raise DegreeZero("Ric_f^k needs k != 0")
    J = ambient_jet(density, cone, p)
    v = np.asarray(v, float)
    return np.einsum("...i,...ij,...j->...", v, J.ric_f_k(), v)


@dataclass
class SampleSpec:
    """Deterministic certification grid."""

    n_polar: int = 24
    n_azimuth: int = 48
    n_directions: int = 36
    h_guard: float = 1e-3


@dataclass
class CurvatureReport:
    sample_count: int
    min_ric_f_k: float
    min_ric_f: float
    cd_certified: bool
    witness: dict
    sphere_margin: float
    sphere_certified: bool
    agree: bool
    tolerance: float

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["witness"] = {k: (list(map(float, v)) if np.ndim(v) else float(v))
                          for k, v in self.witness.items()}
        return out


def certify_cd(density: HomogeneousDensity, cone: SolidCone,
               sample_spec: Optional[SampleSpec] = None, tol: float = 1e-8) -> CurvatureReport:
    """Sample ``Ric_f^k >= 0`` two ways on the same grid.

    The ambient test takes the smallest eigenvalue of the full ``Ric_f^k``
    matrix at unit points; the spherical test checks
    ``Hs(v,v) <= -<g,v>^2/k - k`` over sampled tangent directions.
    """
    if density.k == 0:
        raise DegreeZero("curvature-dimension test needs k != 0")
    spec = sample_spec or SampleSpec()
    U = cone.sample_directions(spec.n_polar, spec.n_azimuth, spec.h_guard)
    k = density.k
    J = density.jet(U, cone)
    R = J.ric_f_k()
    w, V = np.linalg.eigh(R)
    i = int(np.argmin(w[:, 0]))
    min_rk = float(w[i, 0])
    min_r = float(np.linalg.eigvalsh(J.ric_f())[:, 0].min())

    _, g, Hs = density.sphere_jet(U, cone)
    T = _tangent_frame(U)
    if T.shape[-2] == 1:
        dirs = T
    else:
        ang = np.pi * np.arange(spec.n_directions) / spec.n_directions
        dirs = (np.cos(ang)[None, :, None] * T[:, 0:1, :] + np.sin(ang)[None, :, None] * T[:, 1:2, :])
    gv = np.einsum("mi,mji->mj", g, dirs)
    hv = np.einsum("mji,mik,mjk->mj", dirs, Hs, dirs)
    margin = -k - gv**2 / k - hv
    sphere_min = float(margin.min())
    cd = min_rk >= -tol
    sphere_ok = sphere_min >= -tol
    witness = {"point": U[i], "direction": V[i, :, 0], "value": min_rk}
    return CurvatureReport(
        sample_count=int(U.shape[0]),
        min_ric_f_k=min_rk,
        min_ric_f=min_r,
        cd_certified=bool(cd),
        witness=witness,
        sphere_margin=sphere_min,
        sphere_certified=bool(sphere_ok),
        agree=bool(cd == sphere_ok),
        tolerance=tol,
    )


def fd_hessian(F, p: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order central-difference Hessian of a scalar function."""
    p = np.asarray(p, float)
    d = p.size
    E = np.eye(d) * h
    H = np.zeros((d, d))
    F0 = F(p)
    for i in range(d):
        H[i, i] = (-F(p + 2 * E[i]) + 16 * F(p + E[i]) - 30 * F0 + 16 * F(p - E[i]) - F(p - 2 * E[i])) / (12 * h * h)
        for j in range(i + 1, d):
            def cross(s):
                a, b = s * E[i], s * E[j]
                return F(p + a + b) - F(p + a - b) - F(p - a + b) + F(p - a - b)
            H[i, j] = H[j, i] = (16 * cross(1) - cross(2)) / (48 * h * h)
    return H


def matrimonio_residual(density: HomogeneousDensity, cone: SolidCone, p, h: Optional[float] = None) -> float:
    """Frobenius norm of ``hess(f^{1/k}) + f^{1/k} Ric_f^k / k`` with a finite-difference Hessian."""
    if density.k == 0:
        raise DegreeZero("f^(1/k) needs k != 0")
    p = np.asarray(p, float)
    cone.require(p)
    r = float(np.linalg.norm(p))
    if h is None:
        h = 1e-3 * r
        if cone.has_boundary:
            h = min(h, 0.3 * r * math.sin(max(float(cone.boundary_distance(p)), 0.0)))
        if h <= 0:
            raise BoundaryTooClose("point on the cone boundary")
    k = density.k
    F = lambda q: float(density.value(q)) ** (1.0 / k)
    H = fd_hessian(F, p, h)
    J = density.jet(p, cone)
    rhs = -F(p) * J.ric_f_k() / k
    return float(np.linalg.norm(H - rhs))
