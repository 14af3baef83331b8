"""Index form, Jacobi operator, stability spectra and variation engines."""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .cone_density import HomogeneousDensity, SolidCone
from .errors import (CriticalDegree, HypothesisViolated, OutsideCone, ProjectionDegenerate,
                     StencilExitsCone, TooManyDofs, WrongDegreeRange)
from .hypersurface import (DiscreteHypersurface, ParametricSurface, ScalarField, barbosa_test_field,
                           geometry, restrict_band, support_function)
from .hypersurface.geometry import default_tol_stationary
from .weighted_measures import f_laplacian, fsum, oriented_volume, weighted_area

MAX_DENSE_DOFS = 5000


# ------------------------------------------------------------ assembly

@dataclass
class WeightedOperators:
    """Discrete pieces of the index form.

    ``u @ (K - P - B) @ u`` approximates ``I_f(u, u)`` and ``u @ M @ u``
    approximates ``int u^2 da_f``.  Matrices are dense (parametric backend) or
    scipy sparse (simplicial backend).
    """

    K: object
    M: object
    P: object
    B: object
    surface: DiscreteHypersurface
    density: HomogeneousDensity
    cone: SolidCone

    @property
    def dofs(self) -> int:
        return self.M.shape[0]

    @property
    def backend(self) -> str:
        return self.surface.backend

    def quadratic(self):
        return self.K - self.P - self.B

    def dense(self, name: str) -> np.ndarray:
        A = getattr(self, name) if name != "Q" else self.quadratic()
        return A.toarray() if sp.issparse(A) else np.asarray(A)


def _sym(A):
    return 0.5 * (A + A.T)


def _parametric_derivative_matrices(surface: ParametricSurface):
    m = surface.positions.shape[0]
    if m > MAX_DENSE_DOFS:
        raise TooManyDofs(f"{m} dofs exceed the dense limit {MAX_DENSE_DOFS}")
    E = np.eye(m).reshape(surface.grid_shape + (m,))
    return [np.ascontiguousarray(surface.d(E, a, chop=False).reshape(m, m)) for a in range(surface.n)]


def assemble(surface: DiscreteHypersurface, density: HomogeneousDensity, cone: SolidCone) -> WeightedOperators:
    geo = geometry(surface, density, cone)
    bd = geo.boundary
    if isinstance(surface, ParametricSurface):
        D = _parametric_derivative_matrices(surface)
        Gi = surface._metric_cache()["Gi"].reshape(-1, surface.n, surface.n)
        w = geo.weights
        K = np.zeros((len(w), len(w)))
        for a in range(surface.n):
            for b in range(surface.n):
                K += D[a].T @ ((w * Gi[:, a, b])[:, None] * D[b])
        M = np.diag(w)
        P = np.diag(w * geo.potential)
        if len(bd):
            T = surface.boundary_trace(np.eye(len(w)))
            wb = bd.dl_f * bd.ii_nn * bd.free
            B = T.T @ (wb[:, None] * T)
        else:
            B = np.zeros_like(K)
        return WeightedOperators(_sym(K), M, _sym(P), _sym(B), surface, density, cone)
    K = surface.stiffness(geo.f)
    M = surface.mass(geo.f)
    P = surface.mass(geo.f * geo.potential)
    m = len(geo.f)
    if len(bd) and np.any(bd.free):
        wv = np.zeros(m)
        wv[surface.boundary_vertices] = bd.f * bd.ii_nn
        B = surface.boundary_mass(wv, free_only=True)
    else:
        B = sp.csr_matrix((m, m))
    return WeightedOperators(_sym(K).tocsr(), _sym(M).tocsr(), _sym(P).tocsr(), _sym(B).tocsr(),
                             surface, density, cone)


def index_form(ops: WeightedOperators, u, v=None) -> float:
    """``I_f(u, v)`` from the assembled matrices."""
    u = np.asarray(u, float)
    v = u if v is None else np.asarray(v, float)
    return float(u @ (ops.quadratic() @ v))


def jacobi_apply(ops: WeightedOperators, u) -> ScalarField:
    """``L_f u = Delta_f u + (Ric_f(N,N) + |sigma|^2) u``.

    Parametric surfaces use the strong form; simplicial ones the weak action
    ``M^{-1}(-K + P) u``.
    """
    surface, density, cone = ops.surface, ops.density, ops.cone
    u = np.asarray(u, float)
    geo = geometry(surface, density, cone)
    if isinstance(surface, ParametricSurface):
        return ScalarField(f_laplacian(surface, density, cone, u) + geo.potential * u)
    rhs = -(ops.K @ u) + ops.P @ u
    return ScalarField(spla.spsolve(ops.M.tocsc(), rhs))


# ------------------------------------------------------------ spectra

def stability_spectrum(ops: WeightedOperators, mode: str = "all", count: int = 1):
    """Smallest generalized Rayleigh quotients of ``K - P - B`` against ``M``.

    :param mode: ``"all"`` or ``"mean_zero"`` (restricted to ``1^T M u = 0``)
    :returns: ``(lambda_min, eigenvector)``; with ``count > 1`` the arrays of
        the ``count`` smallest eigenpairs
    """
    if ops.dofs > MAX_DENSE_DOFS:
        raise TooManyDofs(f"{ops.dofs} dofs exceed the dense limit {MAX_DENSE_DOFS}")
    A = ops.dense("Q")
    M = ops.dense("M")
    if mode == "all":
        vals, vecs = sla.eigh(A, M, subset_by_index=[0, count - 1])
    elif mode == "mean_zero":
        c = M @ np.ones(ops.dofs)
        if np.linalg.norm(c) <= 1e-300 or not np.all(np.isfinite(c)):
            raise ProjectionDegenerate("the constant function has zero weighted mass")
        Z = sla.null_space(c[None, :])
        vals, y = sla.eigh(Z.T @ A @ Z, Z.T @ M @ Z, subset_by_index=[0, count - 1])
        vecs = Z @ y
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if count == 1:
        return float(vals[0]), vecs[:, 0]
    return vals, vecs


def spectrum(ops: WeightedOperators, mode: str = "all", count: Optional[int] = None) -> np.ndarray:
    """Leading eigenvalues (all of them by default)."""
    m = ops.dofs - (1 if mode == "mean_zero" else 0)
    count = m if count is None else min(count, m)
    vals, _ = stability_spectrum(ops, mode, max(count, 2))
    return np.asarray(vals)[:count]


@dataclass
class RefinementResult:
    grids: list
    values: list
    converged: bool
    monotone: bool


def refine_spectrum(build: Callable[[int], DiscreteHypersurface], density, cone, grids: Sequence[int],
                    mode: str = "mean_zero", rel_tol: float = 0.02, floor: float = 1e-8) -> RefinementResult:
    """Minimal eigenvalue on successively finer discretisations ``build(grid)``.

    Converged when the last two values agree within ``rel_tol`` (relative to
    ``max(|lambda|, floor)``).
    """
    vals = []
    for g in grids:
        vals.append(stability_spectrum(assemble(build(g), density, cone), mode)[0])
    converged = len(vals) >= 2 and abs(vals[-1] - vals[-2]) <= rel_tol * max(abs(vals[-1]), floor)
    monotone = all(b <= a + rel_tol * max(abs(a), floor) for a, b in zip(vals, vals[1:]))
    return RefinementResult(list(grids), vals, bool(converged), bool(monotone))


# ------------------------------------------------------------ reports

@dataclass
class StabilityReport:
    H_f_mean: float
    H_f_std: float
    orthogonality_error: float
    tol_stationary: float
    lambda_min_all: Optional[float] = None
    lambda_min_meanzero: Optional[float] = None
    verdicts: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def stationarity_check(surface, density, cone, tol_stationary: Optional[float] = None) -> StabilityReport:
    geo = geometry(surface, density, cone)
    tol = default_tol_stationary(surface) if tol_stationary is None else tol_stationary
    Hm, Hs = float(np.mean(geo.H_f)), float(np.std(geo.H_f))
    bd = geo.boundary
    if len(bd) and np.any(bd.free):
        idx = bd.free
        orth = float(np.abs((bd.normal[idx] * bd.cone_normal[idx]).sum(1)).max())
    else:
        orth = 0.0
    stationary = Hs <= tol * (1 + abs(Hm)) and orth <= tol
    return StabilityReport(Hm, Hs, orth, tol, verdicts={
        "stationary": bool(stationary),
        "strongly_stationary": bool(stationary and abs(Hm) <= tol),
    })


def stability_report(surface, density, cone, tol_stationary: Optional[float] = None,
                     tol_spectrum: Optional[float] = None) -> StabilityReport:
    """Stationarity plus both minimal eigenvalues and the four verdicts."""
    rep = stationarity_check(surface, density, cone, tol_stationary)
    ops = assemble(surface, density, cone)
    tol = rep.tol_stationary if tol_spectrum is None else tol_spectrum
    rep.lambda_min_all = stability_spectrum(ops, "all")[0]
    rep.lambda_min_meanzero = stability_spectrum(ops, "mean_zero")[0]
    st = rep.verdicts["stationary"]
    rep.verdicts["f_stable"] = bool(st and rep.lambda_min_meanzero >= -tol)
    rep.verdicts["strongly_f_stable"] = bool(rep.verdicts["strongly_stationary"] and rep.lambda_min_all >= -tol)
    return rep


# ------------------------------------------------------------ variations

@dataclass
class Normal:
    """``X + t u N`` with ``u`` a callable of points or per-sample values."""

    u: object


@dataclass
class Dilation:
    """``e^t X``."""


@dataclass
class Parallel:
    """``X + t (n + k) N``."""


@dataclass
class RescaledParallel:
    """``s(t) (X + t (n + k) N)`` with ``s`` restoring the weighted volume."""


Variation = Union[Normal, Dilation, Parallel, RescaledParallel]

STENCIL_OFFSETS = (-2, -1, 0, 1, 2)


def d1_five(vals, dt):
    return (vals[0] - 8 * vals[1] + 8 * vals[3] - vals[4]) / (12 * dt)


def d2_five(vals, dt):
    return (-vals[0] + 16 * vals[1] - 30 * vals[2] + 16 * vals[3] - vals[4]) / (12 * dt * dt)


def _deformer(surface, density, cone, variation: Variation):
    geo = geometry(surface, density, cone)
    X, N = geo.points, geo.normal
    n, k = geo.n, geo.k
    if isinstance(variation, Normal):
        u = surface.values_of(variation.u) if callable(variation.u) else np.asarray(variation.u, float)
        return lambda t: X + t * u[:, None] * N
    if isinstance(variation, Dilation):
        return lambda t: math.exp(t) * X
    if isinstance(variation, Parallel):
        return lambda t: X + t * (n + k) * N
    if isinstance(variation, RescaledParallel):
        if abs(n + k + 1) < 1e-12:
            raise CriticalDegree("rescaled parallel variation needs k != -(n+1)")
        V0 = oriented_volume(surface, density, cone)

        def move(t):
            Y = X + t * (n + k) * N
            if t == 0:
                return Y
            Vt = oriented_volume(surface.with_positions(Y), density, cone)
            return (V0 / Vt) ** (1.0 / (n + k + 1)) * Y
        return move
    raise TypeError(f"unknown variation {variation!r}")


def _deformed(surface, density, cone, Y, tol: float = 1e-9):
    S = surface.with_positions(Y)
    if not np.all(cone.contains(S.positions, tol)):
        raise StencilExitsCone("a deformed sample left the cone")
    try:
        geometry(S, density, cone)
    except OutsideCone as exc:
        raise StencilExitsCone(str(exc)) from exc
    return S


@dataclass
class VariationDiagnostics:
    kind: str
    dt: float
    dA: float
    dV: Optional[float]
    d2: Optional[float]
    dA_expected: float
    dV_expected: Optional[float]
    d2_expected: Optional[float]
    richardson_rel: Optional[float]
    reliable: bool
    dH_f: Optional[np.ndarray] = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = asdict(self)
        if self.dH_f is not None:
            out["dH_f"] = None
            out["dH_f_max_error"] = self.extra.get("dH_f_max_error")
        return out


def _stencil(surface, density, cone, move, dt, with_volume=True):
    A, V, HV, Hf = [], [], [], []
    Hbar = float(np.mean(geometry(surface, density, cone).H_f))
    for j in STENCIL_OFFSETS:
        S = _deformed(surface, density, cone, move(j * dt))
        a = weighted_area(S, density, cone)
        A.append(a)
        Hf.append(geometry(S, density, cone).H_f)
        if with_volume:
            v = oriented_volume(S, density, cone)
            V.append(v)
            HV.append(a - Hbar * v)
    return A, V, HV, Hf


def run_variation(surface, density, cone, variation: Variation, dt: Optional[float] = None,
                  richardson_tol: float = 0.01) -> VariationDiagnostics:
    """Finite-difference first and second variations against their closed forms.

    Five-point central stencils at ``dt`` and ``dt/2``; the second derivative
    of ``A_f - H_f V_f`` (``H_f`` frozen at its initial mean) is compared with
    ``I_f(u, u)`` for normal variations.  ``reliable`` is false when the two
    step sizes disagree by more than ``richardson_tol``.
    """
    geo = geometry(surface, density, cone)
    n, k = geo.n, geo.k
    dt = 1e-3 * surface.diameter if dt is None else dt
    critical = abs(n + k + 1) < 1e-12
    move = _deformer(surface, density, cone, variation)
    A1, V1, HV1, H1 = _stencil(surface, density, cone, move, dt, not critical)
    A2, V2, HV2, H2 = _stencil(surface, density, cone, move, dt / 2, not critical)
    dA, dA_half = d1_five(A1, dt), d1_five(A2, dt / 2)
    dV = d1_five(V1, dt) if not critical else None
    d2 = d2_five(HV1, dt) if not critical else None
    d2_half = d2_five(HV2, dt / 2) if not critical else None
    w = geo.weights
    extra = {}
    dH = None
    d2_exp = None
    if isinstance(variation, Normal):
        u = surface.values_of(variation.u) if callable(variation.u) else np.asarray(variation.u, float)
        dA_exp = -fsum(geo.H_f * u * w)
        dV_exp = -fsum(u * w)
        d2_exp = index_form(assemble(surface, density, cone), u)
    elif isinstance(variation, Dilation):
        A0 = fsum(w)
        dA_exp = (n + k) * A0
        dV_exp = (n + k + 1) * oriented_volume(surface, density, cone) if not critical else None
        dH = d1_five(H1, dt)
        extra["dH_f_max_error"] = float(np.abs(dH + geo.H_f).max())
    else:
        u = (n + k) * np.ones(len(w))
        if isinstance(variation, RescaledParallel):
            u = barbosa_test_field(surface, density, cone).values
        dA_exp = -fsum(geo.H_f * u * w)
        dV_exp = -fsum(u * w)
    checks = [(dA, dA_half)]
    if d2 is not None and isinstance(variation, Normal):
        checks.append((d2, d2_half))
    rel = max(abs(a - b) / max(abs(a), abs(b), 1e-300) if abs(a - b) > 1e-9 * max(1.0, abs(a)) else 0.0
              for a, b in checks)
    if rel > richardson_tol:
        warnings.warn(f"finite-difference steps disagree by {rel:.2e}", RuntimeWarning, stacklevel=2)
    return VariationDiagnostics(
        kind=type(variation).__name__, dt=dt, dA=dA, dV=dV, d2=d2, dA_expected=dA_exp,
        dV_expected=dV_exp, d2_expected=d2_exp, richardson_rel=rel, reliable=rel <= richardson_tol,
        dH_f=dH, extra=extra,
    )


@dataclass
class RescaledParallelDiagnostics:
    dt: float
    volume_drift: float
    normal_velocity_error: float
    scale_rate: float
    H_f_mean: float
    warning: Optional[str] = None

    def to_dict(self) -> dict:
        return asdict(self)


def rescaled_parallel(surface, density, cone, dt: Optional[float] = None) -> RescaledParallelDiagnostics:
    """Volume-preserving parallel variation; checks its normal speed is ``n + k + H_f g``."""
    geo = geometry(surface, density, cone)
    n, k = geo.n, geo.k
    if abs(n + k + 1) < 1e-12:
        raise CriticalDegree("rescaled parallel variation needs k != -(n+1)")
    dt = 1e-3 * surface.diameter if dt is None else dt
    u = barbosa_test_field(surface, density, cone)
    move = _deformer(surface, density, cone, RescaledParallel())
    V0 = oriented_volume(surface, density, cone)
    Ys, drift = [], 0.0
    for j in STENCIL_OFFSETS:
        Y = move(j * dt)
        S = _deformed(surface, density, cone, Y)
        drift = max(drift, abs(oriented_volume(S, density, cone) - V0) / abs(V0))
        Ys.append(Y)
    vel = d1_five(Ys, dt)
    normal_speed = (vel * geo.normal).sum(1)
    err = float(np.abs(normal_speed - u.values).max())
    # scale rate s'(0) from the tangential-free part of the velocity
    s_rate = float(np.median(((vel - (n + k) * geo.normal) * geo.points).sum(1)
                             / (geo.points * geo.points).sum(1)))
    return RescaledParallelDiagnostics(dt, drift, err, s_rate, float(np.mean(geo.H_f)), u.warning)


# ------------------------------------------------------------ rigidity

def umbilicity_gap(surface, density, cone) -> ScalarField:
    """``Ric_f(N,N) + |sigma|^2 - H_f^2/(n+k)`` per sample.

    ``meta["lower_bound"]`` holds ``n/(k(n+k)) (<grad psi, N> + k H)^2``, which
    the gap dominates wherever ``Ric_f^k >= 0`` (the caller certifies that).
    """
    geo = geometry(surface, density, cone)
    n, k = geo.n, geo.k
    if -n <= k <= 0:
        raise WrongDegreeRange(f"needs k < -n or k > 0, got k = {k}")
    gap = geo.potential - geo.H_f ** 2 / (n + k)
    gN = (geo.grad_psi * geo.normal).sum(1)
    bound = n / (k * (n + k)) * (gN + k * geo.H) ** 2
    return ScalarField(gap, meta={"lower_bound": bound})


def quintic_step(s):
    """C^2 step: 0 for ``s <= 1/2``, 1 for ``s >= 1``; returns value and derivative."""
    x = np.clip(2 * np.asarray(s, float) - 1, 0.0, 1.0)
    val = x ** 3 * (10 - 15 * x + 6 * x * x)
    der = 30 * x * x * (1 - x) ** 2 * 2
    return val, der


@dataclass
class CutoffDecay:
    eps: list
    energies: list
    slope: float
    expected: float
    monotone: bool

    def to_dict(self) -> dict:
        return asdict(self)


def cutoff_energy(surface, density, cone, eps: float, grid: Optional[int] = None) -> float:
    """``int |grad_Sigma phi_eps|^2 da_f`` for ``phi_eps(p) = step(|p|/eps)``.

    Integrated over the band ``eps/2 <= |p| <= eps`` where the gradient lives.
    """
    band = restrict_band(surface, 0.5 * eps, eps, grid)
    geo = geometry(band, density, cone)
    P, N = geo.points, geo.normal
    r = np.linalg.norm(P, axis=1)
    _, der = quintic_step(r / eps)
    radial_tangential2 = 1.0 - ((P * N).sum(1) / r) ** 2
    return fsum((der / eps) ** 2 * radial_tangential2 * geo.weights)


def cutoff_energy_decay(surface, density, cone, eps_list: Sequence[float], grid: Optional[int] = None) -> CutoffDecay:
    """Log-log slope of the cutoff energies; expected ``n + k - 2``."""
    n, k = surface.n, density.k
    if n + k <= 2:
        raise HypothesisViolated("the cutoff energy decays only when n + k > 2")
    if k < 0:
        raise HypothesisViolated("the cutoff argument needs k >= 0")
    eps = sorted(float(e) for e in eps_list)
    E = [cutoff_energy(surface, density, cone, e, grid) for e in eps]
    slope = float(np.polyfit(np.log(eps), np.log(E), 1)[0])
    return CutoffDecay(eps, E, slope, float(n + k - 2), all(a < b for a, b in zip(E, E[1:])))
