"""Tensor-product spectral charts (curves and surfaces)."""
from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from ..spectral import ChebyshevAxis, FourierAxis
from .base import BoundarySamples, DiscreteHypersurface, Shape

END_KINDS = ("free", "puncture", "open", "pole")


def _rot90(v: np.ndarray) -> np.ndarray:
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


class ParametricSurface(DiscreteHypersurface):
    """Hypersurface given by nodal positions on a tensor grid of spectral axes.

    :param axes: one axis for curves, two for surfaces
    :param X: positions, shape ``grid + (d,)``
    :param ends: map ``(axis, side) -> kind`` for interval axes; kinds are
        ``"free"`` (on the cone boundary), ``"puncture"`` (edge of an excluded
        vertex neighbourhood), ``"open"`` (plain edge) and ``"pole"`` (chart
        singularity, no boundary)
    :param orientation: +1 or -1 multiplier on the chart normal
    :param chart: optional callable ``chart(*params) -> X`` used to resample
    """

    backend = "parametric"

    def __init__(self, axes: Sequence, X: np.ndarray, ends: Optional[dict] = None,
                 orientation: int = 1, chart: Optional[Callable] = None):
        super().__init__()
        self.axes = list(axes)
        self.X = np.asarray(X, float)
        self.n = len(self.axes)
        self.ambient_dim = self.X.shape[-1]
        if self.n != self.ambient_dim - 1:
            raise ValueError("need n = ambient_dim - 1 axes")
        if self.X.shape[:-1] != tuple(a.n for a in self.axes):
            raise ValueError("positions do not match the grid")
        self.ends = dict(ends or {})
        for (i, side), kind in self.ends.items():
            if kind not in END_KINDS:
                raise ValueError(f"unknown end kind {kind!r}")
            if self.axes[i].periodic:
                raise ValueError("periodic axes have no ends")
        for i, a in enumerate(self.axes):
            if getattr(a, "polar", False):
                if i != 0 or self.n != 2 or not self.axes[1].periodic:
                    raise ValueError("a polar axis must come first, followed by a periodic axis")
                self.ends[(0, -1)] = "pole"
            if not a.periodic:
                for side in (-1, 1):
                    self.ends.setdefault((i, side), "open")
        self.orientation = 1 if orientation >= 0 else -1
        self.chart = chart

    # ------------------------------------------------------------ basics
    @property
    def grid_shape(self):
        return self.X.shape[:-1]

    @property
    def positions(self) -> np.ndarray:
        return self.X.reshape(-1, self.ambient_dim)

    def grid(self, values) -> np.ndarray:
        v = np.asarray(values, float)
        return v.reshape(self.grid_shape + v.shape[1:])

    def params(self):
        return np.meshgrid(*[a.nodes for a in self.axes], indexing="ij")

    def with_positions(self, X) -> "ParametricSurface":
        X = np.asarray(X, float).reshape(self.X.shape)
        out = ParametricSurface(self.axes, X, self.ends, self.orientation, None)
        out.meta = dict(self.meta)
        return out

    def flipped(self) -> "ParametricSurface":
        out = ParametricSurface(self.axes, self.X, self.ends, -self.orientation, self.chart)
        out.meta = dict(self.meta)
        return out

    def d(self, arr, axis: int, order: int = 1, chop: bool = True) -> np.ndarray:
        return self.axes[axis].derivative(arr, axis=axis, order=order, chop=chop)

    # ------------------------------------------------------------ metric
    def _frames(self, X):
        n = self.n
        dX = [self.d(X, a) for a in range(n)]
        ddX = [[None] * n for _ in range(n)]
        for a in range(n):
            ddX[a][a] = self.d(X, a, 2)
            for b in range(a + 1, n):
                ddX[a][b] = ddX[b][a] = self.d(dX[a], b)
        return dX, ddX

    def _normal(self, dX):
        if self.n == 1:
            t = dX[0]
            N = _rot90(t)
        else:
            N = np.cross(dX[0], dX[1])
        return self.orientation * N / np.linalg.norm(N, axis=-1, keepdims=True)

    @staticmethod
    def _metric(dX):
        G = np.einsum("a...i,b...i->...ab", np.array(dX), np.array(dX))
        return G, np.linalg.inv(G), np.sqrt(np.linalg.det(G))

    def _compute_shape(self) -> Shape:
        X = self.X
        dX, ddX = self._frames(X)
        N = self._normal(dX)
        G, Gi, sq = self._metric(dX)
        n = self.n
        h2 = np.empty(G.shape)
        for a in range(n):
            for b in range(n):
                h2[..., a, b] = (ddX[a][b] * N).sum(-1)
        S = Gi @ h2
        H = np.trace(S, axis1=-2, axis2=-1) / n
        sigma2 = np.einsum("...ab,...ba->...", S, S)
        w = self.axes[0].weights
        for a in self.axes[1:]:
            w = np.multiply.outer(w, a.weights)
        area = (w * sq).reshape(-1)
        h = max(float(np.linalg.norm(dX[a], axis=-1).max()) * self.axes[a].spacing() for a in range(n))
        self._cache = dict(dX=dX, ddX=ddX, G=G, Gi=Gi, sq=sq)
        bd = self._boundary(X, dX)
        return Shape(
            points=self.positions.copy(),
            normal=N.reshape(-1, self.ambient_dim),
            H=H.reshape(-1),
            sigma2=sigma2.reshape(-1),
            area_weights=area,
            boundary=bd,
            h=h,
        )

    # ------------------------------------------------------------ boundary
    def _boundary_ends(self):
        return [(i, s, kind) for (i, s), kind in sorted(self.ends.items()) if kind != "pole"]

    def _end_trace(self, arr, i, side):
        return self.axes[i].end_values(arr, side, axis=i)

    def _end_deriv(self, arr, i, side):
        return self.axes[i].end_derivative(arr, side, axis=i)

    def _boundary(self, X, dX) -> BoundarySamples:
        pts, nor, con, dl, free = [], [], [], [], []
        for i, side, kind in self._boundary_ends():
            Xb = self._end_trace(X, i, side)
            Xi = self._end_deriv(X, i, side)
            if self.n == 1:
                Xb, Xi = Xb[None, :], Xi[None, :]
                N = self.orientation * _rot90(Xi)
                nu = -side * Xi
                w = np.ones(1)
            else:
                j = 1 - i
                if not self.axes[j].periodic:
                    raise NotImplementedError("boundaries on two interval axes are not supported")
                Xj = self.axes[j].derivative(Xb, axis=0)
                pair = (Xi, Xj) if i == 0 else (Xj, Xi)
                N = self.orientation * np.cross(pair[0], pair[1])
                tj = Xj / np.linalg.norm(Xj, axis=-1, keepdims=True)
                nu = -side * (Xi - (Xi * tj).sum(-1, keepdims=True) * tj)
                w = np.linalg.norm(Xj, axis=-1) * self.axes[j].weights
            pts.append(Xb)
            nor.append(N / np.linalg.norm(N, axis=-1, keepdims=True))
            con.append(nu / np.linalg.norm(nu, axis=-1, keepdims=True))
            dl.append(w)
            free.append(np.full(Xb.shape[0], kind == "free"))
        if not pts:
            return BoundarySamples.empty(self.ambient_dim)
        return BoundarySamples(np.concatenate(pts), np.concatenate(nor), np.concatenate(con),
                               np.concatenate(dl), np.concatenate(free))

    def boundary_trace(self, values) -> np.ndarray:
        u = self.grid(values)
        out = []
        for i, side, _ in self._boundary_ends():
            out.append(np.atleast_1d(self._end_trace(u, i, side)).reshape(-1, *u.shape[self.n:]))
        if not out:
            return np.zeros((0,) + u.shape[self.n:])
        return np.concatenate(out)

    def boundary_normal_derivative(self, values) -> np.ndarray:
        """``<grad u, conormal>`` at boundary samples."""
        u = self.grid(values)
        self.shape()
        bd = self.shape().boundary
        out = []
        for i, side, _ in self._boundary_ends():
            Xi = self._end_deriv(self.X, i, side)
            ui = self._end_deriv(u, i, side)
            if self.n == 1:
                grad = ui / (Xi @ Xi) * Xi
                out.append(np.atleast_2d(grad))
            else:
                j = 1 - i
                Xb = self._end_trace(self.X, i, side)
                Xj = self.axes[j].derivative(Xb, axis=0)
                uj = self.axes[j].derivative(self._end_trace(u, i, side), axis=0)
                dXb = [Xi, Xj] if i == 0 else [Xj, Xi]
                du = [ui, uj] if i == 0 else [uj, ui]
                G, Gi, _ = self._metric(dXb)
                coef = np.einsum("...ab,a...->...b", Gi, np.array(du))
                grad = sum(coef[..., b, None] * dXb[b] for b in range(2))
                out.append(grad)
        if not out:
            return np.zeros(0)
        grad = np.concatenate(out)
        return (grad * bd.conormal).sum(-1)

    # ------------------------------------------------------------ calculus
    def _metric_cache(self):
        self.shape()
        return self._cache

    def gradient(self, values) -> np.ndarray:
        c = self._metric_cache()
        u = self.grid(values)
        du = np.array([self.d(u, a) for a in range(self.n)])
        coef = np.einsum("...ab,a...->...b", c["Gi"], du)
        grad = sum(coef[..., b, None] * c["dX"][b] for b in range(self.n))
        return grad.reshape(-1, self.ambient_dim)

    def laplacian(self, values) -> np.ndarray:
        """Laplace-Beltrami in strong form ``g^{ab}(u_ab - Gamma^c_ab u_c)``."""
        c = self._metric_cache()
        u = self.grid(values)
        n = self.n
        du = [self.d(u, a) for a in range(n)]
        Gi, dX, ddX = c["Gi"], c["dX"], c["ddX"]
        grad = sum((Gi[..., a, b] * du[a])[..., None] * dX[b] for a in range(n) for b in range(n))
        out = np.zeros(u.shape)
        for a in range(n):
            for b in range(n):
                uab = self.d(u, a, 2) if a == b else self.d(du[a], b)
                chris = (ddX[a][b] * grad).sum(-1)
                out += Gi[..., a, b] * (uab - chris)
        return out.reshape(-1)

    def divergence(self, vectors) -> np.ndarray:
        """Tangential divergence ``g^{ab} <d_a V, X_b>`` of an ambient vector field."""
        c = self._metric_cache()
        V = self.grid(vectors)
        out = np.zeros(self.grid_shape)
        for a in range(self.n):
            dV = self.d(V, a)
            for b in range(self.n):
                out += c["Gi"][..., a, b] * (dV * c["dX"][b]).sum(-1)
        return out.reshape(-1)

    # ------------------------------------------------------------ resampling
    def resample(self, axes: Sequence) -> "ParametricSurface":
        if self.chart is None:
            raise ValueError("resampling needs a chart")
        P = np.meshgrid(*[a.nodes for a in axes], indexing="ij")
        X = self.chart(*P)
        out = ParametricSurface(axes, X, self.ends, self.orientation, self.chart)
        out.meta = dict(self.meta)
        return out
