"""Polylines (n=1) and triangle meshes (n=2) with P1 calculus.

Curvature on polylines is the Menger curvature of consecutive vertex
triples (exact on circles); on triangle meshes it comes from a local
cubic height-function fit over the two-ring of each vertex, which stays
second-order accurate at boundary vertices as well.
"""
from __future__ import annotations

from math import factorial
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .base import BoundarySamples, DiscreteHypersurface, Shape


def _rot90(v):
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def _cross2(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _lagrange_d(t1, t2):
    """Derivative weights at t=0 of the quadratic through nodes (0, t1, t2)."""
    w0 = -1.0 / t1 - 1.0 / t2
    w1 = -t2 / (t1 * (t1 - t2))
    w2 = -t1 / (t2 * (t2 - t1))
    return w0, w1, w2


class SimplicialSurface(DiscreteHypersurface):
    """Simplicial hypersurface.

    :param vertices: (m, d) positions
    :param cells: (c, n+1) vertex indices; edges for curves (consistently
        oriented chain), triangles for surfaces
    :param orientation: +1 keeps the normal induced by cell ordering
        (left normal for curves), -1 flips it
    :param cone: optional cone used to mark free-boundary vertices
    :param tol_boundary: distance to the cone boundary below which a
        boundary vertex counts as lying on it
    """

    backend = "simplicial"

    def __init__(self, vertices, cells, orientation: int = 1, cone=None, tol_boundary: float = 1e-8):
        super().__init__()
        self.V = np.asarray(vertices, float)
        self.cells = np.asarray(cells, dtype=np.int64)
        self.ambient_dim = self.V.shape[1]
        self.n = self.cells.shape[1] - 1
        if self.n != self.ambient_dim - 1:
            raise ValueError("cells must have ambient_dim vertices")
        self.orientation = 1 if orientation >= 0 else -1
        self.cone = cone
        self.tol_boundary = float(tol_boundary)
        self._topology()

    # ------------------------------------------------------------ topology
    def _topology(self):
        m = self.V.shape[0]
        if self.n == 1:
            E = self.cells
            deg = np.bincount(E.ravel(), minlength=m)
            self.prev = np.full(m, -1)
            self.next = np.full(m, -1)
            self.prev[E[:, 1]] = E[:, 0]
            self.next[E[:, 0]] = E[:, 1]
            self.boundary_vertices = np.flatnonzero(deg == 1)
            self.boundary_edges = np.zeros((0, 2), np.int64)
        else:
            F = self.cells
            e = np.concatenate([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]])
            key = np.sort(e, axis=1)
            uniq, inv, cnt = np.unique(key, axis=0, return_inverse=True, return_counts=True)
            single = cnt[inv.ravel()] == 1
            self.boundary_edges = e[single]
            self.boundary_vertices = np.unique(self.boundary_edges)
            self.edges = uniq
            opp = np.concatenate([F[:, 2], F[:, 0], F[:, 1]])
            self._boundary_opposite = opp[single]
        if self.cone is not None and self.cone.has_boundary and len(self.boundary_vertices):
            P = self.V[self.boundary_vertices]
            r = np.linalg.norm(P, axis=1)
            bd = np.clip(self.cone.boundary_distance(P), -np.pi / 2, np.pi / 2)
            dist = np.abs(r * np.sin(bd))
            self.free_mask = dist <= self.tol_boundary * np.maximum(1.0, r)
        else:
            self.free_mask = np.zeros(len(self.boundary_vertices), bool)

    @property
    def positions(self) -> np.ndarray:
        return self.V

    def with_positions(self, X) -> "SimplicialSurface":
        out = SimplicialSurface(np.asarray(X, float).reshape(self.V.shape), self.cells,
                                self.orientation, self.cone, self.tol_boundary)
        out.free_mask = self.free_mask.copy()
        out.meta = dict(self.meta)
        return out

    def flipped(self) -> "SimplicialSurface":
        out = SimplicialSurface(self.V, self.cells, -self.orientation, self.cone, self.tol_boundary)
        out.meta = dict(self.meta)
        return out

    # ------------------------------------------------------------ element data
    def element_data(self):
        """Per-cell measure and P1 basis gradients, shape (c, n+1, d)."""
        P = self.V[self.cells]
        if self.n == 1:
            t = P[:, 1] - P[:, 0]
            L = np.linalg.norm(t, axis=1)
            g1 = t / (L**2)[:, None]
            return L, np.stack([-g1, g1], axis=1)
        E1 = P[:, 1] - P[:, 0]
        E2 = P[:, 2] - P[:, 0]
        G = np.stack([np.stack([(E1 * E1).sum(1), (E1 * E2).sum(1)], 1),
                      np.stack([(E2 * E1).sum(1), (E2 * E2).sum(1)], 1)], 1)
        Gi = np.linalg.inv(G)
        g1 = Gi[:, 0, 0, None] * E1 + Gi[:, 0, 1, None] * E2
        g2 = Gi[:, 1, 0, None] * E1 + Gi[:, 1, 1, None] * E2
        A = 0.5 * np.linalg.norm(np.cross(E1, E2), axis=1)
        return A, np.stack([-g1 - g2, g1, g2], axis=1)

    def _lumped(self, meas):
        m = self.V.shape[0]
        w = np.zeros(m)
        np.add.at(w, self.cells.ravel(), np.repeat(meas / (self.n + 1), self.n + 1))
        return w

    def _vertex_average(self, per_cell, meas):
        m = self.V.shape[0]
        acc = np.zeros((m,) + per_cell.shape[1:])
        wt = np.zeros(m)
        for c in range(self.n + 1):
            np.add.at(acc, self.cells[:, c], per_cell * meas.reshape((-1,) + (1,) * (per_cell.ndim - 1)))
            np.add.at(wt, self.cells[:, c], meas)
        return acc / wt.reshape((-1,) + (1,) * (per_cell.ndim - 1))

    # ------------------------------------------------------------ shape
    def _compute_shape(self) -> Shape:
        if self.n == 1:
            return self._shape_curve()
        return self._shape_mesh()

    def _shape_curve(self) -> Shape:
        V = self.V
        m = V.shape[0]
        T = np.zeros_like(V)
        kappa = np.full(m, np.nan)
        interior = (self.prev >= 0) & (self.next >= 0)
        i = np.flatnonzero(interior)
        a, b = self.prev[i], self.next[i]
        L1 = np.linalg.norm(V[i] - V[a], axis=1)
        L2 = np.linalg.norm(V[b] - V[i], axis=1)
        w0, w1, w2 = _lagrange_d(-L1, L2)
        T[i] = w0[:, None] * V[i] + w1[:, None] * V[a] + w2[:, None] * V[b]
        chord = np.linalg.norm(V[b] - V[a], axis=1)
        kappa[i] = 2 * _cross2(V[i] - V[a], V[b] - V[i]) / (L1 * L2 * chord)
        for v in self.boundary_vertices:
            if self.next[v] >= 0:  # chain start
                j = self.next[v]
                k = self.next[j]
                s = 1.0
            else:
                j = self.prev[v]
                k = self.prev[j]
                s = -1.0
            t1 = s * np.linalg.norm(V[j] - V[v])
            t2 = t1 + s * np.linalg.norm(V[k] - V[j])
            w0, w1, w2 = _lagrange_d(t1, t2)
            T[v] = w0 * V[v] + w1 * V[j] + w2 * V[k]
            kj, kk = kappa[j], kappa[k]
            if np.isnan(kk):
                kappa[v] = kj
            else:
                kappa[v] = kj + (kj - kk) * abs(t1) / abs(t2 - t1)
        T /= np.linalg.norm(T, axis=1, keepdims=True)
        N = self.orientation * _rot90(T)
        H = self.orientation * kappa
        L, _ = self.element_data()
        weights = self._lumped(L)
        bv = self.boundary_vertices
        if len(bv):
            nu = np.where((self.next[bv] >= 0)[:, None], T[bv], -T[bv])
            bd = BoundarySamples(V[bv].copy(), N[bv].copy(), nu, np.ones(len(bv)), self.free_mask.copy())
        else:
            bd = BoundarySamples.empty(2)
        return Shape(V.copy(), N, H, H**2, weights, bd, float(L.max()))

    def _shape_mesh(self) -> Shape:
        V, F = self.V, self.cells
        m = V.shape[0]
        P = V[F]
        fn = np.cross(P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]) * self.orientation
        area = 0.5 * np.linalg.norm(fn, axis=1)
        fn = fn / (2 * area)[:, None]
        N0 = np.zeros_like(V)
        for c in range(3):
            e1 = P[:, (c + 1) % 3] - P[:, c]
            e2 = P[:, (c + 2) % 3] - P[:, c]
            ang = np.arccos(np.clip((e1 * e2).sum(1) / np.linalg.norm(e1, axis=1) / np.linalg.norm(e2, axis=1), -1, 1))
            np.add.at(N0, F[:, c], ang[:, None] * fn)
        N0 /= np.linalg.norm(N0, axis=1, keepdims=True)

        rows = np.concatenate([self.edges[:, 0], self.edges[:, 1], np.arange(m)])
        cols = np.concatenate([self.edges[:, 1], self.edges[:, 0], np.arange(m)])
        A = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(m, m))
        A2 = (A @ A).tocsr()
        N = np.zeros_like(V)
        H = np.zeros(m)
        s2 = np.zeros(m)
        for v in range(m):
            nb = A2.indices[A2.indptr[v]:A2.indptr[v + 1]]
            nb = nb[nb != v]
            n0 = N0[v]
            helper = np.eye(3)[int(np.argmin(np.abs(n0)))]
            t1 = helper - helper @ n0 * n0
            t1 /= np.linalg.norm(t1)
            t2 = np.cross(n0, t1)
            D = V[nb] - V[v]
            x, y, z = D @ t1, D @ t2, D @ n0
            cols_ = [x, y, 0.5 * x * x, x * y, 0.5 * y * y]
            if len(nb) >= 12:
                cols_ += [x**3, x * x * y, x * y * y, y**3]
            B = np.stack(cols_, axis=1)
            scale = np.sqrt((x * x + y * y).mean())
            wts = 1.0 / (1.0 + (x * x + y * y) / scale**2)
            coef = np.linalg.lstsq(B * wts[:, None], z * wts, rcond=None)[0]
            a_, b_, c_, d_, e_ = coef[:5]
            q = np.sqrt(1 + a_ * a_ + b_ * b_)
            N[v] = (n0 - a_ * t1 - b_ * t2) / q
            I = np.array([[1 + a_ * a_, a_ * b_], [a_ * b_, 1 + b_ * b_]])
            II = np.array([[c_, d_], [d_, e_]]) / q
            S = np.linalg.solve(I, II)
            H[v] = 0.5 * np.trace(S)
            s2[v] = np.trace(S @ S)
        weights = self._lumped(area)
        h = float(np.linalg.norm(V[self.edges[:, 0]] - V[self.edges[:, 1]], axis=1).max())
        bd = self._mesh_boundary(N)
        return Shape(V.copy(), N, H, s2, weights, bd, h)

    def _mesh_boundary(self, N) -> BoundarySamples:
        bv = self.boundary_vertices
        if len(bv) == 0:
            return BoundarySamples.empty(3)
        V = self.V
        m = V.shape[0]
        nu = np.zeros((m, 3))
        dl = np.zeros(m)
        for (i, j), k in zip(self.boundary_edges, self._boundary_opposite):
            e = V[j] - V[i]
            L = np.linalg.norm(e)
            t = e / L
            w = V[k] - V[i]
            w = w - (w @ t) * t
            w /= np.linalg.norm(w)
            nu[i] += L * w
            nu[j] += L * w
            dl[i] += 0.5 * L
            dl[j] += 0.5 * L
        nu = nu[bv]
        nu = nu - (nu * N[bv]).sum(1, keepdims=True) * N[bv]
        nu /= np.linalg.norm(nu, axis=1, keepdims=True)
        return BoundarySamples(V[bv].copy(), N[bv].copy(), nu, dl[bv], self.free_mask.copy())

    # ------------------------------------------------------------ calculus
    def gradient(self, values) -> np.ndarray:
        u = np.asarray(values, float)
        meas, G = self.element_data()
        per = np.einsum("ci,cid->cd", u[self.cells], G)
        return self._vertex_average(per, meas)

    def divergence(self, vectors) -> np.ndarray:
        X = np.asarray(vectors, float)
        meas, G = self.element_data()
        per = np.einsum("cid,cid->c", X[self.cells], G)
        return self._vertex_average(per, meas)

    def stiffness(self, weight=None) -> sp.csr_matrix:
        """P1 stiffness ``int w <grad phi_i, grad phi_j>`` with ``w`` P1-interpolated."""
        meas, G = self.element_data()
        wbar = np.ones(len(meas)) if weight is None else np.asarray(weight, float)[self.cells].mean(1)
        local = np.einsum("cid,cjd->cij", G, G) * (meas * wbar)[:, None, None]
        return self._scatter(local)

    def mass(self, weight=None) -> sp.csr_matrix:
        """Consistent P1 mass ``int w phi_i phi_j`` with ``w`` P1-interpolated (exact)."""
        meas, _ = self.element_data()
        k = self.n + 1
        w = np.ones(self.V.shape[0]) if weight is None else np.asarray(weight, float)
        wc = w[self.cells]
        # int phi_i phi_j phi_l = meas * n! a!b!c! / (n + 2)!
        local = np.zeros((len(meas), k, k))
        for i in range(k):
            for j in range(k):
                for l in range(k):
                    mult = np.bincount([i, j, l], minlength=k)
                    local[:, i, j] += wc[:, l] * _simplex_moment(mult, self.n)
        local *= meas[:, None, None]
        return self._scatter(local)

    def _scatter(self, local) -> sp.csr_matrix:
        m = self.V.shape[0]
        k = self.n + 1
        rows = np.repeat(self.cells, k, axis=1).ravel()
        cols = np.tile(self.cells, (1, k)).ravel()
        return sp.csr_matrix((local.ravel(), (rows, cols)), shape=(m, m))

    def boundary_mass(self, weight, free_only: bool = True) -> sp.csr_matrix:
        """``int_{boundary} w phi_i phi_j dl`` over (free) boundary with ``w`` P1-interpolated."""
        m = self.V.shape[0]
        w = np.asarray(weight, float)
        bv = self.boundary_vertices
        keep = self.free_mask if free_only else np.ones(len(bv), bool)
        if self.n == 1:
            idx = bv[keep]
            return sp.csr_matrix((w[idx], (idx, idx)), shape=(m, m))
        free_set = set(bv[keep].tolist())
        rows, cols, vals = [], [], []
        for i, j in self.boundary_edges:
            if i not in free_set or j not in free_set:
                continue
            L = np.linalg.norm(self.V[j] - self.V[i])
            wi, wj = w[i], w[j]
            # int over a segment of phi_a phi_b (w_i phi_i + w_j phi_j)
            mii = L * (3 * wi + wj) / 12
            mjj = L * (wi + 3 * wj) / 12
            mij = L * (wi + wj) / 12
            rows += [i, j, i, j]
            cols += [i, j, j, i]
            vals += [mii, mjj, mij, mij]
        return sp.csr_matrix((vals, (rows, cols)), shape=(m, m))

    def laplacian(self, values) -> np.ndarray:
        u = np.asarray(values, float)
        K = self.stiffness()
        return -(K @ u) / self.shape().area_weights

    def boundary_trace(self, values) -> np.ndarray:
        return np.asarray(values, float)[self.boundary_vertices]

    def boundary_normal_derivative(self, values) -> np.ndarray:
        g = self.gradient(values)[self.boundary_vertices]
        return (g * self.shape().boundary.conormal).sum(1)


def _simplex_moment(mult, n: int) -> float:
    """``int_simplex prod phi^mult / |simplex|`` for barycentric coordinates."""
    num = 1
    for a in mult:
        num *= factorial(int(a))
    return factorial(n) * num / factorial(n + int(sum(mult)))
