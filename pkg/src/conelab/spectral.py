"""One-dimensional spectral axes for tensor-product charts.

Interval axes use Chebyshev points of the first kind (no node on the
interval ends) with Fejer quadrature; periodic axes use an odd number of
equispaced points.  Derivatives are taken in coefficient space after
dropping coefficients at round-off level, which keeps second derivatives
accurate to ~1e-10 independently of the node count.
"""
from __future__ import annotations

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.fft import dct

CHOP = 1e-14


def _chop(c: np.ndarray, axis: int) -> np.ndarray:
    scale = np.abs(c).max(axis=axis, keepdims=True)
    return np.where(np.abs(c) > CHOP * scale, c, 0.0)


class ChebyshevAxis:
    """Chebyshev-Gauss nodes on ``[a, b]``.

    :param n: number of nodes
    :param a: left end of the parameter interval
    :param b: right end of the parameter interval
    """

    periodic = False

    def __init__(self, n: int, a: float, b: float):
        if n < 2:
            raise ValueError("an interval axis needs at least two nodes")
        self.n, self.a, self.b = int(n), float(a), float(b)
        j = np.arange(self.n)
        theta = (2 * j + 1) * np.pi / (2 * self.n)
        # ascending nodes x_j = -cos(theta_j)
        self.nodes = 0.5 * (self.a + self.b) - 0.5 * (self.b - self.a) * np.cos(theta)
        l = np.arange(1, self.n // 2 + 1)
        s = (np.cos(2 * np.outer(theta, l)) / (4 * l**2 - 1)).sum(axis=1)
        self.weights = 0.5 * (self.b - self.a) * (2.0 / self.n) * (1 - 2 * s)
        self._sign = (-1.0) ** np.arange(self.n)
        self._D = None

    @property
    def length(self) -> float:
        return self.b - self.a

    def coefficients(self, values: np.ndarray, axis: int = 0) -> np.ndarray:
        """Chebyshev coefficients along ``axis`` (moved to the front)."""
        v = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
        c = dct(v, type=2, axis=0) / self.n
        c[0] *= 0.5
        return c * self._sign.reshape((-1,) + (1,) * (c.ndim - 1))

    def derivative(self, values: np.ndarray, axis: int = 0, order: int = 1, chop: bool = True):
        """Spectral derivative of ``values`` along ``axis``."""
        c = self.coefficients(values, axis)
        if chop:
            c = _chop(c, 0)
        d = C.chebder(c, m=order, axis=0) * (2.0 / self.length) ** order
        pad = np.zeros((order,) + d.shape[1:])
        d = np.concatenate([d, pad], axis=0)
        return np.moveaxis(self._synth(d), 0, axis)

    def _synth(self, c: np.ndarray) -> np.ndarray:
        """Values at the nodes from coefficients (first axis)."""
        c = c * self._sign.reshape((-1,) + (1,) * (c.ndim - 1))
        c = c.copy()
        c[0] *= 2.0
        return dct(c, type=3, axis=0) * 0.5

    def end_row(self, side: int) -> np.ndarray:
        """Row vector ``e`` with ``e @ values`` = interpolant at ``b`` (side=+1) or ``a`` (side=-1)."""
        t = np.ones(self.n) if side > 0 else self._sign.copy()
        eye = np.eye(self.n)
        return t @ self.coefficients(eye, 0)

    def end_values(self, values: np.ndarray, side: int, axis: int = 0) -> np.ndarray:
        return np.tensordot(self.end_row(side), np.asarray(values, float), axes=([0], [axis]))

    def end_derivative(self, values: np.ndarray, side: int, axis: int = 0) -> np.ndarray:
        c = _chop(self.coefficients(values, axis), 0)
        d = C.chebder(c, axis=0) * (2.0 / self.length)
        t = np.ones(d.shape[0]) if side > 0 else (-1.0) ** np.arange(d.shape[0])
        return np.tensordot(t, d, axes=([0], [0]))

    def diff_matrix(self) -> np.ndarray:
        """Exact nodal differentiation matrix (linear, no chopping)."""
        if self._D is None:
            self._D = self.derivative(np.eye(self.n), axis=0, chop=False)
        return self._D

    def interpolate(self, values: np.ndarray, x: np.ndarray, axis: int = 0) -> np.ndarray:
        """Evaluate the interpolant at parameter values ``x``."""
        c = self.coefficients(values, axis)
        t = 2 * (np.asarray(x, float) - self.a) / self.length - 1
        V = C.chebvander(t, self.n - 1)
        return np.moveaxis(np.tensordot(V, c, axes=([1], [0])), 0, axis)

    def spacing(self) -> float:
        """Largest gap between neighbouring nodes (including the ends)."""
        pts = np.concatenate([[self.a], self.nodes, [self.b]])
        return float(np.diff(pts).max())


class FourierAxis:
    """Equispaced periodic nodes on ``[0, 2*pi)``.

    :param n: requested number of nodes
    :param force_odd: bump even ``n`` to the next odd number (avoids the
        Nyquist mode); polar charts need an even count and pass ``False``
    """

    periodic = True
    polar = False

    def __init__(self, n: int, force_odd: bool = True):
        n = int(n)
        if n < 3:
            raise ValueError("a periodic axis needs at least three nodes")
        self.n = n + 1 if (force_odd and n % 2 == 0) else n
        self.a, self.b = 0.0, 2 * np.pi
        self.nodes = 2 * np.pi * np.arange(self.n) / self.n
        self.weights = np.full(self.n, 2 * np.pi / self.n)
        self._k = np.fft.fftfreq(self.n, 1.0 / self.n)
        self._D = None

    @property
    def length(self) -> float:
        return 2 * np.pi

    def derivative(self, values: np.ndarray, axis: int = 0, order: int = 1, chop: bool = True):
        v = np.asarray(values, dtype=float)
        F = np.fft.fft(v, axis=axis)
        if chop:
            F = _chop(F, axis)
        mult = (1j * self._k) ** order
        if self.n % 2 == 0 and order % 2 == 1:
            mult[self.n // 2] = 0.0
        shape = [1] * v.ndim
        shape[axis] = self.n
        F = F * mult.reshape(shape)
        return np.fft.ifft(F, axis=axis).real

    def diff_matrix(self) -> np.ndarray:
        if self._D is None:
            self._D = self.derivative(np.eye(self.n), axis=0, chop=False)
        return self._D

    def interpolate(self, values: np.ndarray, x: np.ndarray, axis: int = 0) -> np.ndarray:
        v = np.moveaxis(np.asarray(values, float), axis, 0)
        F = np.fft.fft(v, axis=0) / self.n
        k = self._k.copy()
        if self.n % 2 == 0:
            F[self.n // 2] *= 0.5
            F = np.concatenate([F, F[self.n // 2: self.n // 2 + 1]], axis=0)
            k = np.concatenate([k, [self.n // 2]])
        E = np.exp(1j * np.outer(np.asarray(x, float), k))
        return np.moveaxis(np.tensordot(E, F, axes=([1], [0])).real, 0, axis)

    def spacing(self) -> float:
        return 2 * np.pi / self.n


class PolarAxis:
    """Polar angle ``theta`` in ``(0, beta]`` with the chart pole at 0.

    Nodes are the positive half of ``2n`` Chebyshev points on
    ``[-beta, beta]``.  A field on the polar grid extends across the pole
    through ``F(-theta, phi) = F(theta, phi + pi)``, so theta-derivatives are
    taken on the doubled grid; the half-turn in ``phi`` is applied as an
    exact Fourier shift, so the next axis should be an odd periodic axis (an
    even one carries a Nyquist mode no nodal derivative can see).
    Quadrature integrates the odd extension of ``sqrt(g) * integrand`` over
    ``[0, beta]``; it is exact for smooth surface integrands, not for
    arbitrary 1-d functions.
    """

    periodic = False
    polar = True

    def __init__(self, n: int, beta: float):
        self.n = int(n)
        self.a, self.b = 0.0, float(beta)
        self.full = ChebyshevAxis(2 * self.n, -self.b, self.b)
        self.nodes = self.full.nodes[self.n:]
        # weights of int_0^beta over the doubled interpolant, folded for odd integrands
        eye = np.eye(2 * self.n)
        c = self.full.coefficients(eye, 0)
        ci = C.chebint(c, axis=0)
        half = (C.chebval(1.0, ci) - C.chebval(0.0, ci)) * self.b
        self.weights = half[self.n:] - half[: self.n][::-1]
        self._D = None

    @property
    def length(self) -> float:
        return self.b

    def _double(self, v: np.ndarray, axis: int) -> np.ndarray:
        v = np.moveaxis(np.asarray(v, float), axis, 0)
        nphi = v.shape[1]
        k = np.fft.fftfreq(nphi, 1.0 / nphi)
        shape = [1] * v.ndim
        shape[1] = nphi
        F = np.fft.fft(v[::-1], axis=1) * np.cos(np.pi * k).reshape(shape)
        neg = np.fft.ifft(F, axis=1).real
        return np.concatenate([neg, v], axis=0)

    def derivative(self, values, axis: int = 0, order: int = 1, chop: bool = True):
        ext = self._double(values, axis)
        d = self.full.derivative(ext, axis=0, order=order, chop=chop)[self.n:]
        return np.moveaxis(d, 0, axis)

    def end_values(self, values, side: int, axis: int = 0):
        if side < 0:
            raise ValueError("the pole end carries no boundary")
        return self.full.end_values(self._double(values, axis), side, axis=0)

    def end_derivative(self, values, side: int, axis: int = 0):
        if side < 0:
            raise ValueError("the pole end carries no boundary")
        return self.full.end_derivative(self._double(values, axis), side, axis=0)

    def spacing(self) -> float:
        pts = np.concatenate([[-self.nodes[0]], self.nodes, [self.b]])
        return float(np.diff(pts).max())
