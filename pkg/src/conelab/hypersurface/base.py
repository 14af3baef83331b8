"""Backend-independent containers for sampled hypersurfaces."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass
class BoundarySamples:
    """Samples on the boundary of the discretised surface.

    ``free`` marks samples lying on the cone boundary (the free boundary);
    the rest border an excluded neighbourhood of the vertex or an open edge.
    """

    points: np.ndarray
    normal: np.ndarray
    conormal: np.ndarray
    dl: np.ndarray
    free: np.ndarray

    @classmethod
    def empty(cls, d: int) -> "BoundarySamples":
        z = np.zeros((0, d))
        return cls(z, z.copy(), z.copy(), np.zeros(0), np.zeros(0, bool))

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass
class Shape:
    """Extrinsic data that does not depend on the density."""

    points: np.ndarray
    normal: np.ndarray
    H: np.ndarray
    sigma2: np.ndarray
    area_weights: np.ndarray
    boundary: BoundarySamples
    h: float


@dataclass
class ScalarField:
    """Values on the surface samples, with an optional boundary trace and flags."""

    values: np.ndarray
    boundary: Optional[np.ndarray] = None
    warning: Optional[str] = None
    meta: dict = field(default_factory=dict)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __len__(self) -> int:
        return len(self.values)


class DiscreteHypersurface:
    """Common interface of the parametric and simplicial backends."""

    backend = "abstract"
    n: int
    ambient_dim: int

    def __init__(self):
        self._shape: Optional[Shape] = None
        self._geom_cache: dict = {}
        self.meta: dict = {}

    # --- required from subclasses
    @property
    def positions(self) -> np.ndarray:
        raise NotImplementedError

    def _compute_shape(self) -> Shape:
        raise NotImplementedError

    def with_positions(self, X: np.ndarray) -> "DiscreteHypersurface":
        raise NotImplementedError

    def gradient(self, values) -> np.ndarray:
        raise NotImplementedError

    def laplacian(self, values) -> np.ndarray:
        raise NotImplementedError

    def divergence(self, vectors) -> np.ndarray:
        raise NotImplementedError

    def boundary_trace(self, values) -> np.ndarray:
        raise NotImplementedError

    def boundary_normal_derivative(self, values) -> np.ndarray:
        raise NotImplementedError

    # --- shared
    def shape(self) -> Shape:
        if self._shape is None:
            self._shape = self._compute_shape()
        return self._shape

    @property
    def dofs(self) -> int:
        return self.positions.shape[0]

    @property
    def min_radius(self) -> float:
        pts = np.concatenate([self.positions, self.shape().boundary.points])
        return float(np.linalg.norm(pts, axis=-1).min())

    @property
    def diameter(self) -> float:
        P = self.positions
        ext = P.max(axis=0) - P.min(axis=0)
        return float(np.linalg.norm(ext))

    def dilate(self, t: float) -> "DiscreteHypersurface":
        return self.with_positions(t * self.positions)

    def values_of(self, field) -> np.ndarray:
        """Sample a callable of ambient points, a ScalarField or an array on this surface."""
        if callable(field):
            return np.asarray(field(self.positions), float)
        return np.asarray(field, float).reshape(-1) if np.ndim(field) <= 1 else np.asarray(field, float)
