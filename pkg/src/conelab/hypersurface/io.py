"""Simplicial import: OBJ surfaces (v/f records) and two-column CSV polylines."""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import ConfigError
from .simplicial import SimplicialSurface


def load_obj(path, cone=None, tol_boundary: float = 1e-8, orientation: int = 1) -> SimplicialSurface:
    """Read vertices and triangular faces; other records are ignored.

    Polygonal faces are fanned into triangles; ``v/vt/vn`` index syntax is accepted.
    """
    V, F = [], []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        try:
            if parts[0] == "v":
                V.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(p.split("/")[0]) for p in parts[1:]]
                idx = [i - 1 if i > 0 else len(V) + i for i in idx]
                for j in range(1, len(idx) - 1):
                    F.append([idx[0], idx[j], idx[j + 1]])
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from None
    if not V or not F:
        raise ConfigError(f"{path}: no vertices or faces")
    V = np.asarray(V)
    if V.shape[1] != 3:
        raise ConfigError(f"{path}: vertices need three coordinates")
    return SimplicialSurface(V, np.asarray(F), orientation, cone, tol_boundary)


def load_polyline_csv(path, cone=None, closed: Optional[bool] = None, tol_boundary: float = 1e-8,
                      orientation: int = 1) -> SimplicialSurface:
    """Read ``x,y`` rows (an optional header row is skipped).

    A repeated first point at the end closes the curve unless ``closed`` says otherwise.
    """
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                rows.append([float(row[0]), float(row[1])])
            except (ValueError, IndexError):
                if rows:
                    raise ConfigError(f"{path}:{lineno}: expected two numbers") from None
    P = np.asarray(rows, float)
    if len(P) < 3:
        raise ConfigError(f"{path}: need at least three points")
    repeat = np.allclose(P[0], P[-1])
    if repeat:
        P = P[:-1]
    if closed is None:
        closed = repeat
    m = len(P)
    idx = np.arange(m)
    E = np.stack([idx, (idx + 1) % m], 1) if closed else np.stack([idx[:-1], idx[1:]], 1)
    return SimplicialSurface(P, E, orientation, cone, tol_boundary)
