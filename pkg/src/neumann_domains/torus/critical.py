"""Critical points of a torus eigenfunction: seeded Newton, dedup, Morse classification."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .field import TorusField

DEDUP_RADIUS = 1e-6
GRADIENT_TOL = 1e-12  # relative to field.scale * wavenumber
DEGENERATE_TOL = 1e-8  # |det Hess| relative to eigenvalue^2 * scale^2
NEWTON_STEPS = 60


class NonMorseField(ValueError):
    """A critical point with (numerically) singular Hessian."""

    def __init__(self, msg: str, position=None):
        super().__init__(msg)
        self.position = position


class CriticalPointSearchError(RuntimeError):
    """The Morse relation failed even on the finest seeding grid."""


@dataclass(frozen=True)
class CriticalPoint:
    index: int
    position: np.ndarray  # in [0, 1)^2
    kind: str  # "min", "max" or "saddle"
    value: float
    hessian_eigenvalues: np.ndarray  # ascending
    hessian_eigenvectors: np.ndarray  # columns match the eigenvalues
    gradient_norm: float

    @property
    def is_extremum(self) -> bool:
        return self.kind != "saddle"

    def slow_axis(self) -> np.ndarray:
        """Eigenvector of the Hessian eigenvalue of smaller magnitude."""
        i = int(np.argmin(np.abs(self.hessian_eigenvalues)))
        return self.hessian_eigenvectors[:, i]

    def to_dict(self) -> dict:
        return {
            "id": self.index,
            "x": float(self.position[0]),
            "y": float(self.position[1]),
            "type": self.kind,
            "value": float(self.value),
            "hessianEigenvalues": [float(a) for a in self.hessian_eigenvalues],
        }


def _newton(field: TorusField, seeds: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Damped Newton on the gradient from every seed, vectorized."""
    x = seeds.copy()
    max_step = 0.25 / (2 * np.pi * max(field.max_mode, 1))
    for _ in range(NEWTON_STEPS):
        g = field.gradient(x)
        H = field.hessian(x)
        det = H[:, 0, 0] * H[:, 1, 1] - H[:, 0, 1] ** 2
        det = np.where(np.abs(det) < 1e-300, 1e-300, det)
        dx = -(H[:, 1, 1] * g[:, 0] - H[:, 0, 1] * g[:, 1]) / det
        dy = -(-H[:, 0, 1] * g[:, 0] + H[:, 0, 0] * g[:, 1]) / det
        step = np.stack([dx, dy], -1)
        size = np.hypot(dx, dy)
        step *= np.minimum(1.0, max_step / np.maximum(size, 1e-300))[:, None]
        x = x + step
        if np.all(size < 1e-15):
            break
    x = np.mod(x, 1.0)
    x[x >= 1.0] = 0.0  # mod of a tiny negative number rounds up to 1
    return x, np.linalg.norm(field.gradient(x), axis=1)


def _dedup(points: np.ndarray) -> np.ndarray:
    tree = cKDTree(points, boxsize=1.0)
    keep = np.ones(len(points), dtype=bool)
    for i, j in sorted(tree.query_pairs(DEDUP_RADIUS)):
        if keep[i] and keep[j]:
            keep[j] = False
    return points[keep]


def _classify(field: TorusField, points: np.ndarray) -> list[CriticalPoint]:
    H = field.hessian(points)
    w, v = np.linalg.eigh(H)
    values = field.value(points)
    gnorm = np.linalg.norm(field.gradient(points), axis=1)
    tol = DEGENERATE_TOL * (field.eigenvalue * field.scale) ** 2
    out = []
    # sort for a reproducible numbering independent of seed order
    order = np.lexsort((points[:, 1], points[:, 0]))
    for idx, i in enumerate(order):
        if abs(w[i, 0] * w[i, 1]) < tol:
            raise NonMorseField(f"degenerate critical point at {points[i].tolist()}", points[i])
        if w[i, 0] > 0:
            kind = "min"
        elif w[i, 1] < 0:
            kind = "max"
        else:
            kind = "saddle"
        out.append(CriticalPoint(idx, points[i], kind, float(values[i]), w[i], v[i], float(gnorm[i])))
    return out


def find_critical_points(field: TorusField, density: int = 8, refinements: int = 3) -> list[CriticalPoint]:
    """All critical points, certified by ``#max + #min - #saddle = 0``.

    Newton starts from a ``(density * max_mode)^2`` grid; when the Morse
    relation fails the grid is doubled, up to ``refinements`` times.
    """
    scale = field.scale * field.wavenumber
    n = density * max(field.max_mode, 1)
    counts = None
    for _ in range(refinements + 1):
        g = (np.arange(n) + 0.5) / n
        seeds = np.stack(np.meshgrid(g, g, indexing="ij"), -1).reshape(-1, 2)
        x, gnorm = _newton(field, seeds)
        good = x[gnorm < GRADIENT_TOL * scale]
        points = _dedup(good) if len(good) else good
        crit = _classify(field, points)
        counts = {k: sum(c.kind == k for c in crit) for k in ("min", "max", "saddle")}
        if crit and counts["min"] + counts["max"] - counts["saddle"] == 0:
            return crit
        n *= 2
    raise CriticalPointSearchError(
        f"Morse relation fails after {refinements} refinements: {counts} on a {n // 2}^2 grid")


def critical_point_tree(points: list[CriticalPoint]) -> cKDTree:
    return cKDTree(np.array([c.position for c in points]), boxsize=1.0)
