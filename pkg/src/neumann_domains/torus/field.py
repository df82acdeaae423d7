"""Laplace eigenfunctions on the flat torus [0,1)^2 as finite trigonometric sums."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2 * math.pi


def lattice_modes(norm: int) -> list[tuple[int, int]]:
    """All ``(mx, my)`` with ``mx, my >= 0`` and ``mx^2 + my^2 = norm``."""
    out = []
    for mx in range(math.isqrt(norm) + 1):
        rest = norm - mx * mx
        my = math.isqrt(rest)
        if my * my == rest:
            out.append((mx, my))
    return out


@dataclass(frozen=True, eq=False)
class TorusField:
    """``f = sum over modes of cc*Cx*Cy + cs*Cx*Sy + sc*Sx*Cy + ss*Sx*Sy``.

    ``Cx = cos(2 pi mx x)``, ``Sy = sin(2 pi my y)`` and so on. All modes share
    ``mx^2 + my^2``, so ``-Laplace f = eigenvalue * f``. Coefficients of basis
    functions that vanish identically (a sine with zero frequency) are dropped.
    """

    modes: np.ndarray  # (M, 2) int
    coefficients: np.ndarray  # (M, 4) columns cc, cs, sc, ss

    def __post_init__(self) -> None:
        modes = np.asarray(self.modes, dtype=np.int64).reshape(-1, 2)
        coef = np.asarray(self.coefficients, dtype=float).reshape(-1, 4).copy()
        if modes.shape[0] != coef.shape[0] or modes.shape[0] == 0:
            raise ValueError("need one coefficient row per mode")
        if np.any(modes < 0):
            raise ValueError("mode indices must be non-negative")
        norms = (modes ** 2).sum(axis=1)
        if np.any(norms != norms[0]) or norms[0] == 0:
            raise ValueError("all modes must share one nonzero squared norm")
        coef[modes[:, 0] == 0, 2:] = 0.0
        coef[modes[:, 1] == 0, 1] = 0.0
        coef[modes[:, 1] == 0, 3] = 0.0
        if not np.any(coef != 0):
            raise ValueError("field is identically zero")
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "coefficients", coef)

    @classmethod
    def separable(cls, mx: int, my: int, kind: str = "sc") -> TorusField:
        """Single product mode, e.g. ``kind="sc"`` gives ``sin(2 pi mx x) cos(2 pi my y)``."""
        coef = np.zeros(4)
        coef[("cc", "cs", "sc", "ss").index(kind)] = 1.0
        return cls(np.array([[mx, my]]), coef[None])

    @property
    def norm(self) -> int:
        return int((self.modes[0] ** 2).sum())

    @property
    def eigenvalue(self) -> float:
        return TWO_PI ** 2 * self.norm

    @property
    def wavenumber(self) -> float:
        return math.sqrt(self.eigenvalue)

    @property
    def max_mode(self) -> int:
        return int(self.modes.max())

    @property
    def scale(self) -> float:
        """Bound on ``|f|``; gradient and Hessian scale with powers of the wavenumber."""
        return float(np.abs(self.coefficients).sum())

    def _trig(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        ax = TWO_PI * p[:, 0:1] * self.modes[None, :, 0]
        ay = TWO_PI * p[:, 1:2] * self.modes[None, :, 1]
        return np.cos(ax), np.sin(ax), np.cos(ay), np.sin(ay)

    def value(self, points) -> np.ndarray:
        cx, sx, cy, sy = self._trig(points)
        c = self.coefficients
        return (c[:, 0] * cx * cy + c[:, 1] * cx * sy + c[:, 2] * sx * cy + c[:, 3] * sx * sy).sum(axis=1)

    def gradient(self, points) -> np.ndarray:
        cx, sx, cy, sy = self._trig(points)
        c = self.coefficients
        a = TWO_PI * self.modes[:, 0]
        b = TWO_PI * self.modes[:, 1]
        gx = (a * (-c[:, 0] * sx * cy - c[:, 1] * sx * sy + c[:, 2] * cx * cy + c[:, 3] * cx * sy)).sum(axis=1)
        gy = (b * (-c[:, 0] * cx * sy + c[:, 1] * cx * cy - c[:, 2] * sx * sy + c[:, 3] * sx * cy)).sum(axis=1)
        return np.stack([gx, gy], axis=-1)

    def hessian(self, points) -> np.ndarray:
        cx, sx, cy, sy = self._trig(points)
        c = self.coefficients
        a = TWO_PI * self.modes[:, 0]
        b = TWO_PI * self.modes[:, 1]
        mode_val = c[:, 0] * cx * cy + c[:, 1] * cx * sy + c[:, 2] * sx * cy + c[:, 3] * sx * sy
        hxx = (-(a ** 2) * mode_val).sum(axis=1)
        hyy = (-(b ** 2) * mode_val).sum(axis=1)
        hxy = (a * b * (c[:, 0] * sx * sy - c[:, 1] * sx * cy - c[:, 2] * cx * sy + c[:, 3] * cx * cy)).sum(axis=1)
        return np.stack([np.stack([hxx, hxy], -1), np.stack([hxy, hyy], -1)], -2)

    def laplacian_residual(self, points) -> np.ndarray:
        """``Laplace f + eigenvalue f`` at the given points; zero up to round-off."""
        h = self.hessian(points)
        return h[:, 0, 0] + h[:, 1, 1] + self.eigenvalue * self.value(points)

    def to_dict(self) -> dict:
        return {"modes": self.modes.tolist(), "coefficients": self.coefficients.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> TorusField:
        return cls(np.array(data["modes"]), np.array(data["coefficients"]))


def random_field(norm: int, rng: np.random.Generator) -> TorusField:
    """Independent standard normal coefficients on every basis function of the eigenspace."""
    modes = lattice_modes(norm)
    if not modes or norm == 0:
        raise ValueError(f"{norm} is not a nonzero sum of two squares")
    coef = rng.standard_normal((len(modes), 4))
    return TorusField(np.array(modes), coef)
