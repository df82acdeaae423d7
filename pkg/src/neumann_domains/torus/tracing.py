"""Separatrices: gradient-flow lines leaving each saddle along its Hessian eigenvectors.

Trajectories are integrated in unwrapped coordinates of the plane, so every
polyline is continuous; the terminal point is snapped to the lift of the
critical point it converges to.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .critical import CriticalPoint, critical_point_tree
from .field import TorusField

SEED_OFFSET = 1e-6
CAPTURE_RADIUS = 1e-4
MAX_ARC_LENGTH = 3.0
TRACE_TOL = 1e-10
MAX_STEPS = 20000
MAX_STEP = 0.01  # in units of the wavelength / 2 pi

# Dormand-Prince 5(4) tableau
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])

TAGS = ("down+", "down-", "up+", "up-")


class TracingError(RuntimeError):
    def __init__(self, msg: str, saddle: int | None = None):
        super().__init__(msg)
        self.saddle = saddle


@dataclass
class Separatrix:
    index: int
    saddle: int
    tag: str  # down = descending towards a minimum, up = ascending towards a maximum
    points: np.ndarray  # (P, 2) unwrapped; points[0] is the saddle
    terminal: int
    arc_length: float
    capture_index: int = -1  # last integrated point before the linearized tail

    @property
    def descending(self) -> bool:
        return self.tag.startswith("down")

    @property
    def shift(self) -> np.ndarray:
        """Lattice translation from the saddle's lift to the terminal's lift."""
        return np.rint(self.points[-1] - np.mod(self.points[-1], 1.0))

    def to_dict(self) -> dict:
        return {"id": self.index, "saddle": self.saddle, "tag": self.tag, "terminal": self.terminal,
                "arcLength": float(self.arc_length), "points": np.round(self.points, 12).tolist()}


def _direction(field: TorusField, p: np.ndarray, sign: np.ndarray) -> np.ndarray:
    g = field.gradient(p)
    return sign[:, None] * g / np.linalg.norm(g, axis=1)[:, None]


def _step_cap(field: TorusField, p: np.ndarray) -> np.ndarray:
    # a quarter of the estimated distance to the nearest critical point
    g = np.linalg.norm(field.gradient(p), axis=1)
    h = np.linalg.norm(field.hessian(p), axis=(1, 2), ord=2)
    return np.minimum(0.25 * g / h, MAX_STEP / field.wavenumber)


def _dp45(field, p, h, sign):
    ks = []
    for row in _A:
        q = p.copy()
        for a, kk in zip(row, ks):
            if a:
                q += (h * a)[:, None] * kk
        ks.append(_direction(field, q, sign))
    K = np.stack(ks, 0)
    high = p + h[:, None] * np.tensordot(_B5, K, axes=1)
    err = h * np.linalg.norm(np.tensordot(_B5 - _B4, K, axes=1), axis=1)
    return high, err


def _linear_tail(start: np.ndarray, crit: CriticalPoint, center: np.ndarray, descending: bool) -> np.ndarray:
    """Points of the linearized flow from ``start`` into the critical point at ``center``."""
    w0 = crit.hessian_eigenvectors.T @ (start - center)
    rates = crit.hessian_eigenvalues if descending else -crit.hessian_eigenvalues
    if np.any(rates <= 0):
        return center[None]
    t_end = np.log(max(np.linalg.norm(w0), 1e-300) / 1e-9) / rates.min()
    t = np.linspace(0.0, max(t_end, 0.0), 24)[1:]
    w = w0[None] * np.exp(-np.outer(t, rates))
    pts = center[None] + w @ crit.hessian_eigenvectors.T
    return np.vstack([pts, center[None]])


def trace_separatrices(field: TorusField, critical: list[CriticalPoint], tol: float = TRACE_TOL,
                       capture: float = CAPTURE_RADIUS) -> list[Separatrix]:
    """Four separatrices per saddle, traced in one vectorized integration."""
    saddles = [c for c in critical if c.kind == "saddle"]
    tree = critical_point_tree(critical)
    origin, tags, start, direction = [], [], [], []
    for s in saddles:
        neg = s.hessian_eigenvectors[:, 0]  # f decreases along it
        pos = s.hessian_eigenvectors[:, 1]
        for tag, d in zip(TAGS, (neg, -neg, pos, -pos)):
            origin.append(s.index)
            tags.append(tag)
            start.append(s.position)
            direction.append(d)
    n = len(origin)
    if n == 0:
        return []
    start = np.array(start)
    direction = np.array(direction)
    sign = np.array([-1.0 if t.startswith("down") else 1.0 for t in tags])
    paths = [[start[i], start[i] + SEED_OFFSET * direction[i], start[i] + capture * direction[i]] for i in range(n)]
    p = start + capture * direction
    arc = np.full(n, capture)
    h = np.minimum(_step_cap(field, p), 1e-3)
    active = np.arange(n)
    terminal = np.full(n, -1)
    for _ in range(MAX_STEPS):
        if active.size == 0:
            break
        pa, ha, sa = p[active], h[active], sign[active]
        ha = np.minimum(ha, _step_cap(field, pa))
        new, err = _dp45(field, pa, ha, sa)
        ratio = err / tol
        ok = ratio <= 1.0
        grow = np.clip(0.9 * np.maximum(ratio, 1e-12) ** -0.2, 0.2, 5.0)
        h[active] = ha * grow
        acc = active[ok]
        if acc.size:
            p[acc] = new[ok]
            arc[acc] += np.linalg.norm(new[ok] - pa[ok], axis=1)
            for i in acc:
                paths[i].append(p[i].copy())
            dist, hit = tree.query(np.mod(p[acc], 1.0), distance_upper_bound=capture)
            for i, d, j in zip(acc, dist, hit):
                if not np.isfinite(d):
                    continue
                if j == origin[i] and arc[i] < 10 * capture:
                    continue
                terminal[i] = j
            if np.any(arc[acc] > MAX_ARC_LENGTH):
                i = acc[np.argmax(arc[acc])]
                raise TracingError(f"separatrix {tags[i]} of saddle {origin[i]} exceeds arc length "
                                   f"{MAX_ARC_LENGTH} without capture", origin[i])
        active = active[terminal[active] < 0]
    if active.size:
        raise TracingError("separatrix tracing did not terminate", origin[active[0]])
    out = []
    for i in range(n):
        crit = critical[terminal[i]]
        last = paths[i][-1]
        center = crit.position + np.rint(last - crit.position)
        tail = _linear_tail(last, crit, center, sign[i] < 0) if crit.is_extremum else center[None]
        pts = np.vstack([np.array(paths[i]), tail])
        length = float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())
        out.append(Separatrix(i, origin[i], tags[i], pts, int(terminal[i]), length, len(paths[i]) - 1))
    return out


def saddle_tangent(sep: Separatrix, wavenumber: float) -> np.ndarray:
    """Unit tangent at the saddle, extrapolated from the traced part of the polyline.

    Fits ``w(s) = t s + c s^2`` to points at arc length between the capture
    radius and ``0.05 / wavenumber`` from the saddle.
    """
    w = sep.points - sep.points[0]
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(sep.points, axis=0), axis=1))])
    use = (s > 1.5 * CAPTURE_RADIUS) & (s < 0.05 / wavenumber)
    if use.sum() < 3:
        use = np.zeros_like(use)
        use[3:8] = True
    design = np.stack([s[use], s[use] ** 2], -1)
    coef, *_ = np.linalg.lstsq(design, w[use], rcond=None)
    t = coef[0]
    return t / np.linalg.norm(t)
