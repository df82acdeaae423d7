"""Planar polygon helpers and the rho-based spectral position certificates."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import jnp_zeros

# first positive zero of J_1'
BESSEL_J1P = float(jnp_zeros(1, 1)[0])
RHO_ONE = BESSEL_J1P / 2  # above this a domain has at least two Neumann eigenvalues below lambda
RHO_TWO = BESSEL_J1P / math.sqrt(2)


def signed_area(poly: np.ndarray) -> float:
    """Shoelace area of a closed polygon given without the repeated end point."""
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def perimeter(poly: np.ndarray) -> float:
    return float(np.linalg.norm(np.roll(poly, -1, axis=0) - poly, axis=1).sum())


def points_inside(poly: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Even-odd rule test for many points against one polygon."""
    pts = np.atleast_2d(pts)
    a = poly
    b = np.roll(poly, -1, axis=0)
    px = pts[:, 0:1]
    py = pts[:, 1:2]
    straddle = (a[None, :, 1] > py) != (b[None, :, 1] > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xcross = a[None, :, 0] + (py - a[None, :, 1]) * (b[None, :, 0] - a[None, :, 0]) / (b[None, :, 1] - a[None, :, 1])
    hits = straddle & (px < xcross)
    return (hits.sum(axis=1) % 2) == 1


def rho_position_certificate(rho: float) -> str:
    """Lower bound on the spectral position certified by ``rho`` alone."""
    if rho > RHO_TWO:
        return "N>2 certified"
    if rho > RHO_ONE:
        return "N>1 certified"
    return "unknown"


def angle_between(u: np.ndarray, v: np.ndarray) -> float:
    """Angle in ``[0, pi]`` between two vectors."""
    return float(math.atan2(abs(u[0] * v[1] - u[1] * v[0]), float(np.dot(u, v))))


def line_angle(u: np.ndarray, v: np.ndarray) -> float:
    """Angle in ``[0, pi/2]`` between the lines spanned by two vectors."""
    a = angle_between(u, v)
    return min(a, math.pi - a)


def fitted_tangent(points: np.ndarray, at: np.ndarray, count: int = 6) -> np.ndarray:
    """Unit tangent at ``at`` of the curve through ``points``.

    Fits a quadratic in arc length to the ``count`` polyline points nearest
    ``at`` and differentiates it there.
    """
    d = np.linalg.norm(points - at, axis=1)
    near = np.sort(np.argsort(d)[:count])
    pts = points[near]
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])
    # arc length parameter of ``at``: project onto the closer of the two chords
    # meeting at the nearest point; ``at`` may lie on either side of it
    i = int(np.argmin(d[near]))
    s_at, best = s[i], np.inf
    for j in (i - 1, i):
        if j < 0 or j + 1 >= len(pts):
            continue
        seg = pts[j + 1] - pts[j]
        t = float(np.clip(np.dot(at - pts[j], seg) / max(np.dot(seg, seg), 1e-300), 0.0, 1.0))
        gap = float(np.linalg.norm(pts[j] + t * seg - at))
        if gap < best:
            s_at, best = s[j] + t * (s[j + 1] - s[j]), gap
    u = s - s_at
    design = np.stack([np.ones_like(u), u, u * u], -1)
    coef, *_ = np.linalg.lstsq(design, pts, rcond=None)
    tangent = coef[1]
    return tangent / np.linalg.norm(tangent)
