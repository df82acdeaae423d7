"""Flat SVG dump of a torus complex: nodal set, Neumann lines and critical points."""

from __future__ import annotations

import numpy as np

from .torus.complex import MorseComplex

PALETTE = {
    "nodal": "#9a9a9a",
    "neumann": "#7b2d8e",
    "max": "#d62728",
    "min": "#1f4fd6",
    "saddle": "#f2c80f",
}


def _path(points: np.ndarray, size: float) -> str:
    # y grows upwards on the torus and downwards in SVG
    xy = np.column_stack([points[:, 0] * size, (1.0 - points[:, 1]) * size])
    return "M" + " L".join(f"{x:.3f},{y:.3f}" for x, y in xy)


def _copies(points: np.ndarray) -> list[np.ndarray]:
    """Translates of an unwrapped polyline that meet the unit square."""
    lo = np.floor(points.min(axis=0)).astype(int)
    hi = np.floor(points.max(axis=0)).astype(int)
    return [points - np.array([i, j]) for i in range(lo[0], hi[0] + 1) for j in range(lo[1], hi[1] + 1)]


def complex_svg(cx: MorseComplex, size: int = 600, nodal: bool = True, points: bool = True) -> str:
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<defs><clipPath id="torus"><rect x="0" y="0" width="{size}" height="{size}"/></clipPath></defs>',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
        '<g clip-path="url(#torus)" fill="none" stroke-linejoin="round">',
    ]
    if nodal:
        parts.append(f'<g stroke="{PALETTE["nodal"]}" stroke-width="1.5">')
        for f in cx.faces:
            if f.nodal_arc is not None:
                parts += [f'<path d="{_path(c, size)}"/>' for c in _copies(f.nodal_arc)]
        parts.append("</g>")
    parts.append(f'<g stroke="{PALETTE["neumann"]}" stroke-width="1.5">')
    for s in cx.separatrices:
        parts += [f'<path d="{_path(c, size)}"/>' for c in _copies(s.points)]
    parts.append("</g>")
    if points:
        r = max(1.5, size / (40 * max(cx.field.max_mode, 1)))
        for c in cx.critical:
            x, y = c.position[0] * size, (1.0 - c.position[1]) * size
            parts.append(f'<circle cx="{x:.3f}" cy="{y:.3f}" r="{r:.2f}" fill="{PALETTE[c.kind]}" stroke="black" stroke-width="0.5"/>')
    parts.append("</g></svg>")
    return "\n".join(parts) + "\n"
