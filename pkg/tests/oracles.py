"""Reference computations that share no code path with the package."""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq


def _roots_between_poles(h, poles, k_max, grid=64):
    """Sign-change roots of ``h`` on (0, k_max), avoiding the listed poles."""
    cuts = np.unique(np.concatenate([[1e-9], np.asarray(poles, float), [k_max]]))
    roots = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        pad = 1e-10 * max(1.0, b)
        xs = np.linspace(a + pad, b - pad, grid)
        hs = h(xs)
        for i in range(grid - 1):
            if np.sign(hs[i]) != np.sign(hs[i + 1]) and np.isfinite(hs[i]) and np.isfinite(hs[i + 1]):
                # a sign change between poles of a monotone branch is a root
                roots.append(brentq(h, xs[i], xs[i + 1], xtol=1e-14, rtol=1e-15))
    return np.array(sorted(roots))


def star_spectrum(lengths, k_max):
    """Nonzero eigenvalues of a Neumann star with generic edge lengths below ``k_max``.

    With the centre value ``c`` and leaf-based waves ``cos(k (L_e - x))`` the
    vertex conditions reduce to ``sum_e tan(k L_e) = 0``; ``tan`` is
    increasing between its poles, so every root is a sign change there.
    """
    L = np.asarray(lengths, float)
    poles = [(j + 0.5) * math.pi / l for l in L for j in range(int(k_max * l / math.pi) + 1)]

    def h(k):
        return np.tan(np.multiply.outer(np.asarray(k, float), L)).sum(axis=-1)

    return _roots_between_poles(h, poles, k_max)


def lasso_spectrum(loop, tail, k_max):
    """Nonzero eigenvalues of a lasso and, per eigenvalue, whether the eigenfunction is Morse.

    Eigenfunctions either vanish on the tail (``k loop = 2 pi n``) or are even
    on the loop about its attachment point, where the vertex conditions give
    ``2 sin(k l/2) cos(k t) + cos(k l/2) sin(k t) = 0``.
    """
    def h(k):
        return 2 * np.sin(k * loop / 2) * np.cos(k * tail) + np.cos(k * loop / 2) * np.sin(k * tail)

    even = _roots_between_poles(h, [], k_max, grid=int(20 * k_max * (loop + tail)) + 64)
    odd = 2 * math.pi * np.arange(1, int(k_max * loop / (2 * math.pi)) + 1) / loop
    k = np.concatenate([even, odd])
    morse = np.concatenate([np.ones(even.size, bool), np.zeros(odd.size, bool)])
    order = np.argsort(k)
    return k[order], morse[order]


def lattice_count_brute(r2: int) -> int:
    """#{(a, b) in Z^2 : a b != 0, a^2 + b^2 < r2} by a plain double loop."""
    r = math.isqrt(max(r2, 0)) + 1
    total = 0
    for a in range(-r, r + 1):
        if a == 0:
            continue
        for b in range(-r, r + 1):
            if b != 0 and a * a + b * b < r2:
                total += 1
    return total


def fd_gradient(f, p, h=1e-5):
    p = np.asarray(p, float)
    e = np.eye(2) * h
    return np.stack([(f(p + e[i]) - f(p - e[i])) / (2 * h) for i in range(2)], -1)


def fd_hessian(grad, p, h=1e-5):
    p = np.asarray(p, float)
    e = np.eye(2) * h
    cols = [(grad(p + e[i]) - grad(p - e[i])) / (2 * h) for i in range(2)]
    return np.stack(cols, -1)


def separable_critical_points(mx, my):
    """Critical points of ``sin(2 pi mx x) cos(2 pi my y)`` by kind, from its closed form."""
    xs_ext = (np.arange(2 * mx) + 0.5) / (2 * mx)  # cos(2 pi mx x) = 0
    ys_ext = np.arange(2 * my) / (2 * my)  # sin(2 pi my y) = 0
    xs_sad = np.arange(2 * mx) / (2 * mx)
    ys_sad = (np.arange(2 * my) + 0.5) / (2 * my)
    ext = np.array([(x, y) for x in xs_ext for y in ys_ext])
    val = np.sin(2 * np.pi * mx * ext[:, 0]) * np.cos(2 * np.pi * my * ext[:, 1])
    saddles = np.array([(x, y) for x in xs_sad for y in ys_sad])
    return {"max": ext[val > 0], "min": ext[val < 0], "saddle": saddles}


def flow_endpoint(field, start, ascending: bool, critical_positions, max_length=5.0, radius=1e-3):
    """Index of the critical point reached by the normalized gradient flow from ``start``."""
    sign = 1.0 if ascending else -1.0
    crit = np.asarray(critical_positions)

    def rhs(_, p):
        g = field.gradient(p[None])[0]
        n = np.linalg.norm(g)
        return sign * g / n if n > 0 else g

    def near(_, p):
        d = np.abs(((p[None] - crit) + 0.5) % 1.0 - 0.5)
        return np.sqrt((d ** 2).sum(axis=1)).min() - radius

    near.terminal = True
    sol = solve_ivp(rhs, (0.0, max_length), np.asarray(start, float), events=near, rtol=1e-9, atol=1e-12,
                    max_step=0.01 / field.wavenumber)
    p = sol.y[:, -1]
    d = np.abs(((p[None] - crit) + 0.5) % 1.0 - 0.5)
    return int(np.argmin((d ** 2).sum(axis=1)))
