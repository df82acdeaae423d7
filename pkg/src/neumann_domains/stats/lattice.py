"""Lattice-point counts behind the Neumann count distribution of separable torus modes.

For the mode ``(mx, my)`` with ``mx, my >= 1`` the separable eigenfunction
``sin(2 pi mx x) sin(2 pi my y)`` has ``8 mx my`` Neumann domains. The count is
normalized by ``N_T``, the number of eigenvalues strictly below its own,
counted as lattice points of ``Z^2`` with nonzero coordinates strictly inside
the disk of squared radius ``mx^2 + my^2``. Squared radii are integers, so
everything here is exact integer arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import EmpiricalDistribution

FOUR_PI_SQ = 4 * math.pi ** 2
MAX_RADIUS_SQ = 10 ** 9  # guard against runaway memory


def radius_sq_cutoff(lambda_max: float) -> float:
    """Squared lattice radius corresponding to a torus eigenvalue cutoff."""
    return lambda_max / FOUR_PI_SQ


def _check_cutoff(r2: float) -> None:
    if not r2 > 0 or r2 > MAX_RADIUS_SQ:
        raise ValueError(f"squared radius {r2!r} outside (0, {MAX_RADIUS_SQ}]")


def lattice_counts_by_histogram(r2_max: int, block: int = 512) -> np.ndarray:
    """``N_T(n)`` for every integer ``0 <= n <= r2_max`` by tallying ``a^2 + b^2``.

    ``N_T(n) = #{(a, b) in Z^2 : a, b != 0, a^2 + b^2 < n}``.
    """
    _check_cutoff(r2_max)
    r = math.isqrt(r2_max) + 1
    b = np.arange(1, r + 1, dtype=np.int64)
    tally = np.zeros(r2_max + 1, dtype=np.int64)
    for lo in range(1, r + 1, block):
        a = np.arange(lo, min(lo + block, r + 1), dtype=np.int64)
        norms = (a[:, None] ** 2 + b[None, :] ** 2).ravel()
        tally += np.bincount(norms[norms <= r2_max], minlength=r2_max + 1)
    below = np.concatenate([[0], np.cumsum(tally)[:-1]])
    return 4 * below


def lattice_count_by_rows(n: int) -> int:
    """``N_T(n)`` by summing, for each row ``a``, the admissible ``b`` count."""
    n = int(n)
    total = 0
    a = 1
    while a * a + 1 < n:
        total += math.isqrt(n - a * a - 1)
        a += 1
    return 4 * total


@dataclass
class LatticeCountState:
    """All modes ``mx, my >= 1`` with ``mx^2 + my^2 < r2_max``.

    ``ratio`` holds ``8 mx my / N_T(mx^2 + my^2)`` (``inf`` when ``N_T = 0``).
    ``weyl_count`` is ``N_T`` at the cutoff and equals ``4 * len(mx)``.
    """

    lambda_max: float
    r2_max: float
    mx: np.ndarray
    my: np.ndarray
    n_t: np.ndarray
    ratio: np.ndarray
    weyl_count: int

    @property
    def mu(self) -> np.ndarray:
        return 8 * self.mx.astype(np.int64) * self.my

    @classmethod
    def enumerate(cls, lambda_max: float, block: int = 512) -> LatticeCountState:
        r2 = radius_sq_cutoff(lambda_max)
        _check_cutoff(r2)
        top = math.ceil(r2) - 1  # largest integer strictly below r2
        table = lattice_counts_by_histogram(top + 1)
        r = math.isqrt(top)
        b = np.arange(1, r + 1, dtype=np.int64)
        parts_x, parts_y, parts_n = [], [], []
        for lo in range(1, r + 1, block):
            a = np.arange(lo, min(lo + block, r + 1), dtype=np.int64)
            mx, my = np.meshgrid(a, b, indexing="ij")
            keep = mx * mx + my * my < r2
            parts_x.append(mx[keep].astype(np.int32))
            parts_y.append(my[keep].astype(np.int32))
            parts_n.append(table[(mx[keep] ** 2 + my[keep] ** 2)])
        cat = lambda parts, dt: np.concatenate(parts) if parts else np.zeros(0, dt)
        mx, my, n_t = cat(parts_x, np.int32), cat(parts_y, np.int32), cat(parts_n, np.int64)
        mu = 8 * mx.astype(np.int64) * my
        with np.errstate(divide="ignore"):
            ratio = np.where(n_t > 0, mu / np.maximum(n_t, 1), np.inf)
        return cls(lambda_max, r2, mx, my, n_t, ratio, int(table[top + 1]))

    @property
    def pairs(self) -> int:
        return int(self.mx.size)

    def cdf(self, c) -> np.ndarray:
        """``F(c) = 4 #{modes with ratio < c} / N_T(cutoff)``."""
        ordered = np.sort(self.ratio)
        return 4 * np.searchsorted(ordered, np.asarray(c, dtype=float), side="left") / self.weyl_count

    def distribution(self, points) -> EmpiricalDistribution:
        dist = EmpiricalDistribution.cdf(self.ratio, points, samples=self.weyl_count // 4)
        dist.meta = {"lambda_max": float(self.lambda_max), "pairs": self.pairs}
        return dist


def arcsin_cdf(c):
    """Limit CDF ``(2/pi) arcsin(pi c / 4)`` for ``0 <= c < 4/pi`` and 1 beyond."""
    c = np.asarray(c, dtype=float)
    if np.any(c < 0):
        raise ValueError("c must be non-negative")
    arg = np.minimum(np.pi * c / 4, 1.0)
    out = 2 / np.pi * np.arcsin(arg)
    return float(out) if out.ndim == 0 else out


def sup_distance(state: LatticeCountState) -> float:
    """Exact sup-norm distance between the step CDF and the arcsin limit.

    The step function only jumps at sample values, so the supremum is attained
    at a jump, on one side or the other.
    """
    finite = np.sort(state.ratio[np.isfinite(state.ratio)])
    n = state.pairs
    values, first = np.unique(finite, return_index=True)
    last = np.concatenate([first[1:], [finite.size]])
    limit = arcsin_cdf(values)
    left = np.abs(first / n - limit)
    right = np.abs(last / n - limit)
    tail = abs(finite.size / n - 1.0)  # beyond every finite value the limit is 1
    return float(max(left.max(initial=0.0), right.max(initial=0.0), tail))
