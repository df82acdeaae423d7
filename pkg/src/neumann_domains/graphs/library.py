"""Small catalogue of standard graphs used in examples and tests."""

from __future__ import annotations

import math

from .metric_graph import MetricGraph

_SURDS = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29)


def irrational_lengths(count: int, shift: int = 0) -> list[float]:
    """``1 + frac(j * sqrt(p))`` for successive primes; a proxy for rational independence."""
    out = []
    for i in range(count):
        p = _SURDS[(i + shift) % len(_SURDS)]
        j = 1 + (i + shift) // len(_SURDS)
        out.append(1.0 + math.modf(j * math.sqrt(p))[0])
    return out


def interval(length: float = math.pi) -> MetricGraph:
    return MetricGraph.from_edges([("a", "b", length)])


def star(lengths) -> MetricGraph:
    return MetricGraph.from_edges([("c", f"v{i}", L) for i, L in enumerate(lengths)])


def lasso(loop: float = 1.0, tail: float = math.sqrt(2) - 1) -> MetricGraph:
    return MetricGraph.from_edges([("v", "v", loop), ("v", "a", tail)])


def mandarin(lengths) -> MetricGraph:
    """Two vertices joined by parallel edges (theta graph for three edges)."""
    return MetricGraph.from_edges([("u", "w", L) for L in lengths])


def ring_with_tails(arc1: float, arc2: float, tail1: float, tail2: float) -> MetricGraph:
    """A cycle through two vertices, each carrying one pendant edge (beta 1, two leaves)."""
    return MetricGraph.from_edges([("u", "w", arc1), ("w", "u", arc2), ("u", "a", tail1), ("w", "b", tail2)])


def figure_eight(loop1: float, loop2: float) -> MetricGraph:
    return MetricGraph.from_edges([("v", "v", loop1), ("v", "v", loop2)])


def double_star(bridge: float, left, right) -> MetricGraph:
    """Two interior vertices joined by ``bridge``, with pendant edges ``left`` at one and ``right`` at the other."""
    edges = [("u", "w", bridge)]
    edges += [("u", f"a{i}", L) for i, L in enumerate(left)]
    edges += [("w", f"b{i}", L) for i, L in enumerate(right)]
    return MetricGraph.from_edges(edges)
