"""Metric graphs with standard (Neumann-Kirchhoff) vertex conditions."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable, Mapping

import numpy as np


class GraphSpecError(ValueError):
    """Raised for a graph description that cannot be turned into a standard graph.

    ``where`` names the offending field (``"edges[2].length"``) when known.
    """

    def __init__(self, message: str, where: str | None = None) -> None:
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


@dataclass(frozen=True)
class Edge:
    id: str
    tail: str
    head: str
    length: float

    @property
    def is_loop(self) -> bool:
        return self.tail == self.head


@dataclass(frozen=True)
class MetricGraph:
    """Connected metric graph, immutable after construction.

    Each edge carries the coordinate ``x in [0, length]`` running from ``tail``
    to ``head``. Use :func:`build_graph` to construct one; it validates the
    input and removes interior vertices of degree two.
    """

    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]
    suppressed: tuple[str, ...] = field(default=(), compare=False)

    @cached_property
    def vertex_index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    @cached_property
    def degree(self) -> dict[str, int]:
        deg = {v: 0 for v in self.vertices}
        for e in self.edges:
            deg[e.tail] += 1
            deg[e.head] += 1
        return deg

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def total_length(self) -> float:
        return math.fsum(e.length for e in self.edges)

    @cached_property
    def boundary(self) -> tuple[str, ...]:
        return tuple(v for v in self.vertices if self.degree[v] == 1)

    @cached_property
    def interior_vertices(self) -> tuple[str, ...]:
        return tuple(v for v in self.vertices if self.degree[v] > 1)

    @property
    def betti(self) -> int:
        return self.n_edges - self.n_vertices + 1

    @cached_property
    def loop_edges(self) -> tuple[str, ...]:
        return tuple(e.id for e in self.edges if e.is_loop)

    @property
    def min_length(self) -> float:
        return min(e.length for e in self.edges)

    @cached_property
    def edge_index(self) -> dict[str, int]:
        return {e.id: i for i, e in enumerate(self.edges)}

    @cached_property
    def tails(self) -> np.ndarray:
        return np.array([self.vertex_index[e.tail] for e in self.edges], dtype=np.intp)

    @cached_property
    def heads(self) -> np.ndarray:
        return np.array([self.vertex_index[e.head] for e in self.edges], dtype=np.intp)

    @cached_property
    def lengths(self) -> np.ndarray:
        return np.array([e.length for e in self.edges], dtype=float)

    @cached_property
    def ends_at(self) -> dict[str, tuple[tuple[int, int], ...]]:
        """Edge ends incident to each vertex as ``(edge_index, side)``.

        Side 0 is the ``x = 0`` end of the edge, side 1 the ``x = length`` end.
        A loop contributes both of its ends to its vertex.
        """
        ends: dict[str, list[tuple[int, int]]] = {v: [] for v in self.vertices}
        for i, e in enumerate(self.edges):
            ends[e.tail].append((i, 0))
            ends[e.head].append((i, 1))
        return {v: tuple(x) for v, x in ends.items()}

    def is_tree(self) -> bool:
        return self.betti == 0

    def rescaled(self, factor: float) -> MetricGraph:
        if not factor > 0:
            raise GraphSpecError("scale factor must be positive")
        edges = tuple(Edge(e.id, e.tail, e.head, e.length * factor) for e in self.edges)
        return MetricGraph(self.vertices, edges, self.suppressed)

    def with_lengths(self, lengths: Iterable[float]) -> MetricGraph:
        lengths = list(lengths)
        if len(lengths) != self.n_edges:
            raise GraphSpecError("need one length per edge")
        edges = tuple(Edge(e.id, e.tail, e.head, float(L)) for e, L in zip(self.edges, lengths))
        return build_graph(MetricGraph(self.vertices, edges))

    def to_description(self) -> dict[str, Any]:
        return {
            "vertices": list(self.vertices),
            "edges": [
                {"id": e.id, "from": e.tail, "to": e.head, "length": repr(e.length)}
                for e in self.edges
            ],
        }

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[Any, Any, float]]) -> MetricGraph:
        """Shorthand: ``MetricGraph.from_edges([("a", "b", 1.0), ...])``."""
        edge_list = []
        vertices: dict[str, None] = {}
        for i, (u, v, L) in enumerate(edges):
            vertices.setdefault(str(u))
            vertices.setdefault(str(v))
            edge_list.append({"id": f"e{i}", "from": str(u), "to": str(v), "length": L})
        return build_graph({"vertices": list(vertices), "edges": edge_list})


def _parse_length(raw: Any, where: str) -> float:
    if isinstance(raw, bool):
        raise GraphSpecError(f"length must be a number, got {raw!r}", where)
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise GraphSpecError(f"length must be a decimal number, got {raw!r}", where) from None
    if not math.isfinite(value) or value <= 0:
        raise GraphSpecError(f"length must be positive and finite, got {raw!r}", where)
    return value


def _parse_description(spec: Mapping[str, Any]) -> tuple[list[str], list[Edge]]:
    if not isinstance(spec, Mapping):
        raise GraphSpecError("graph description must be a mapping")
    raw_edges = spec.get("edges")
    if not isinstance(raw_edges, list) or not raw_edges:
        raise GraphSpecError("expected a non-empty list", "edges")
    raw_vertices = spec.get("vertices")
    if raw_vertices is None:
        vertices: list[str] = []
        for item in raw_edges:
            if isinstance(item, Mapping):
                for key in ("from", "to"):
                    if key in item and str(item[key]) not in vertices:
                        vertices.append(str(item[key]))
    elif isinstance(raw_vertices, list):
        vertices = [str(v["id"]) if isinstance(v, Mapping) else str(v) for v in raw_vertices]
        if len(set(vertices)) != len(vertices):
            raise GraphSpecError("duplicate vertex id", "vertices")
    else:
        raise GraphSpecError("expected a list", "vertices")

    known = set(vertices)
    edges = []
    seen_ids = set()
    for i, item in enumerate(raw_edges):
        where = f"edges[{i}]"
        if not isinstance(item, Mapping):
            raise GraphSpecError("edge must be a mapping", where)
        for key in ("from", "to", "length"):
            if key not in item:
                raise GraphSpecError(f"missing field '{key}'", where)
        eid = str(item.get("id", f"e{i}"))
        if eid in seen_ids:
            raise GraphSpecError(f"duplicate edge id {eid!r}", f"{where}.id")
        seen_ids.add(eid)
        tail, head = str(item["from"]), str(item["to"])
        for key, v in (("from", tail), ("to", head)):
            if v not in known:
                raise GraphSpecError(f"unknown vertex {v!r}", f"{where}.{key}")
        length = _parse_length(item["length"], f"{where}.length (edge {eid})")
        edges.append(Edge(eid, tail, head, length))
    return vertices, edges


def _is_connected(vertices: list[str], edges: list[Edge]) -> bool:
    adjacency = defaultdict(set)
    for e in edges:
        adjacency[e.tail].add(e.head)
        adjacency[e.head].add(e.tail)
    start = vertices[0]
    seen = {start}
    stack = [start]
    while stack:
        for w in adjacency[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(vertices)


def _suppress_degree_two(
    vertices: list[str], edges: list[Edge]
) -> tuple[list[str], list[Edge], list[str]]:
    vertices = list(vertices)
    edges = list(edges)
    removed = []
    while True:
        incident: dict[str, list[Edge]] = {v: [] for v in vertices}
        for e in edges:
            incident[e.tail].append(e)
            if not e.is_loop:
                incident[e.head].append(e)
        target = None
        for v in vertices:
            es = incident[v]
            if len(es) == 2 and not es[0].is_loop and not es[1].is_loop:
                target = v
                break
        if target is None:
            return vertices, edges, removed
        e1, e2 = incident[target]
        a = e1.head if e1.tail == target else e1.tail
        b = e2.head if e2.tail == target else e2.tail
        merged = Edge(f"{e1.id}+{e2.id}", a, b, e1.length + e2.length)
        position = min(edges.index(e1), edges.index(e2))
        edges = [e for e in edges if e is not e1 and e is not e2]
        edges.insert(position, merged)
        vertices.remove(target)
        removed.append(target)


def build_graph(spec: Mapping[str, Any] | MetricGraph) -> MetricGraph:
    """Validate a graph description and return a normalized standard graph.

    ``spec`` is either a mapping ``{"vertices": [...], "edges": [{"from", "to",
    "length"}, ...]}`` or an existing :class:`MetricGraph`. Interior vertices of
    degree two are removed by concatenating their edges, which leaves the
    spectrum and eigenfunctions unchanged.
    """
    if isinstance(spec, MetricGraph):
        vertices, edges = list(spec.vertices), list(spec.edges)
        for e in edges:
            _parse_length(e.length, f"edge {e.id}")
    else:
        vertices, edges = _parse_description(spec)

    used = {e.tail for e in edges} | {e.head for e in edges}
    isolated = [v for v in vertices if v not in used]
    if isolated:
        raise GraphSpecError(f"graph is disconnected (isolated vertex {isolated[0]!r})", "vertices")
    if not _is_connected(vertices, edges):
        raise GraphSpecError("graph is disconnected")

    vertices, edges, removed = _suppress_degree_two(vertices, edges)
    if len(vertices) == 1 and len(edges) == 1:
        raise GraphSpecError("the single loop graph is trivial (no vertex of degree other than two)")
    return MetricGraph(tuple(vertices), tuple(edges), tuple(removed))
