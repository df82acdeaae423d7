"""Neumann points, nodal points and Neumann domains of graph eigenfunctions.

Everything is read off the amplitude-phase form: on an edge the phase
``theta(x) = k x + phi`` hits a Neumann point at multiples of pi and a nodal
point at odd multiples of pi/2, so counts are exact integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .metric_graph import Edge, MetricGraph
from .secular import count_below, end_rows
from .spectrum import FLAG_TOL, EigenBatch, GraphEigenpair

POSITION_ETA = 1e-7


class InvariantViolation(RuntimeError):
    """A proven identity or bound failed; this points at a numerical bug."""


@dataclass(frozen=True)
class GraphPoint:
    kind: str  # "neumann" or "nodal"
    edge: str | None = None
    x: float | None = None
    vertex: str | None = None


@dataclass(frozen=True)
class NeumannDomainG:
    """Closure of one component of the graph minus its Neumann points.

    ``pieces`` lists ``(edge_index, x0, x1)`` of the original graph covered by
    the domain. ``vertex`` is the single original interior vertex contained in
    a star domain, or the leaf of a leaf path, else ``None``.
    """

    subgraph: MetricGraph
    kind: str  # "path", "star" or "other"
    k: float
    length: float
    boundary_count: int
    rho: float | None
    spectral_position: int | None
    nodal_count: int
    crosschecked: bool
    maxima_on_boundary: int
    pieces: tuple[tuple[int, float, float], ...]
    vertex: str | None = None
    original_vertices: tuple[str, ...] = field(default=())

    @property
    def is_tree(self) -> bool:
        return self.subgraph.betti == 0


# Phase margins at edge ends. A leaf end sits exactly on a multiple of pi, so a
# wide margin removes it without touching any genuine point (the nearest other
# candidate is pi/2 away). Interior ends use a margin below the genericity
# thresholds, so only non-generic eigenfunctions are affected by it.
LEAF_MARGIN = np.pi / 4
INTERIOR_MARGIN = 1e-9


def phase_window(phase, kl, eps_start, eps_end=None):
    """Integers ``j`` with ``phase + eps_start < j pi < phase + kl - eps_end``, as (first, count)."""
    eps_end = eps_start if eps_end is None else eps_end
    first = np.floor((phase + eps_start) / np.pi) + 1
    last = np.ceil((phase + kl - eps_end) / np.pi) - 1
    return first, np.maximum(last - first + 1, 0).astype(np.int64)


def end_margins(graph: MetricGraph) -> tuple[np.ndarray, np.ndarray]:
    """Phase margins at the ``x = 0`` and ``x = L`` ends of every edge."""
    leaf = set(graph.boundary)
    start = np.array([LEAF_MARGIN if e.tail in leaf else INTERIOR_MARGIN for e in graph.edges])
    end = np.array([LEAF_MARGIN if e.head in leaf else INTERIOR_MARGIN for e in graph.edges])
    return start, end


def _signed_phase(pair: GraphEigenpair) -> np.ndarray:
    return np.arctan2(-pair.coefficients[:, 1], pair.coefficients[:, 0])


def _vertex_flags(graph: MetricGraph, pair: GraphEigenpair, tol: float):
    kk = np.array([pair.k])
    extremum, zero = [], []
    for v in graph.vertices:
        ends = graph.ends_at[v]
        val, _ = end_rows(kk, graph.lengths[ends[0][0]], ends[0][1])
        if abs(float(val[0] @ pair.coefficients[ends[0][0]])) < tol:
            zero.append(v)
        if graph.degree[v] > 1:
            ders = [abs(float(end_rows(kk, graph.lengths[e], s)[1][0] @ pair.coefficients[e])) for e, s in ends]
            if max(ders) < tol:
                extremum.append(v)
    return extremum, zero


def _require_morse(pair: GraphEigenpair) -> None:
    if not pair.is_morse:
        raise ValueError(f"eigenfunction n={pair.n} is not Morse")


def _edge_points(graph: MetricGraph, pair: GraphEigenpair, i: int, phase: float, shift: float) -> np.ndarray:
    m0, m1 = end_margins(graph)
    first, count = phase_window(phase - shift, pair.k * graph.lengths[i], m0[i], m1[i])
    j = first + np.arange(int(count))
    return (j * np.pi + shift - phase) / pair.k


def neumann_points(graph: MetricGraph, pair: GraphEigenpair, tol: float = FLAG_TOL) -> list[GraphPoint]:
    """Interior extrema: ``k x + phi = 0 mod pi`` on edges plus flat interior vertices."""
    _require_morse(pair)
    phase = _signed_phase(pair)
    out = []
    for i, e in enumerate(graph.edges):
        for x in _edge_points(graph, pair, i, phase[i], 0.0):
            out.append(GraphPoint("neumann", edge=e.id, x=float(x)))
    extremum, _ = _vertex_flags(graph, pair, tol)
    out.extend(GraphPoint("neumann", vertex=v) for v in extremum)
    return out


def nodal_points(graph: MetricGraph, pair: GraphEigenpair, tol: float = FLAG_TOL) -> list[GraphPoint]:
    """Zeros: ``k x + phi = pi/2 mod pi`` on edges plus vanishing vertices."""
    _require_morse(pair)
    phase = _signed_phase(pair)
    out = []
    for i, e in enumerate(graph.edges):
        for x in _edge_points(graph, pair, i, phase[i], np.pi / 2):
            out.append(GraphPoint("nodal", edge=e.id, x=float(x)))
    _, zero = _vertex_flags(graph, pair, tol)
    out.extend(GraphPoint("nodal", vertex=v) for v in zero)
    return out


def _nodal_in(theta0, theta1) -> np.ndarray:
    """Number of odd multiples of pi/2 strictly between two phases."""
    lo = np.floor(np.asarray(theta0) / np.pi - 0.5)
    hi = np.ceil(np.asarray(theta1) / np.pi - 0.5)
    return np.maximum(hi - lo - 1, 0).astype(np.int64)


def position_by_count(tails, heads, n_vertices, lengths, k, eta: float = POSITION_ETA):
    """Lowest spectral position of ``k`` for a stack of domains of one topology.

    Returns ``(position, multiplicity)`` where position counts eigenvalues
    strictly below ``k``. Raises if ``k`` is not an eigenvalue of the domain.
    """
    lengths = np.atleast_2d(lengths)
    k = np.broadcast_to(np.asarray(k, dtype=float), lengths.shape[:1])
    below = count_below(tails, heads, n_vertices, lengths, k * (1 - eta))
    above = count_below(tails, heads, n_vertices, lengths, k * (1 + eta))
    mult = above - below
    if np.any(mult < 1):
        i = int(np.argmax(mult < 1))
        raise InvariantViolation(f"k={k[i]!r} is not an eigenvalue of its Neumann domain (lengths {lengths[i]})")
    return below, mult


def neumann_domains(graph: MetricGraph, pair: GraphEigenpair, tol: float = FLAG_TOL) -> list[NeumannDomainG]:
    """Partition the graph at the Neumann points of a Morse eigenfunction."""
    _require_morse(pair)
    k = pair.k
    phase = _signed_phase(pair)
    extremum, zero = _vertex_flags(graph, pair, tol)
    cut = set(extremum)
    zero = set(zero)

    parent: dict[str, str] = {}

    def find(a: str) -> str:
        parent.setdefault(a, a)
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    pieces = []  # (edge_index, x0, x1, node0, node1)
    for i, e in enumerate(graph.edges):
        xs = _edge_points(graph, pair, i, phase[i], 0.0)
        cuts = [0.0, *xs.tolist(), e.length]
        for j in range(len(cuts) - 1):
            if j == 0:
                n0 = f"{e.tail}/{e.id}:0" if e.tail in cut else e.tail
            else:
                n0 = f"{e.id}@{j - 1}+"
            if j == len(cuts) - 2:
                n1 = f"{e.head}/{e.id}:1" if e.head in cut else e.head
            else:
                n1 = f"{e.id}@{j}-"
            pieces.append((i, cuts[j], cuts[j + 1], n0, n1))
            parent[find(n1)] = find(n0)

    groups: dict[str, list[int]] = {}
    for p, piece in enumerate(pieces):
        groups.setdefault(find(piece[3]), []).append(p)

    original = set(graph.vertices)
    domains = []
    for members in groups.values():
        nodes: list[str] = []
        edges = []
        for p in members:
            i, x0, x1, n0, n1 = pieces[p]
            for n in (n0, n1):
                if n not in nodes:
                    nodes.append(n)
            edges.append(Edge(f"{graph.edges[i].id}[{x0:.12g},{x1:.12g}]", n0, n1, x1 - x0))
        sub = MetricGraph(tuple(nodes), tuple(edges))
        degree = sub.degree
        boundary = [n for n in nodes if degree[n] == 1]
        interior = [n for n in nodes if degree[n] >= 3]
        contained = tuple(n for n in nodes if n in original)
        if sub.n_edges == 1 and not edges[0].is_loop:
            kind = "path"
        elif sub.betti == 0 and len(interior) == 1 and sub.n_edges == degree[interior[0]]:
            kind = "star"
        else:
            kind = "other"
        if kind == "star":
            vertex = interior[0] if interior[0] in original else None
        else:
            vertex = contained[0] if len(contained) == 1 else None

        theta0 = np.array([phase[pieces[p][0]] + k * pieces[p][1] for p in members])
        theta1 = np.array([phase[pieces[p][0]] + k * pieces[p][2] for p in members])
        nodal = int(_nodal_in(theta0, theta1).sum())
        nodal += sum(1 for n in nodes if n in zero)
        maxima = 0
        for n in boundary:
            p = next(q for q in members if n in (pieces[q][3], pieces[q][4]))
            i, x0, x1, n0, _ = pieces[p]
            x = x0 if n == n0 else x1
            maxima += int(pair.amplitude[i] * math.cos(k * x + phase[i]) > 0)

        position, _ = position_by_count(sub.tails, sub.heads, sub.n_vertices, sub.lengths, k)
        is_tree = sub.betti == 0
        if is_tree and int(position[0]) != nodal:
            raise InvariantViolation(
                f"spectral position {int(position[0])} differs from nodal count {nodal} "
                f"on a {kind} domain of eigenfunction n={pair.n}"
            )
        length = math.fsum(e.length for e in edges)
        rho = k * length / len(boundary) if boundary else None
        domains.append(NeumannDomainG(
            subgraph=sub, kind=kind, k=k, length=length, boundary_count=len(boundary), rho=rho,
            spectral_position=int(position[0]), nodal_count=nodal, crosschecked=is_tree,
            maxima_on_boundary=maxima,
            pieces=tuple((pieces[p][0], pieces[p][1], pieces[p][2]) for p in members),
            vertex=vertex, original_vertices=contained,
        ))
    return domains


def domain_rho(domain: NeumannDomainG, k: float | None = None) -> float | None:
    """``k |domain| / |boundary|``; ``None`` for a domain without boundary points."""
    k = domain.k if k is None else k
    if domain.boundary_count == 0:
        return None
    return k * domain.length / domain.boundary_count


def spectral_position(domain: NeumannDomainG, k: float | None = None) -> tuple[int, bool]:
    """Position of ``k`` in the domain's spectrum and whether it was cross-checked.

    The count-based value is recomputed here; for a tree it must equal the
    nodal count of the restriction, otherwise :class:`InvariantViolation`.
    """
    k = domain.k if k is None else k
    sub = domain.subgraph
    position, _ = position_by_count(sub.tails, sub.heads, sub.n_vertices, sub.lengths, k)
    position = int(position[0])
    if domain.is_tree:
        if position != domain.nodal_count:
            raise InvariantViolation(f"spectral position {position} but nodal count {domain.nodal_count}")
        return position, True
    return position, False


def domain_bound_violations(domain: NeumannDomainG) -> list[str]:
    """Check the proven bounds for one domain; returns human-readable failures."""
    out = []
    b = domain.boundary_count
    if b == 0 or domain.rho is None:
        return out
    r = domain.rho / math.pi
    E, V = domain.subgraph.n_edges, domain.subgraph.n_vertices
    slack = 1e-9
    if domain.kind == "path":
        if abs(domain.length * domain.k - math.pi) > 1e-8 * math.pi:
            out.append("path domain length differs from pi/k")
    if not 1 / b - slack <= r <= E / b + slack:
        out.append("rho/pi outside [1/|bd|, E/|bd|]")
    if domain.kind == "star" and r > 1 - 1 / b + slack:
        out.append("star rho/pi above 1 - 1/|bd|")
    if domain.is_tree and domain.spectral_position is not None:
        N = domain.spectral_position
        if r < (N + 1) / (2 * b) - slack:
            out.append("rho/pi below (N+1)/(2|bd|)")
        if domain.kind == "star" and r > 0.5 + (N - 1) / (2 * b) + slack:
            out.append("star rho/pi above 1/2 + (N-1)/(2|bd|)")
        if domain.kind == "path" and N != 1:
            out.append("path spectral position differs from 1")
        if domain.kind == "star" and not 1 <= N <= b - 1:
            out.append("star spectral position outside [1, |bd|-1]")
    if b >= 2 and not 1 <= domain.maxima_on_boundary <= b - 1:
        out.append("maxima on boundary outside [1, |bd|-1]")
    if b >= 2 and not 1 <= domain.nodal_count <= E - V + b:
        out.append("nodal count of restriction outside [1, E - V + |bd|]")
    return out


@dataclass(frozen=True)
class CountRecord:
    n: int
    k: float
    mu: int
    phi: int
    omega: int
    sigma: int
    generic: bool


def point_counts(graph: MetricGraph, batch: EigenBatch) -> tuple[np.ndarray, np.ndarray]:
    """Neumann and nodal counts on edge interiors for every eigenfunction, vectorized."""
    k = batch.k
    phase = np.arctan2(-batch.coefficients[..., 1], batch.coefficients[..., 0])
    kl = k[:, None] * graph.lengths[None, :]
    m0, m1 = end_margins(graph)
    _, n_neu = phase_window(phase, kl, m0, m1)
    _, n_nod = phase_window(phase - np.pi / 2, kl, m0, m1)
    return n_neu.sum(axis=1), n_nod.sum(axis=1)


def surplus_series(graph: MetricGraph, spectrum, generic_only: bool = True) -> tuple[list[CountRecord], dict]:
    """Counts and surpluses ``omega = mu - n``, ``sigma = phi - n`` over a spectrum.

    Bound violations raise :class:`InvariantViolation`. The report compares
    the observed range of ``omega`` with the window ``[-1-|bd|, beta+1]``.
    """
    batch = spectrum.batch if hasattr(spectrum, "batch") else spectrum
    sel = batch.is_generic if generic_only else batch.is_morse
    sub = batch.subset(sel)
    mu, phi = point_counts(graph, sub)
    n = sub.index
    omega, sigma = mu - n, phi - n
    beta, boundary = graph.betti, len(graph.boundary)
    checks = {
        "sigma-omega": (1 - beta, beta - 1 + boundary, sigma - omega),
        "omega": (1 - beta - boundary, 2 * beta - 1, omega),
        "sigma": (0, beta, sigma),
    }
    for name, (lo, hi, values) in checks.items():
        bad = (values < lo) | (values > hi)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise InvariantViolation(f"{name}={int(values[i])} outside [{lo}, {hi}] at n={int(n[i])}")
    window = (-1 - boundary, beta + 1)
    report = {
        "samples": int(n.size),
        "omega_min": int(omega.min()) if n.size else None,
        "omega_max": int(omega.max()) if n.size else None,
        "window": window,
        "window_holds": bool(n.size == 0 or (omega.min() >= window[0] and omega.max() <= window[1])),
    }
    records = [
        CountRecord(int(a), float(b), int(c), int(d), int(e), int(f), bool(g))
        for a, b, c, d, e, f, g in zip(n, sub.k, mu, phi, omega, sigma, sub.is_generic)
    ]
    return records, report


@dataclass
class StarStats:
    """Star-domain data for one interior vertex across eigenfunctions."""

    vertex: str
    degree: int
    n: np.ndarray
    rho: np.ndarray
    position: np.ndarray  # by subgraph count
    nodal: np.ndarray  # by nodal count of the restriction
    maxima: np.ndarray


@dataclass
class BatchAnalysis:
    """Vectorized Neumann-domain analysis of many eigenfunctions.

    ``fast`` marks eigenfunctions handled in closed form (generic, a Neumann
    point on every edge); the others went through :func:`neumann_domains`.
    """

    n: np.ndarray
    k: np.ndarray
    mu: np.ndarray
    phi: np.ndarray
    generic: np.ndarray
    fast: np.ndarray
    stars: dict[str, StarStats]
    path_length_error: float  # max relative deviation of path lengths from pi/k
    path_rho_error: float  # max |rho - pi/2|
    path_position_mismatches: int
    paths_checked: int
    tree_domains_checked: int
    non_tree_domains: int
    bound_violations: list[str]
    slow_domains: list[tuple[int, NeumannDomainG]]


def analyze_batch(graph: MetricGraph, batch: EigenBatch, chunk: int = 20000) -> BatchAnalysis:
    """Domain statistics for the generic members of ``batch``."""
    sub = batch.subset(batch.is_generic)
    k = sub.k
    phase = np.arctan2(-sub.coefficients[..., 1], sub.coefficients[..., 0])
    L = graph.lengths
    kl = k[:, None] * L[None, :]
    m0, m1 = end_margins(graph)
    first, n_neu = phase_window(phase, kl, m0, m1)
    _, n_nod = phase_window(phase - np.pi / 2, kl, m0, m1)
    fast = np.all(n_neu >= 1, axis=1)
    mu, phi = n_neu.sum(axis=1), n_nod.sum(axis=1)

    kf = k[fast]
    ph = phase[fast]
    fst = first[fast]
    cnt = n_neu[fast]
    x_first = (fst * np.pi - ph) / kf[:, None]
    x_last = ((fst + cnt - 1) * np.pi - ph) / kf[:, None]
    stub = np.stack([x_first, L[None, :] - x_last], axis=-1)  # (m, E, 2) by side
    theta_end = np.stack([ph, ph + kl[fast]], axis=-1)
    theta_cut = np.stack([fst * np.pi, (fst + cnt - 1) * np.pi], axis=-1)
    stub_nodal = _nodal_in(np.minimum(theta_end, theta_cut), np.maximum(theta_end, theta_cut))
    cut_sign = np.cos(theta_cut) * sub.amplitude[fast][..., None]

    # path domains: leaf stubs, first free segment on each edge with two cuts
    half_pi = np.pi / kf
    path_lengths = []
    path_nodal = []
    for v in graph.boundary:
        (e, side), = graph.ends_at[v]
        path_lengths.append(stub[:, e, side])
        path_nodal.append(stub_nodal[:, e, side])
    x_second = x_first + half_pi[:, None]
    has_free = cnt >= 2
    for e in range(graph.n_edges):
        m = has_free[:, e]
        seg = np.where(m, x_second[:, e] - x_first[:, e], half_pi)
        path_lengths.append(seg)
        th0 = ph[:, e] + kf * x_first[:, e]
        th1 = ph[:, e] + kf * x_second[:, e]
        path_nodal.append(np.where(m, _nodal_in(th0, th1), 1))
    path_lengths = np.stack(path_lengths, axis=1) if path_lengths else np.zeros((kf.size, 0))
    path_nodal = np.stack(path_nodal, axis=1) if path_nodal else np.zeros((kf.size, 0), int)
    rel = np.abs(path_lengths * kf[:, None] / np.pi - 1.0)
    path_length_error = float(rel.max()) if rel.size else 0.0
    rho_path = kf[:, None] * path_lengths / 2
    path_rho_error = float(np.abs(rho_path - np.pi / 2).max()) if rho_path.size else 0.0
    mismatches = 0
    one = np.zeros((1,), dtype=np.intp)
    if path_lengths.size:
        flat_L = path_lengths.reshape(-1, 1)
        flat_k = np.repeat(kf, path_lengths.shape[1])
        pos = np.concatenate([
            position_by_count(one, one + 1, 2, flat_L[i:i + chunk], flat_k[i:i + chunk])[0]
            for i in range(0, flat_k.size, chunk)
        ])
        mismatches = int(np.count_nonzero(pos != path_nodal.reshape(-1)))
    paths_checked = int(path_lengths.size)

    stars: dict[str, StarStats] = {}
    violations: list[str] = []
    n_fast = sub.index[fast]
    for v in graph.interior_vertices:
        ends = graph.ends_at[v]
        d = len(ends)
        lengths = np.stack([stub[:, e, s] for e, s in ends], axis=1)
        nodal = np.stack([stub_nodal[:, e, s] for e, s in ends], axis=1).sum(axis=1)
        maxima = np.stack([cut_sign[:, e, s] > 0 for e, s in ends], axis=1).sum(axis=1)
        tails = np.zeros(d, dtype=np.intp)
        heads = np.arange(1, d + 1, dtype=np.intp)
        position = np.concatenate([
            position_by_count(tails, heads, d + 1, lengths[i:i + chunk], kf[i:i + chunk])[0]
            for i in range(0, kf.size, chunk)
        ]) if kf.size else np.zeros(0, np.int64)
        rho = kf * lengths.sum(axis=1) / d
        stars[v] = StarStats(v, d, n_fast, rho, position, nodal, maxima)
        r = rho / np.pi
        tol = 1e-9
        bad = {
            "star rho/pi below 1/d": r < 1 / d - tol,
            "star rho/pi above 1 - 1/d": r > 1 - 1 / d + tol,
            "star position outside [1, d-1]": (position < 1) | (position > d - 1),
            "rho/pi below (N+1)/(2d)": r < (position + 1) / (2 * d) - tol,
            "star rho/pi above 1/2 + (N-1)/(2d)": r > 0.5 + (position - 1) / (2 * d) + tol,
            "maxima on boundary outside [1, d-1]": (maxima < 1) | (maxima > d - 1),
        }
        for name, mask in bad.items():
            if np.any(mask):
                violations.append(f"{name} at vertex {v} for n={int(n_fast[np.argmax(mask)])}")
    tree_checked = paths_checked + kf.size * len(graph.interior_vertices)
    mismatches += int(sum(np.count_nonzero(s.position != s.nodal) for s in stars.values()))

    slow_domains = []
    non_tree = 0
    for i in np.nonzero(~fast)[0]:
        pair = sub.pair(int(i))
        for dom in neumann_domains(graph, pair):
            slow_domains.append((pair.n, dom))
            if dom.is_tree:
                tree_checked += 1
            else:
                non_tree += 1
            violations.extend(f"{msg} (n={pair.n})" for msg in domain_bound_violations(dom))

    return BatchAnalysis(
        n=sub.index, k=k, mu=mu, phi=phi, generic=np.ones(k.size, dtype=bool), fast=fast,
        stars=stars, path_length_error=path_length_error, path_rho_error=path_rho_error,
        path_position_mismatches=mismatches, paths_checked=paths_checked,
        tree_domains_checked=int(tree_checked), non_tree_domains=non_tree,
        bound_violations=violations, slow_domains=slow_domains,
    )
