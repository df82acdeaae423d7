"""Spectrum and eigenfunctions of standard metric graphs.

Eigenvalues are bracketed with the exact counting function, simple ones are
polished on the real secular function and clustered ones are resolved by
bisecting the count and confirmed by the null space of the matching matrix.
Eigenfunctions are stored per edge as ``a cos(kx) + b sin(kx)`` and in
amplitude-phase form ``A cos(kx + phi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .metric_graph import MetricGraph
from .secular import counting_function, end_rows, matching_matrix, secular_value

ROOT_TOL = 1e-11
MERGE_REL = 1e-8
NULL_REL = 1e-7
FLAG_TOL = 1e-8
VERTEX_DIST_TOL = 1e-9
GRID_OFFSET = 0.381966


class SpectrumError(RuntimeError):
    """Completeness or consistency failure; ``interval`` locates it in k."""

    def __init__(self, message: str, interval: tuple[float, float] | None = None) -> None:
        self.interval = interval
        super().__init__(message if interval is None else f"{message} in k-interval {interval}")


@dataclass(frozen=True)
class GraphEigenpair:
    """One eigenfunction ``f|_e(x) = amplitude[e] * cos(k x + phase[e])``.

    For ``k = 0`` the eigenfunction is the constant ``amplitude[e]``.
    """

    n: int
    k: float
    amplitude: np.ndarray
    phase: np.ndarray
    coefficients: np.ndarray  # (E, 2) pairs (a, b)
    multiplicity: int = 1
    is_morse: bool = False
    is_generic: bool = False
    indeterminate: bool = False

    @property
    def eigenvalue(self) -> float:
        return self.k * self.k

    def value(self, edge: int, x) -> np.ndarray:
        return self.amplitude[edge] * np.cos(self.k * np.asarray(x) + self.phase[edge])

    def derivative(self, edge: int, x) -> np.ndarray:
        return -self.k * self.amplitude[edge] * np.sin(self.k * np.asarray(x) + self.phase[edge])


@dataclass
class EigenBatch:
    """Column-oriented storage for many eigenfunctions of one graph."""

    graph: MetricGraph
    k: np.ndarray
    coefficients: np.ndarray  # (m, E, 2)
    multiplicity: np.ndarray
    is_morse: np.ndarray
    is_generic: np.ndarray
    indeterminate: np.ndarray
    index: np.ndarray = None  # eigenvalue index n

    def __post_init__(self) -> None:
        if self.index is None:
            self.index = np.arange(self.k.size)

    @property
    def amplitude(self) -> np.ndarray:
        return np.hypot(self.coefficients[..., 0], self.coefficients[..., 1])

    @property
    def phase(self) -> np.ndarray:
        return np.mod(np.arctan2(-self.coefficients[..., 1], self.coefficients[..., 0]), 2 * np.pi)

    def __len__(self) -> int:
        return self.k.size

    def pair(self, i: int) -> GraphEigenpair:
        return GraphEigenpair(
            n=int(self.index[i]),
            k=float(self.k[i]),
            amplitude=self.amplitude[i],
            phase=self.phase[i],
            coefficients=self.coefficients[i],
            multiplicity=int(self.multiplicity[i]),
            is_morse=bool(self.is_morse[i]),
            is_generic=bool(self.is_generic[i]),
            indeterminate=bool(self.indeterminate[i]),
        )

    def subset(self, mask) -> EigenBatch:
        return EigenBatch(
            self.graph, self.k[mask], self.coefficients[mask], self.multiplicity[mask],
            self.is_morse[mask], self.is_generic[mask], self.indeterminate[mask], self.index[mask],
        )


@dataclass
class SpectrumScan(Sequence):
    """Result of :func:`compute_spectrum`, a sequence of :class:`GraphEigenpair`.

    ``expected_count`` is the exact count of eigenvalues below ``k_max``;
    ``found_count`` the number located by the scan. ``weyl_defect`` is
    ``expected_count - |G| k_max / pi``, bounded in size by ``E + V``.
    """

    graph: MetricGraph
    k_max: float
    step: float
    tolerance: float
    batch: EigenBatch
    expected_count: int
    found_count: int
    weyl_defect: float
    diagnostics: list[str] = field(default_factory=list)

    @property
    def k(self) -> np.ndarray:
        return self.batch.k

    @property
    def multiplicity(self) -> np.ndarray:
        return self.batch.multiplicity

    def __len__(self) -> int:
        return len(self.batch)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self.batch.pair(j) for j in range(len(self))[i]]
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(i)
        return self.batch.pair(i)

    def __iter__(self) -> Iterator[GraphEigenpair]:
        return (self.batch.pair(i) for i in range(len(self)))


def edge_gram(k: np.ndarray, L: np.ndarray) -> np.ndarray:
    """L2 Gram matrices of ``(cos kx, sin kx)`` on ``[0, L]``; shape ``(..., 2, 2)``."""
    k = np.asarray(k, dtype=float)
    L = np.asarray(L, dtype=float)
    s2 = np.sin(2 * k * L)
    sk = np.sin(k * L)
    with np.errstate(divide="ignore", invalid="ignore"):
        cc = np.where(k > 0, L / 2 + s2 / (4 * k), L)
        ss = np.where(k > 0, L / 2 - s2 / (4 * k), 0.0)
        cs = np.where(k > 0, sk * sk / (2 * k), 0.0)
    return np.stack([np.stack([cc, cs], -1), np.stack([cs, ss], -1)], -2)


def l2_inner(graph: MetricGraph, k: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Graph L2 inner products of coefficient arrays ``(..., E, 2)``."""
    G = edge_gram(np.asarray(k)[..., None], graph.lengths)
    return np.einsum("...ei,...eij,...ej->...", u, G, v)


def _canonical_sign(coef: np.ndarray) -> np.ndarray:
    flat = coef.reshape(coef.shape[0], -1)
    pivot = np.argmax(np.abs(flat) > 1e-6 * np.abs(flat).max(axis=1, keepdims=True), axis=1)
    sign = np.sign(flat[np.arange(flat.shape[0]), pivot])
    sign[sign == 0] = 1.0
    return coef * sign[:, None, None]


def _null_vectors(graph: MetricGraph, k: np.ndarray, count: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Return the ``count`` smallest right singular vectors and relative singular values."""
    A = matching_matrix(graph, k)
    _, s, vt = np.linalg.svd(A)
    scale = np.sqrt(2 * graph.n_edges) * np.maximum(1.0, s[:, :1])
    vecs = vt[:, -count:, :][:, ::-1, :]
    return vecs.reshape(k.size, count, graph.n_edges, 2), s / scale


def _normalize(graph: MetricGraph, k: np.ndarray, coef: np.ndarray) -> np.ndarray:
    norm = np.sqrt(l2_inner(graph, k, coef, coef))
    return _canonical_sign(coef / norm[:, None, None])


def _orthonormal_basis(graph: MetricGraph, k: float, vecs: np.ndarray) -> np.ndarray:
    """L2-orthonormalize a stack ``(m, E, 2)`` spanning one eigenspace."""
    m = vecs.shape[0]
    G = np.array([[l2_inner(graph, np.array(k), vecs[i], vecs[j]) for j in range(m)] for i in range(m)])
    w, q = np.linalg.eigh(G)
    basis = np.einsum("ij,jel->iel", (q / np.sqrt(w)).T, vecs)
    return _canonical_sign(basis)


def classify(graph: MetricGraph, k: np.ndarray, coef: np.ndarray, multiplicity: np.ndarray,
             tol: float = FLAG_TOL) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Morse / generic flags for unit-normalized eigenfunctions, batched.

    Morse means no edge carries the zero function. Generic additionally asks
    for a simple eigenvalue, no vanishing vertex value, no interior vertex at
    which every outgoing derivative vanishes, and no Neumann point within
    ``VERTEX_DIST_TOL`` of an interior vertex. ``indeterminate`` marks cases
    within a factor 100 of a threshold.
    """
    k = np.asarray(k, dtype=float)
    amp = np.hypot(coef[..., 0], coef[..., 1])
    min_amp = amp.min(axis=1)
    morse = (min_amp > tol) & (k > 0)
    band = (min_amp > tol / 100) & (min_amp < tol * 100)

    value_min = np.full(k.size, np.inf)
    extremum = np.zeros(k.size, dtype=bool)
    near_vertex = np.zeros(k.size, dtype=bool)
    deg_band = np.zeros(k.size, dtype=bool)
    phase = np.arctan2(-coef[..., 1], coef[..., 0])
    for v in graph.vertices:
        ends = graph.ends_at[v]
        e0, side0 = ends[0]
        val_row, _ = end_rows(k, graph.lengths[e0], side0)
        value = np.einsum("mi,mi->m", val_row, coef[:, e0])
        value_min = np.minimum(value_min, np.abs(value))
        if graph.degree[v] == 1:
            continue
        max_der = np.zeros(k.size)
        for e, side in ends:
            _, der = end_rows(k, graph.lengths[e], side)
            max_der = np.maximum(max_der, np.abs(np.einsum("mi,mi->m", der, coef[:, e])))
            theta = phase[:, e] + (k * graph.lengths[e] if side == 1 else 0.0)
            dist = np.abs((theta + np.pi / 2) % np.pi - np.pi / 2)
            near_vertex |= dist < VERTEX_DIST_TOL * np.maximum(k, 1.0)
        extremum |= max_der < tol
        deg_band |= (max_der > tol / 100) & (max_der < tol * 100)
    generic = morse & (multiplicity == 1) & (value_min > tol) & ~extremum & ~near_vertex
    band |= (value_min > tol / 100) & (value_min < tol * 100)
    return morse, generic, band | deg_band


def vertex_residuals(graph: MetricGraph, k: float, coef: np.ndarray) -> tuple[float, float]:
    """Largest continuity mismatch and largest Kirchhoff sum (divided by k)."""
    kk = np.array([k], dtype=float)
    cont = 0.0
    kirch = 0.0
    for v in graph.vertices:
        values = []
        total = 0.0
        for e, side in graph.ends_at[v]:
            val, der = end_rows(kk, graph.lengths[e], side)
            values.append(float(val[0] @ coef[e]))
            total += float(der[0] @ coef[e])
        cont = max(cont, max(values) - min(values))
        kirch = max(kirch, abs(total))
    return cont, kirch


def _constant_coefficients(graph: MetricGraph) -> np.ndarray:
    coef = np.zeros((graph.n_edges, 2))
    coef[:, 0] = 1.0 / math.sqrt(graph.total_length)
    return coef


def reconstruct_eigenfunction(graph: MetricGraph, k: float, n: int = -1):
    """Eigenfunction(s) at eigenvalue ``k``, unit-normalized in L2.

    Returns one :class:`GraphEigenpair` for a simple eigenvalue and a list
    spanning the eigenspace otherwise. Raises ``ValueError`` when ``k`` is not
    an eigenvalue to within the null-space tolerance.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    if k == 0:
        coef = _constant_coefficients(graph)[None]
        batch = EigenBatch(graph, np.zeros(1), coef, np.ones(1, int), np.zeros(1, bool),
                           np.zeros(1, bool), np.zeros(1, bool), np.array([0]))
        return batch.pair(0)
    kk = np.array([float(k)])
    vecs, s = _null_vectors(graph, kk, count=2 * graph.n_edges)
    nullity = int(np.count_nonzero(s[0] < NULL_REL))
    if nullity == 0:
        raise ValueError(f"k={k!r} is not an eigenvalue (smallest relative singular value {s[0, -1]:.3e})")
    basis = _orthonormal_basis(graph, k, vecs[0, :nullity])
    mult = np.full(nullity, nullity)
    morse, generic, band = classify(graph, np.full(nullity, k), basis, mult)
    batch = EigenBatch(graph, np.full(nullity, float(k)), basis, mult, morse, generic, band,
                       np.full(nullity, n))
    pairs = [batch.pair(i) for i in range(nullity)]
    return pairs[0] if nullity == 1 else pairs


def _illinois(graph: MetricGraph, lo: np.ndarray, hi: np.ndarray, tol: float) -> np.ndarray:
    """Vectorized Illinois (modified regula falsi) on the secular function."""
    zlo = secular_value(graph, lo)
    zhi = secular_value(graph, hi)
    bad = np.sign(zlo) == np.sign(zhi)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise SpectrumError("secular function has no sign change over a simple-root cell",
                            (float(lo[i]), float(hi[i])))
    x = 0.5 * (lo + hi)
    active = np.ones(lo.size, dtype=bool)
    last_side = np.zeros(lo.size, dtype=np.int8)
    for it in range(200):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        a, b, za, zb = lo[idx], hi[idx], zlo[idx], zhi[idx]
        if it % 6 == 5:
            xn = 0.5 * (a + b)
        else:
            xn = (a * zb - b * za) / (zb - za)
            xn = np.where((xn > a) & (xn < b), xn, 0.5 * (a + b))
        zn = secular_value(graph, xn)
        left = np.sign(zn) == np.sign(za)
        # root in [xn, b] when zn shares the sign of za
        new_lo = np.where(left, xn, a)
        new_hi = np.where(left, b, xn)
        new_zlo = np.where(left, zn, za)
        new_zhi = np.where(left, zb, zn)
        side = np.where(left, 1, -1).astype(np.int8)
        repeat = side == last_side[idx]
        new_zhi = np.where(left & repeat, 0.5 * new_zhi, new_zhi)
        new_zlo = np.where(~left & repeat, 0.5 * new_zlo, new_zlo)
        last_side[idx] = side
        lo[idx], hi[idx], zlo[idx], zhi[idx] = new_lo, new_hi, new_zlo, new_zhi
        x[idx] = xn
        tol_here = np.maximum(tol, 16 * np.finfo(float).eps * xn)
        done = (new_hi - new_lo < tol_here) | (zn == 0)
        active[idx[done]] = False
    x = np.where(np.abs(hi - lo) < np.abs(x) * 1e-9, x, 0.5 * (lo + hi))
    return x


def _resolve_clusters(graph: MetricGraph, lo: np.ndarray, hi: np.ndarray, m: np.ndarray):
    """Split cells holding several eigenvalues by bisecting the exact count.

    Returns ``(simple_lo, simple_hi, cluster_k, cluster_m)``: cells with one
    eigenvalue each, and merged clusters narrower than ``MERGE_REL * k``.
    """
    simple_lo, simple_hi, ck, cm = [], [], [], []
    lo, hi, m = lo.copy(), hi.copy(), m.copy()
    base = counting_function(graph, lo)
    while lo.size:
        width = hi - lo
        narrow = width < 1e-12 * hi
        if np.any(narrow):
            ck.append(0.5 * (lo[narrow] + hi[narrow]))
            cm.append(m[narrow])
            lo, hi, m, base = lo[~narrow], hi[~narrow], m[~narrow], base[~narrow]
            if not lo.size:
                break
        mid = 0.5 * (lo + hi)
        cmid = counting_function(graph, mid)
        left = np.clip(cmid - base, 0, m)
        right = m - left
        nl, nh, nm, nb = [], [], [], []
        for a, b, c, count, start in ((lo, mid, left, left, base), (mid, hi, right, right, cmid)):
            one = count == 1
            simple_lo.append(a[one])
            simple_hi.append(b[one])
            many = count >= 2
            nl.append(a[many]); nh.append(b[many]); nm.append(count[many]); nb.append(start[many])
        lo, hi, m, base = (np.concatenate(x) for x in (nl, nh, nm, nb))
    cat = lambda xs, dt=float: np.concatenate(xs) if xs else np.zeros(0, dtype=dt)
    return cat(simple_lo), cat(simple_hi), cat(ck), cat(cm, np.int64)


def _locate(graph: MetricGraph, k_max: float, step: float, tol: float):
    """All eigenvalues ``0 < k < k_max`` with multiplicities, ascending."""
    n_grid = int(math.ceil((k_max - GRID_OFFSET * step) / step)) + 1
    grid = GRID_OFFSET * step + step * np.arange(n_grid)
    grid[-1] = max(grid[-1], k_max)
    counts = counting_function(graph, grid)
    if counts[0] != 1:
        raise SpectrumError("eigenvalue found below the first grid point", (0.0, float(grid[0])))
    jumps = np.diff(counts)
    if np.any(jumps < 0):
        i = int(np.argmax(jumps < 0))
        raise SpectrumError("counting function decreased", (float(grid[i]), float(grid[i + 1])))
    one = jumps == 1
    many = jumps >= 2
    s_lo, s_hi, ck, cm = _resolve_clusters(graph, grid[:-1][many], grid[1:][many], jumps[many])
    lo = np.concatenate([grid[:-1][one], s_lo])
    hi = np.concatenate([grid[1:][one], s_hi])
    roots = _illinois(graph, lo, hi, tol) if lo.size else np.zeros(0)
    k = np.concatenate([roots, ck])
    mult = np.concatenate([np.ones(roots.size, dtype=np.int64), cm])
    order = np.argsort(k, kind="stable")
    return k[order], mult[order], int(counts[-1]) - 1


def compute_spectrum(graph: MetricGraph, count: int, *, tol: float = ROOT_TOL) -> SpectrumScan:
    """Eigenvalues ``k_0 = 0 <= k_1 <= ... <= k_count`` with eigenfunctions.

    Degenerate eigenvalues appear once per basis vector with their
    multiplicity recorded. Raises :class:`SpectrumError` if any completeness
    or consistency check fails.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    total = graph.total_length
    step = math.pi / (4 * total)
    k_max = math.pi * (count + graph.n_edges + graph.n_vertices + 2) / total
    while counting_function(graph, k_max) < count + 1:
        k_max *= 1.5
    k, mult, expected = _locate(graph, k_max, step, tol)
    diagnostics = []
    found = int(mult.sum())
    if found != expected:
        raise SpectrumError(f"found {found} eigenvalues but the count is {expected}", (0.0, k_max))

    # merge close simple roots, confirm every multiplicity by the null space
    groups: list[list[int]] = []
    for i in range(k.size):
        if groups and k[i] - k[groups[-1][0]] < MERGE_REL * k[i]:
            groups[-1].append(i)
        else:
            groups.append([i])
    ks, ms = [], []
    for g in groups:
        kk, mm = float(np.mean(k[g])), int(mult[g].sum())
        if len(g) > 1:
            _, s = _null_vectors(graph, np.array([kk]), count=2 * graph.n_edges)
            if int(np.count_nonzero(s[0] < NULL_REL)) != mm:
                # close but distinct roots: keep them apart
                diagnostics.append(f"near-degenerate roots kept separate near k={kk!r}")
                ks.extend(k[g].tolist())
                ms.extend(mult[g].tolist())
                continue
        ks.append(kk)
        ms.append(mm)
    ks = np.array(ks)
    ms = np.array(ms, dtype=np.int64)
    need = int(np.searchsorted(np.cumsum(ms), count, side="left")) + 1
    ks, ms = ks[:need], ms[:need]

    simple = ms == 1
    coef_simple = np.zeros((0, graph.n_edges, 2))
    if simple.any():
        vecs, s = _null_vectors(graph, ks[simple], count=2)
        if np.any(s[:, -1] > NULL_REL):
            i = int(np.argmax(s[:, -1] > NULL_REL))
            kk = float(ks[simple][i])
            raise SpectrumError("no null vector at a located root", (kk, kk))
        if np.any(s[:, -2] < NULL_REL):
            i = int(np.argmax(s[:, -2] < NULL_REL))
            kk = float(ks[simple][i])
            raise SpectrumError("null space larger than the counted multiplicity", (kk, kk))
        coef_simple = _normalize(graph, ks[simple], vecs[:, 0])

    rows_k, rows_coef, rows_m = [0.0], [_constant_coefficients(graph)], [1]
    si = 0
    for kk, mm in zip(ks.tolist(), ms.tolist()):
        if mm == 1:
            rows_k.append(float(kk)); rows_coef.append(coef_simple[si]); rows_m.append(1)
            si += 1
            continue
        vecs, s = _null_vectors(graph, np.array([kk]), count=2 * graph.n_edges)
        nullity = int(np.count_nonzero(s[0] < NULL_REL))
        if nullity != mm:
            raise SpectrumError(f"counted multiplicity {mm} but null space dimension {nullity}", (kk, kk))
        diagnostics.append(f"degenerate eigenvalue k={kk!r} multiplicity {mm}")
        for vec in _orthonormal_basis(graph, kk, vecs[0, :mm]):
            rows_k.append(float(kk)); rows_coef.append(vec); rows_m.append(int(mm))
    k_all = np.array(rows_k[:count + 1])
    coef_all = np.array(rows_coef[:count + 1])
    m_all = np.array(rows_m[:count + 1], dtype=np.int64)

    n = np.arange(k_all.size)
    fried = math.pi * (n[1:] + 1) / (2 * total)
    if np.any(k_all[1:] < fried * (1 - 1e-12)):
        i = int(np.argmax(k_all[1:] < fried * (1 - 1e-12))) + 1
        raise SpectrumError(f"k_{i} violates the lower bound pi(n+1)/(2|G|)", (0.0, float(k_all[i])))
    weyl = expected + 1 - total * k_max / math.pi
    if abs(weyl) > graph.n_edges + graph.n_vertices:
        raise SpectrumError(f"eigenvalue count deviates from |G|k/pi by {weyl:.2f}", (0.0, k_max))

    morse, generic, band = classify(graph, k_all, coef_all, m_all)
    batch = EigenBatch(graph, k_all, coef_all, m_all, morse, generic, band, n)
    return SpectrumScan(graph, k_max, step, tol, batch, expected + 1, found + 1, weyl, diagnostics)
