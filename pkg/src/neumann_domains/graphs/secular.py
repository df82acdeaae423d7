"""Secular function, eigenvalue counting function and vertex matching system.

Four views of the same spectral problem, kept deliberately independent so
each can check the others:

* ``secular_value`` is the real form of ``det(I - U(k) S)`` for the bond
  scattering matrix ``S`` of the standard vertex conditions.
* ``count_below`` counts eigenvalues below ``k`` exactly from the edge-wise
  Dirichlet spectra plus the inertia of a vertex-space Dirichlet-to-Neumann
  matrix. It never looks at ``S``.
* ``phase_count`` counts the same eigenvalues from the eigenphases of
  ``U(k) S``; it is slower but stays accurate next to poles of the vertex
  matrix, where ``count_below`` loses precision.
* ``matching_matrix`` is the real linear system for the per-edge coefficients
  ``f_e(x) = a_e cos(kx) + b_e sin(kx)``; its null space is the eigenspace.
"""

from __future__ import annotations

import numpy as np

from .metric_graph import MetricGraph

# |sin(k L_e)| below this counts as a pole of the vertex matrix; k is nudged.
POLE_GUARD = 1e-9


def bond_scattering(graph: MetricGraph) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(S, bond_lengths)`` over the 2E directed bonds.

    Bond ``2e`` runs tail -> head along edge ``e``, bond ``2e + 1`` runs back.
    ``S[b_out, b_in] = 2/d_v - [b_out is the reversal of b_in]`` whenever
    ``b_in`` ends and ``b_out`` starts at the same vertex ``v``. ``S`` is real
    orthogonal.
    """
    E = graph.n_edges
    start = np.empty(2 * E, dtype=np.intp)
    end = np.empty(2 * E, dtype=np.intp)
    start[0::2], end[0::2] = graph.tails, graph.heads
    start[1::2], end[1::2] = graph.heads, graph.tails
    degree = np.array([graph.degree[v] for v in graph.vertices], dtype=float)
    S = np.zeros((2 * E, 2 * E))
    for b_in in range(2 * E):
        v = end[b_in]
        outgoing = np.nonzero(start == v)[0]
        S[outgoing, b_in] = 2.0 / degree[v]
        S[b_in ^ 1, b_in] -= 1.0
    return S, np.repeat(graph.lengths, 2)


def _scattering_phase(S: np.ndarray) -> complex:
    # det S is +-1; multiplying by sqrt(det S)^-1 makes the secular function real
    return 1.0 if np.linalg.det(S) > 0 else -1j


def secular_complex(graph: MetricGraph, k) -> np.ndarray:
    """``det(I - U(k) S) exp(-i k |G|) c`` with ``c`` fixed by ``det S``.

    Its imaginary part vanishes up to round-off; exposed for testing that.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    S, lengths = bond_scattering(graph)
    c = _scattering_phase(S)
    out = np.empty(k.shape, dtype=complex)
    flat_k = k.reshape(-1)
    flat_out = out.reshape(-1)
    eye = np.eye(S.shape[0])
    chunk = max(1, 2_000_000 // S.size)
    for lo in range(0, flat_k.size, chunk):
        kk = flat_k[lo:lo + chunk]
        U = np.exp(1j * kk[:, None] * lengths[None, :])
        det = np.linalg.det(eye[None] - U[:, :, None] * S[None])
        flat_out[lo:lo + chunk] = det * np.exp(-1j * kk * graph.total_length) * c
    return out


def secular_value(graph: MetricGraph, k):
    """Real secular function; its zeros in ``k > 0`` are the eigenvalues.

    Accepts a scalar or an array of wavenumbers.
    """
    k_arr = np.asarray(k, dtype=float)
    if np.any(k_arr <= 0) or not np.all(np.isfinite(k_arr)):
        raise ValueError("secular_value needs finite k > 0")
    value = secular_complex(graph, k_arr).real
    return float(value[0]) if k_arr.ndim == 0 else value.reshape(k_arr.shape)


def count_below(
    tails: np.ndarray,
    heads: np.ndarray,
    n_vertices: int,
    lengths: np.ndarray,
    k: np.ndarray,
) -> np.ndarray:
    """Number of eigenvalues ``k_n < k`` (``k_0 = 0`` included), batched.

    ``lengths`` has shape ``(m, E)`` and ``k`` shape ``(m,)``; one fixed
    topology, many length vectors. The count is the number of Dirichlet
    eigenvalues of the separate edges below ``k`` plus the number of positive
    eigenvalues of the vertex matrix ``M(k) = -Lambda(k)/k``, where ``Lambda``
    maps vertex values to outgoing derivative sums. Points where some
    ``sin(k L_e)`` vanishes are nudged upward by a relative 3e-11, which never
    crosses an eigenvalue that is not itself at ``k``.
    """
    lengths = np.atleast_2d(np.asarray(lengths, dtype=float))
    k = np.broadcast_to(np.asarray(k, dtype=float), lengths.shape[:1]).copy()
    loops = tails == heads
    for _ in range(8):
        s = np.sin(k[:, None] * lengths)
        bad = np.any(np.abs(s) < POLE_GUARD, axis=1)
        if not bad.any():
            break
        k[bad] *= 1.0 + 3e-11
    kl = k[:, None] * lengths
    s = np.sin(kl)
    c = np.cos(kl)
    M = np.zeros((lengths.shape[0], n_vertices, n_vertices))
    for e in range(lengths.shape[1]):
        t, h = tails[e], heads[e]
        if loops[e]:
            M[:, t, t] += 2.0 * np.tan(0.5 * kl[:, e])
        else:
            cot = c[:, e] / s[:, e]
            csc = 1.0 / s[:, e]
            M[:, t, t] -= cot
            M[:, h, h] -= cot
            M[:, t, h] += csc
            M[:, h, t] += csc
    positive = np.count_nonzero(np.linalg.eigvalsh(M) > 0, axis=1)
    dirichlet = np.ceil(kl / np.pi).astype(np.int64) - 1
    return dirichlet.sum(axis=1) + positive


# below this |sin(k L_e)| the vertex matrix is too ill conditioned to trust
NEAR_POLE = 1e-4


def counting_function(graph: MetricGraph, k):
    """Exact eigenvalue count ``#{n : k_n < k}`` for a graph, batched over ``k``.

    Uses :func:`count_below` and falls back to :func:`phase_count` for the
    wavenumbers that sit close to a pole of the vertex matrix.
    """
    k_arr = np.atleast_1d(np.asarray(k, dtype=float))
    out = np.empty(k_arr.size, dtype=np.int64)
    chunk = 20000
    for lo in range(0, k_arr.size, chunk):
        kk = k_arr[lo:lo + chunk]
        lengths = np.broadcast_to(graph.lengths, (kk.size, graph.n_edges))
        out[lo:lo + chunk] = count_below(graph.tails, graph.heads, graph.n_vertices, lengths, kk)
    near = np.nonzero(np.min(np.abs(np.sin(k_arr[:, None] * graph.lengths[None, :])), axis=1) < NEAR_POLE)[0]
    if near.size:
        out[near] = phase_count(graph, k_arr[near])
    return int(out[0]) if np.ndim(k) == 0 else out


def end_rows(k: np.ndarray, L: np.ndarray, side: int) -> tuple[np.ndarray, np.ndarray]:
    """Value and outgoing derivative / k of ``a cos kx + b sin kx`` at an edge end.

    Returns two ``(m, 2)`` coefficient rows acting on ``(a, b)``. Outgoing means
    pointing from the vertex into the edge.
    """
    if side == 0:
        one = np.ones_like(k)
        zero = np.zeros_like(k)
        return np.stack([one, zero], -1), np.stack([zero, one], -1)
    c, s = np.cos(k * L), np.sin(k * L)
    return np.stack([c, s], -1), np.stack([s, -c], -1)


def matching_matrix(graph: MetricGraph, k, lengths: np.ndarray | None = None) -> np.ndarray:
    """Real ``(m, 2E, 2E)`` vertex matching matrices for wavenumbers ``k``.

    Unknowns are ``(a_0, b_0, a_1, b_1, ...)``. Each vertex of degree ``d``
    contributes ``d - 1`` continuity rows and one Kirchhoff row.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    L = graph.lengths if lengths is None else np.asarray(lengths, dtype=float)
    L = np.broadcast_to(L, (k.size, graph.n_edges))
    E = graph.n_edges
    A = np.zeros((k.size, 2 * E, 2 * E))
    row = 0
    for v in graph.vertices:
        ends = graph.ends_at[v]
        rows = [end_rows(k, L[:, e], side) for e, side in ends]
        e0 = ends[0][0]
        for (e, _), (val, _) in zip(ends[1:], rows[1:]):
            A[:, row, 2 * e:2 * e + 2] += val
            A[:, row, 2 * e0:2 * e0 + 2] -= rows[0][0]
            row += 1
        for (e, _), (_, der) in zip(ends, rows):
            A[:, row, 2 * e:2 * e + 2] += der
        row += 1
    return A


def _phase_offset(S: np.ndarray) -> float:
    psi = np.mod(np.angle(np.linalg.eigvals(S)), 2 * np.pi)
    psi[(psi < 1e-9) | (psi > 2 * np.pi - 1e-9)] = 0.0
    return round(2.0 * (1.0 + psi.sum() / (2 * np.pi))) / 2.0


def phase_count(graph: MetricGraph, k) -> np.ndarray:
    """Eigenvalue count ``#{n : k_n < k}`` from the eigenphases of ``U(k) S``.

    Every eigenphase of ``U(k) S`` increases strictly with ``k`` and the sum of
    all of them grows like ``2 |G| k``, so the number of passes through zero
    equals ``|G| k / pi + c - sum(psi_j) / (2 pi)`` with ``psi_j in [0, 2 pi)``.
    The constant ``c`` is read off at ``k = 0+``. Unlike :func:`count_below`
    this stays well conditioned when ``k L_e`` is close to a multiple of pi.
    """
    k_arr = np.atleast_1d(np.asarray(k, dtype=float))
    S, lengths = bond_scattering(graph)
    offset = _phase_offset(S)
    out = np.empty(k_arr.size, dtype=np.int64)
    chunk = max(1, 2_000_000 // S.size)
    for lo in range(0, k_arr.size, chunk):
        kk = k_arr[lo:lo + chunk]
        U = np.exp(1j * kk[:, None] * lengths[None, :])
        psi = np.mod(np.angle(np.linalg.eigvals(U[:, :, None] * S[None])), 2 * np.pi)
        value = graph.total_length * kk / np.pi + offset - psi.sum(axis=1) / (2 * np.pi)
        out[lo:lo + chunk] = np.rint(value).astype(np.int64)
    return int(out[0]) if np.ndim(k) == 0 else out
