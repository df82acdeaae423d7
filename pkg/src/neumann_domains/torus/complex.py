"""Neumann-domain complex of a torus eigenfunction.

Vertices are critical points, edges are separatrices and faces, traced with a
rotation system, are the Neumann domains. Each face carries its lifted
boundary polygon, area, perimeter, rho, a shape type and the single nodal arc
that crosses it.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .critical import CriticalPoint, find_critical_points
from .field import TorusField
from .geometry import (
    angle_between,
    fitted_tangent,
    line_angle,
    perimeter,
    points_inside,
    rho_position_certificate,
    signed_area,
)
from .tracing import TRACE_TOL, Separatrix, saddle_tangent, trace_separatrices

ZERO_VALUE_TOL = 1e-9  # |f(saddle)| below this times field.scale counts as a nodal saddle
FAST_AXIS_TOL = 1e-2  # arrival this close to the fast Hessian axis makes the angle pi/2
ISOTROPY_TOL = 1e-6
NODAL_STEP = 0.02  # nodal continuation step, in units of 1/wavenumber
LIFT_TOL = 1e-9
AREA_TOL = 1e-9


class NonMorseSmale(ValueError):
    """A separatrix runs from a saddle into another saddle."""

    def __init__(self, msg: str, saddle: int | None = None):
        super().__init__(msg)
        self.saddle = saddle


class ComplexError(RuntimeError):
    """Face tracing or a structural invariant failed."""

    def __init__(self, msg: str, saddle: int | None = None):
        super().__init__(msg)
        self.saddle = saddle


@dataclass
class NodalEnd:
    point: np.ndarray
    at_saddle: bool
    saddle: int | None
    angles: list[float]  # nodal-Neumann angles at this end, in [0, pi/2]


@dataclass
class NeumannFace:
    index: int
    darts: tuple[int, ...]
    vertices: tuple[int, ...]
    maximum: int
    minimum: int
    saddles: tuple[int, ...]
    polygon: np.ndarray  # lifted boundary, not closed
    area: float
    perimeter: float
    rho: float
    kind: str  # star, lens, wedge or other
    extremum_angles: tuple[float, float]  # limiting boundary angle at the maximum, minimum
    measured_angles: tuple[float, float]  # angle between the arrivals at the capture radius
    nodal_arc: np.ndarray | None = None
    nodal_ends: tuple[NodalEnd, ...] = ()
    positive_domain: int = -1
    negative_domain: int = -1

    @property
    def saddle_count(self) -> int:
        return len(self.saddles)

    @property
    def certificate(self) -> str:
        return rho_position_certificate(self.rho)

    def to_dict(self) -> dict:
        out = {
            "id": self.index, "type": self.kind, "area": self.area, "perimeter": self.perimeter,
            "rho": self.rho, "max": self.maximum, "min": self.minimum, "saddles": list(self.saddles),
            "extremumAngles": list(self.extremum_angles), "certificate": self.certificate,
            "nodalDomains": [self.positive_domain, self.negative_domain],
        }
        if self.nodal_ends:
            out["nodalCrossings"] = [
                {"x": float(e.point[0]), "y": float(e.point[1]), "atSaddle": e.at_saddle,
                 "angles": [float(a) for a in e.angles]} for e in self.nodal_ends
            ]
        return out


@dataclass
class MorseComplex:
    field: TorusField
    critical: list[CriticalPoint]
    separatrices: list[Separatrix]
    faces: list[NeumannFace]
    nodal_count: int
    total_area: float

    @property
    def n_vertices(self) -> int:
        return len(self.critical)

    @property
    def n_edges(self) -> int:
        return len(self.separatrices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def n_saddles(self) -> int:
        return sum(c.kind == "saddle" for c in self.critical)

    @property
    def euler(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    @property
    def neumann_count(self) -> int:
        return self.n_faces

    def to_dict(self, polylines: bool = True) -> dict:
        return {
            "eigenvalue": self.field.eigenvalue,
            "field": self.field.to_dict(),
            "counts": {"vertices": self.n_vertices, "edges": self.n_edges, "faces": self.n_faces,
                       "saddles": self.n_saddles, "euler": self.euler, "nodalDomains": self.nodal_count},
            "totalArea": self.total_area,
            "criticalPoints": [c.to_dict() for c in self.critical],
            "separatrices": [s.to_dict() if polylines else
                             {k: v for k, v in s.to_dict().items() if k != "points"} for s in self.separatrices],
            "faces": [f.to_dict() for f in self.faces],
        }


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[max(ri, rj)] = min(ri, rj)


def _level_crossings(field, critical, seps, values, delta):
    """Point where each separatrix crosses the level ``f(p) -+ delta`` of its extremum ``p``."""
    lo, hi, level = [], [], []
    for s, v in zip(seps, values):
        p = critical[s.terminal]
        up = p.kind == "max"
        lev = p.value - delta[s.terminal] if up else p.value + delta[s.terminal]
        rising = v if up else -v
        i = int(np.searchsorted(rising, lev if up else -lev)) - 1
        i = min(max(i, 0), len(v) - 2)
        lo.append(s.points[i])
        hi.append(s.points[i + 1])
        level.append(lev)
    lo, hi, level = np.array(lo), np.array(hi), np.array(level)
    return _bisect_crossings(field, lo, hi, level)


def _trace_contours(field, centers, starts, levels, steps, max_steps=20000):
    """Closed level curves through ``starts``, traversed counter-clockwise about ``centers``."""
    n = len(starts)
    q = starts.copy()
    curves = [[starts[i]] for i in range(n)]
    winding = np.zeros(n)
    g = field.gradient(q)
    prev = np.stack([-g[:, 1], g[:, 0]], -1)
    r = q - centers
    # counter-clockwise at the start, then by continuity: the curve need not be star-shaped
    prev *= np.sign(r[:, 0] * prev[:, 1] - r[:, 1] * prev[:, 0])[:, None]
    active = np.arange(n)
    for _ in range(max_steps):
        if active.size == 0:
            break
        qa = q[active]
        g = field.gradient(qa)
        t = np.stack([-g[:, 1], g[:, 0]], -1) / np.linalg.norm(g, axis=1)[:, None]
        r = qa - centers[active]
        t *= np.sign(np.einsum("ij,ij->i", t, prev[active]))[:, None]
        prev[active] = t
        nxt = qa + steps[active, None] * t
        for _ in range(4):
            g = field.gradient(nxt)
            nxt = nxt - ((field.value(nxt) - levels[active]) / np.einsum("ij,ij->i", g, g))[:, None] * g
        r1 = nxt - centers[active]
        winding[active] += np.arctan2(r[:, 0] * r1[:, 1] - r[:, 1] * r1[:, 0], np.einsum("ij,ij->i", r, r1))
        q[active] = nxt
        for i, pt in zip(active, nxt):
            curves[i].append(pt.copy())
        active = active[winding[active] < 2 * np.pi]
    if active.size:
        raise ComplexError("level curve around an extremum did not close")
    # the last step overshoots the start; end exactly on it so no stretch is covered twice
    for c in curves:
        c[-1] = c[0]
    return [np.array(c) for c in curves]


def _arc_position(curve, point):
    """Arc-length coordinate of the projection of ``point`` onto a polyline."""
    a, b = curve[:-1], curve[1:]
    seg = b - a
    t = np.clip(np.einsum("ij,ij->i", point - a, seg) / np.einsum("ij,ij->i", seg, seg), 0.0, 1.0)
    d = np.linalg.norm(a + t[:, None] * seg - point, axis=1)
    i = int(np.argmin(d))
    cum = np.concatenate([[0.0], np.cumsum(np.linalg.norm(seg, axis=1))])
    return cum[i] + t[i] * (cum[i + 1] - cum[i])


def _arrival_keys(field, critical, seps, values):
    """Cyclic position of every separatrix end around its extremum.

    Each extremum is circled by a level curve whose superlevel (or sublevel)
    component is a disk: the level sits halfway to the nearest adjacent saddle
    value. Every flow line into the extremum crosses it exactly once, so the
    arc-length order of the crossings is the counter-clockwise order of the
    arrivals, however tightly they bunch up at the extremum itself.

    Returns the keys and, per extremum, the distance ``delta`` of the level
    curve's value from the extremum value.
    """
    k = field.wavenumber
    gap = {}
    for s in seps:
        g = abs(critical[s.terminal].value - critical[s.saddle].value)
        gap[s.terminal] = min(gap.get(s.terminal, np.inf), g)
    delta = {v: 0.5 * g for v, g in gap.items()}
    cross = _level_crossings(field, critical, seps, values, delta)
    ext = sorted(gap)
    first = {}
    for i, s in enumerate(seps):
        first.setdefault(s.terminal, i)
    centers = np.array([seps[first[v]].points[-1] for v in ext])
    starts = np.array([cross[first[v]] for v in ext])
    levels = np.array([critical[v].value + (-delta[v] if critical[v].kind == "max" else delta[v]) for v in ext])
    radius = np.array([math.sqrt(2 * delta[v] / np.max(np.abs(critical[v].hessian_eigenvalues))) for v in ext])
    steps = np.minimum(0.02 / k, 0.05 * radius)
    curves = dict(zip(ext, _trace_contours(field, centers, starts, levels, steps)))
    keys = np.empty(len(seps))
    for i, s in enumerate(seps):
        # move the crossing onto the lift of the extremum the curve was traced around
        offset = seps[first[s.terminal]].points[-1] - s.points[-1]
        keys[i] = _arc_position(curves[s.terminal], cross[i] + offset)
    # restart each cycle in the middle of its widest gap so no cluster straddles the origin
    for v in ext:
        c = curves[v]
        length = float(np.linalg.norm(np.diff(c, axis=0), axis=1).sum())
        idx = [i for i, s in enumerate(seps) if s.terminal == v]
        k_sorted = np.sort(keys[idx])
        gaps = np.diff(np.concatenate([k_sorted, [k_sorted[0] + length]]))
        j = int(np.argmax(gaps))
        origin = k_sorted[j] + 0.5 * gaps[j]
        keys[idx] = np.mod(keys[idx] - origin, length)
    return keys, delta


TIE_TOL = 1e-4  # arrivals closer than this along the level curve are ordered by backtracking
SPLIT_TOL = 1e-4  # well above the chord error of the traced polylines


def _right_of(field, critical, seps, values, delta, a: int, b: int) -> int:
    """+1 if separatrix ``b`` arrives to the right of ``a`` (later counter-clockwise), -1 if left.

    Both traces are compared at equal values of ``f``, walking back from the
    level curve that defines the arrival keys until they are ``SPLIT_TOL``
    apart; the side is read off there relative to the direction of travel.
    Closer to the extremum two traces can be that far apart while arriving
    from different directions, where the side test means nothing.
    """
    p = critical[seps[a].terminal]
    sgn = 1.0 if p.kind == "max" else -1.0
    va, vb = sgn * values[a], sgn * values[b]  # increasing along each trace
    floor = max(va[0], vb[0])
    top = min(va[-1], vb[-1], sgn * p.value - delta[p.index])
    pa, pb = seps[a].points, seps[b].points
    shift = pa[-1] - pb[-1]
    lev = np.linspace(top, floor, 4001)[1:]
    xa = np.stack([np.interp(lev, va, pa[:, 0]), np.interp(lev, va, pa[:, 1])], -1)
    xb = np.stack([np.interp(lev, vb, pb[:, 0]), np.interp(lev, vb, pb[:, 1])], -1) + shift
    split = np.nonzero(np.linalg.norm(xb - xa, axis=1) > SPLIT_TOL)[0]
    if split.size:
        i = split[0]
        w = xb[i] - xa[i]
        # one trace may sit on its saddle at the last level; use the other's direction
        g = field.gradient(np.stack([xa[i], xb[i]]))
        u = sgn * g[int(np.argmax(np.linalg.norm(g, axis=1)))]
        return 1 if u[0] * w[1] - u[1] * w[0] < 0 else -1
    raise NonMorseSmale(f"separatrices {a} and {b} cannot be told apart", seps[a].saddle)


def _rotation(critical, seps, keys, tie_break=None):
    """Next dart counter-clockwise around its vertex. Dart 2e is the saddle end of edge e."""
    around: dict[int, list[tuple[float, int]]] = {}
    for s, key in zip(seps, keys):
        d0 = s.points[2] - s.points[0]
        around.setdefault(s.saddle, []).append((math.atan2(d0[1], d0[0]), 2 * s.index))
        around.setdefault(s.terminal, []).append((key, 2 * s.index + 1))
    sigma = np.empty(2 * len(seps), dtype=np.int64)
    for v, lst in around.items():
        lst.sort()
        if critical[v].is_extremum and tie_break is not None:
            lst = _break_ties(lst, tie_break)
        ang = [a for a, _ in lst]
        if len(set(ang)) != len(ang) and (tie_break is None or critical[v].kind == "saddle"):
            raise ComplexError(f"two separatrix ends at critical point {v} share a position", v)
        for j, (_, d) in enumerate(lst):
            sigma[d] = lst[(j + 1) % len(lst)][1]
    missing = [c.index for c in critical if c.index not in around]
    if missing:
        raise ComplexError(f"critical point {missing[0]} is not on any separatrix")
    return sigma


def _break_ties(lst, right_of):
    """Reorder runs of arrivals whose level-curve positions coincide."""
    out, i = [], 0
    while i < len(lst):
        j = i + 1
        while j < len(lst) and lst[j][0] - lst[j - 1][0] < TIE_TOL:
            j += 1
        run = lst[i:j]
        if len(run) > 1:
            run = sorted(run, key=functools.cmp_to_key(lambda x, y: -right_of(x[1] // 2, y[1] // 2)))
        out.extend(run)
        i = j
    return out


def _dart_piece(seps, d):
    s = seps[d // 2]
    return s.points if d % 2 == 0 else s.points[::-1]


def _dart_vertex(seps, d):
    s = seps[d // 2]
    return s.saddle if d % 2 == 0 else s.terminal


def _lift_boundary(seps, orbit):
    """Concatenate the pieces of a boundary walk into one planar polygon."""
    parts, owner, corners = [], [], []
    cur = None
    for j, d in enumerate(orbit):
        piece = _dart_piece(seps, d)
        if cur is not None:
            shift = np.rint(cur - piece[0])
            if np.max(np.abs(cur - piece[0] - shift)) > LIFT_TOL:
                raise ComplexError("boundary walk does not join up", seps[d // 2].saddle)
            piece = piece + shift
        corners.append(sum(len(p) for p in parts))
        parts.append(piece[:-1])
        owner.append(np.full(len(piece) - 1, j))
        cur = piece[-1]
    poly = np.vstack(parts)
    closing = cur - poly[0]
    if np.max(np.abs(closing)) > LIFT_TOL:
        raise ComplexError(f"boundary walk does not close (offset {np.rint(closing).tolist()})",
                           seps[orbit[0] // 2].saddle)
    return poly, np.concatenate(owner), corners


def _limit_angle(crit: CriticalPoint, seps, a: Separatrix, b: Separatrix):
    """Limiting and measured boundary angle at an extremum between two arriving separatrices."""
    wa = a.points[a.capture_index] - a.points[-1]
    wb = b.points[b.capture_index] - b.points[-1]
    measured = angle_between(wa, wb)
    alpha = np.abs(crit.hessian_eigenvalues)
    if abs(alpha[0] - alpha[1]) <= ISOTROPY_TOL * alpha.max():
        # radial arrivals: the measured angle is already the limit
        return min((0.0, math.pi / 2, math.pi), key=lambda x: abs(x - measured)), measured
    slow_i = int(np.argmin(alpha))
    slow = crit.hessian_eigenvectors[:, slow_i]
    fast = crit.hessian_eigenvectors[:, 1 - slow_i]
    if line_angle(wa, fast) < FAST_AXIS_TOL or line_angle(wb, fast) < FAST_AXIS_TOL:
        return math.pi / 2, measured
    same_side = np.dot(wa, slow) * np.dot(wb, slow) > 0
    return (0.0 if same_side else math.pi), measured


def _face_kind(angles, saddle_count) -> str:
    if saddle_count != 2 or any(abs(a - math.pi / 2) < 1e-12 for a in angles):
        return "other"
    zeros = sum(a == 0.0 for a in angles)
    return {2: "star", 1: "wedge", 0: "lens"}[zeros]


def _bisect_crossings(field, a, b, level=0.0, iterations=60):
    """Point where ``f = level`` on each segment ``[a_i, b_i]``, given a sign change at the ends."""
    level = np.broadcast_to(np.asarray(level, dtype=float), (len(a),))
    fa = field.value(a) - level
    lo = np.zeros(len(a))
    hi = np.ones(len(a))
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        fm = field.value(a + mid[:, None] * (b - a)) - level
        left = np.sign(fm) == np.sign(fa)
        lo = np.where(left, mid, lo)
        hi = np.where(left, hi, mid)
    t = 0.5 * (lo + hi)
    return a + t[:, None] * (b - a)


def _trace_nodal(field, starts, first_dirs, targets, max_steps):
    """Batched predictor-corrector continuation along ``f = 0``."""
    h = NODAL_STEP / field.wavenumber
    tiny = 1e-7 / field.wavenumber
    n = len(starts)
    q = starts.copy()
    prev = first_dirs.copy()
    arcs = [[starts[i]] for i in range(n)]
    active = np.arange(n)
    first = True
    for _ in range(max_steps):
        if active.size == 0:
            break
        qa = q[active]
        if first:
            t = prev[active]
            first = False
        else:
            g = field.gradient(qa)
            t = np.stack([-g[:, 1], g[:, 0]], -1) / np.linalg.norm(g, axis=1)[:, None]
            t *= np.sign(np.einsum("ij,ij->i", t, prev[active]))[:, None]
        # a tenth of the local radius of curvature of the level line, with steps
        # growing geometrically away from the start and shrinking towards the target
        # so the end tangents are fitted on very local points
        curv = 0.1 * np.linalg.norm(field.gradient(qa), axis=1) / np.linalg.norm(field.hessian(qa), axis=(1, 2), ord=2)
        from_start = np.linalg.norm(qa - starts[active], axis=1)
        to_target = np.linalg.norm(qa - targets[active], axis=1)
        step = np.minimum(np.minimum(h, 0.5 * to_target), np.maximum(np.minimum(curv, 0.5 * from_start), 1e-3 * tiny))
        nxt = qa + step[:, None] * t
        for _ in range(4):
            g = field.gradient(nxt)
            nxt = nxt - (field.value(nxt) / np.einsum("ij,ij->i", g, g))[:, None] * g
        prev[active] = nxt - qa
        q[active] = nxt
        done = np.linalg.norm(nxt - targets[active], axis=1) < tiny
        for i, p, fin in zip(active, nxt, done):
            if fin:
                arcs[i].append(targets[i])
            else:
                arcs[i].append(p.copy())
        active = active[~done]
    if active.size:
        return None, active
    return [np.array(a) for a in arcs], active


def _saddle_corner(vertices, corners, polygon, j):
    """Index in the walk and lifted position of the saddle at an end of piece ``j``."""
    m = len(vertices)
    for c in (j, (j + 1) % m):
        if vertices[c][1] == "saddle":
            return c, polygon[corners[c]]
    raise ComplexError("boundary piece without a saddle end")


def _start_directions(field, crit, z, at_saddle):
    if at_saddle:
        e = crit.hessian_eigenvectors
        return [(sx * e[:, 0] + sy * e[:, 1]) / math.sqrt(2) for sx in (1, -1) for sy in (1, -1)]
    g = field.gradient(z)[0]
    t = np.array([-g[1], g[0]]) / np.linalg.norm(g)
    return [t, -t]


def _nodal_arcs(field, critical, seps, faces, walks):
    """Locate the two boundary crossings of every face and trace the arc between them."""
    scale = field.scale
    h = NODAL_STEP / field.wavenumber
    seg_a, seg_b, seg_piece = [], [], []
    for f, (owner, _, _) in zip(faces, walks):
        v = field.value(f.polygon)
        change = np.nonzero(np.signbit(v) != np.signbit(np.roll(v, -1)))[0]
        if len(change) != 2:
            raise ComplexError(f"face {f.index} boundary changes sign {len(change)} times, "
                               "expected exactly one nodal arc", f.saddles[0])
        for i in change:
            seg_a.append(f.polygon[i])
            seg_b.append(f.polygon[(i + 1) % len(f.polygon)])
            seg_piece.append(int(owner[i]))
    cross = _bisect_crossings(field, np.array(seg_a), np.array(seg_b))
    starts, dirs, targets, end_info = [], [], [], []
    for fi, (f, (_, corners, vertices)) in enumerate(zip(faces, walks)):
        info = []
        for j in range(2):
            z = cross[2 * fi + j]
            piece = seg_piece[2 * fi + j]
            corner, lift = _saddle_corner(vertices, corners, f.polygon, piece)
            sad = critical[vertices[corner][0]]
            at_saddle = abs(sad.value) < ZERO_VALUE_TOL * scale and np.linalg.norm(z - lift) < 1e-5
            if at_saddle:
                z = lift.copy()
                cross[2 * fi + j] = z
            info.append((piece, corner, at_saddle, sad))
        end_info.append(info)
        _, corner0, at0, sad0 = info[0]
        candidates = _start_directions(field, sad0, cross[2 * fi][None], at0)
        if at0:
            inside = []
            for r in (0.5, 0.1, 0.02, 2.0):
                inside = [d for d in candidates if points_inside(f.polygon, cross[2 * fi] + r * h * d)[0]]
                if len(inside) == 1:
                    break
        else:
            # the interior lies to the left of a counter-clockwise boundary
            u = seg_b[2 * fi] - seg_a[2 * fi]
            inward = np.sign(signed_area(f.polygon)) * np.array([-u[1], u[0]])
            inside = [d for d in candidates if np.dot(d, inward) > 0]
        if len(inside) != 1:
            raise ComplexError(f"cannot orient the nodal arc of face {f.index}", sad0.index)
        starts.append(cross[2 * fi])
        dirs.append(inside[0])
        targets.append(cross[2 * fi + 1])
    max_steps = int(4 * max(f.perimeter for f in faces) / h) + 1000
    arcs, stuck = _trace_nodal(field, np.array(starts), np.array(dirs), np.array(targets), max_steps)
    if arcs is None:
        f = faces[stuck[0]]
        raise ComplexError(f"nodal arc of face {f.index} does not reach its second crossing", f.saddles[0])
    for f, arc, info, (owner, corners, vertices) in zip(faces, arcs, end_info, walks):
        # the geometric end ramps are dense; a thinned interior sample suffices
        if len(arc) > 2 and not np.all(points_inside(f.polygon, arc[1:-1:3])):
            raise ComplexError(f"nodal arc of face {f.index} leaves its face", f.saddles[0])
        ends = []
        for j, (piece, corner, at_saddle, sad) in enumerate(info):
            z = arc[0] if j == 0 else arc[-1]
            near = arc[:6] if j == 0 else arc[-6:]
            t_nodal = fitted_tangent(near, z)
            if at_saddle:
                m = len(f.darts)
                bounding = (seps[f.darts[corner - 1] // 2], seps[f.darts[corner] // 2])
                angles = [line_angle(t_nodal, saddle_tangent(s, field.wavenumber)) for s in bounding]
            else:
                end = corners[piece + 1] if piece + 1 < len(corners) else len(f.polygon)
                pts = f.polygon[corners[piece]:end + 1] if end < len(f.polygon) else \
                    np.vstack([f.polygon[corners[piece]:], f.polygon[:1]])
                angles = [line_angle(t_nodal, fitted_tangent(pts, z))]
            ends.append(NodalEnd(z, bool(at_saddle), sad.index if at_saddle else None, angles))
        f.nodal_arc = arc
        f.nodal_ends = tuple(ends)


def _nodal_domains(critical, seps, faces, scale) -> int:
    """Nodal domain count; each face meets one positive and one negative domain.

    Positive parts of faces around a saddle with ``f > 0`` connect through the
    saddle, which joins the two maxima it is linked to; likewise for minima.
    """
    uf = _UnionFind(len(critical))
    linked: dict[int, list[int]] = {}
    for s in seps:
        linked.setdefault(s.saddle, []).append(s.terminal)
    for c in critical:
        if c.kind != "saddle" or abs(c.value) < ZERO_VALUE_TOL * scale:
            continue
        kind = "max" if c.value > 0 else "min"
        ends = [t for t in linked[c.index] if critical[t].kind == kind]
        for t in ends[1:]:
            uf.union(ends[0], t)
    for f in faces:
        f.positive_domain = uf.find(f.maximum)
        f.negative_domain = uf.find(f.minimum)
    return len({uf.find(c.index) for c in critical if c.is_extremum})


def assemble_complex(field: TorusField, critical: list[CriticalPoint], seps: list[Separatrix],
                     nodal: bool = True) -> MorseComplex:
    """Trace the faces of the separatrix graph and measure them."""
    for s in seps:
        if critical[s.terminal].kind == "saddle":
            raise NonMorseSmale(f"separatrix {s.tag} of saddle {s.saddle} runs into saddle {s.terminal}",
                                s.saddle)
    values = [field.value(s.points) for s in seps]
    keys, delta = _arrival_keys(field, critical, seps, values)
    sigma = _rotation(critical, seps, keys, lambda a, b: _right_of(field, critical, seps, values, delta, a, b))
    seen = np.zeros(len(sigma), dtype=bool)
    faces, walks, signed = [], [], []
    for d0 in range(len(sigma)):
        if seen[d0]:
            continue
        orbit = []
        d = d0
        while not seen[d]:
            seen[d] = True
            orbit.append(d)
            d = int(sigma[d ^ 1])
        if d != d0:
            raise ComplexError("rotation system is not a permutation", seps[d0 // 2].saddle)
        vertices = [(_dart_vertex(seps, d), critical[_dart_vertex(seps, d)].kind) for d in orbit]
        kinds = [k for _, k in vertices]
        if len(orbit) != 4 or kinds.count("max") != 1 or kinds.count("min") != 1:
            raise ComplexError(f"face with boundary {kinds} is not a Morse-Smale quadrilateral",
                               seps[d0 // 2].saddle)
        poly, owner, corners = _lift_boundary(seps, orbit)
        area = signed_area(poly)
        angles, measured = {}, {}
        for j, (v, kind) in enumerate(vertices):
            if kind != "saddle":
                a, b = seps[orbit[j - 1] // 2], seps[orbit[j] // 2]
                angles[kind], measured[kind] = _limit_angle(critical[v], seps, a, b)
        saddles = tuple(sorted({v for v, k in vertices if k == "saddle"}))
        ang = (angles["max"], angles["min"])
        per = perimeter(poly)
        face = NeumannFace(
            index=len(faces), darts=tuple(orbit), vertices=tuple(v for v, _ in vertices),
            maximum=next(v for v, k in vertices if k == "max"), minimum=next(v for v, k in vertices if k == "min"),
            saddles=saddles, polygon=poly, area=abs(area), perimeter=per,
            rho=abs(area) / per * field.wavenumber, kind=_face_kind(ang, len(saddles)),
            extremum_angles=ang, measured_angles=(measured["max"], measured["min"]),
        )
        faces.append(face)
        walks.append((owner, corners, vertices))
        signed.append(area)
    signed = np.array(signed)
    if not (np.all(signed > 0) or np.all(signed < 0)):
        raise ComplexError("faces traced with inconsistent orientation")
    total = float(np.abs(signed).sum())
    cx = MorseComplex(field, critical, seps, faces, 0, total)
    if cx.euler != 0:
        raise ComplexError(f"Euler characteristic {cx.euler} != 0")
    if abs(total - 1.0) > AREA_TOL:
        raise ComplexError(f"face areas sum to {total!r}, not 1")
    if nodal:
        _nodal_arcs(field, critical, seps, faces, walks)
    cx.nodal_count = _nodal_domains(critical, seps, faces, field.scale)
    return cx


def build_complex(field: TorusField, nodal: bool = True, tol: float = TRACE_TOL) -> MorseComplex:
    """Critical points, separatrices and faces of one field."""
    critical = find_critical_points(field)
    seps = trace_separatrices(field, critical, tol=tol)
    return assemble_complex(field, critical, seps, nodal=nodal)


def face_geometry(cx: MorseComplex, face: NeumannFace | int) -> dict:
    f = cx.faces[face] if isinstance(face, int) else face
    return {"area": f.area, "perimeter": f.perimeter, "rho": f.rho, "type": f.kind,
            "angles": f.extremum_angles, "certificate": f.certificate}
