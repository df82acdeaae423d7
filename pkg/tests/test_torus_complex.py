import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from neumann_domains.torus.complex import build_complex
from neumann_domains.torus.field import TorusField, random_field
from neumann_domains.torus.geometry import RHO_ONE, RHO_TWO, fitted_tangent, line_angle, points_inside, rho_position_certificate
from neumann_domains.torus.sampling import draw_field, sample_complexes
from neumann_domains.torus.tracing import TRACE_TOL, saddle_tangent

from oracles import flow_endpoint

SEEDS = range(4)


@pytest.fixture(scope="module")
def complexes():
    return [build_complex(random_field(13, np.random.default_rng(s))) for s in SEEDS]


def test_topology(complexes):
    for cx in complexes:
        assert cx.euler == 0
        assert cx.n_edges == 4 * cx.n_saddles
        assert cx.n_faces == 2 * cx.n_saddles
        assert cx.total_area == pytest.approx(1.0, abs=1e-9)
        assert sum(f.area for f in cx.faces) == pytest.approx(1.0, abs=1e-9)


def test_faces_pair_one_max_one_min(complexes):
    for cx in complexes:
        kinds = [c.kind for c in cx.critical]
        for f in cx.faces:
            assert kinds[f.maximum] == "max" and kinds[f.minimum] == "min"
            assert all(kinds[s] == "saddle" for s in f.saddles)
            assert f.rho == pytest.approx(f.area / f.perimeter * cx.field.wavenumber)


def test_separatrices(complexes):
    for cx in complexes:
        by_saddle = {}
        terminals = set()
        for s in cx.separatrices:
            by_saddle.setdefault(s.saddle, []).append(s)
            terminals.add(s.terminal)
            v = cx.field.value(s.points)
            d = np.diff(v) * (1 if s.descending else -1)
            assert d.max() < 1e-9 * cx.field.scale
            assert cx.critical[s.terminal].kind == ("min" if s.descending else "max")
        assert all(len(v) == 4 for v in by_saddle.values())
        assert terminals == {c.index for c in cx.critical if c.is_extremum}


def test_saddle_right_angles(complexes):
    for cx in complexes:
        k = cx.field.wavenumber
        by_saddle = {}
        for s in cx.separatrices:
            by_saddle.setdefault(s.saddle, []).append(saddle_tangent(s, k))
        for tangents in by_saddle.values():
            ang = np.sort([math.atan2(t[1], t[0]) for t in tangents])
            gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * math.pi]]))
            assert np.abs(gaps - math.pi / 2).max() < 1e-3


def test_nodal_crossing_angles(complexes):
    for cx in complexes:
        for f in cx.faces:
            assert f.nodal_arc is not None and len(f.nodal_ends) == 2
            for end in f.nodal_ends:
                target = math.pi / 4 if end.at_saddle else math.pi / 2
                assert max(abs(a - target) for a in end.angles) < 1e-2


def test_nodal_neumann_inequality(complexes):
    for cx in complexes:
        assert cx.nodal_count >= 1
        assert cx.neumann_count >= cx.nodal_count / 2


def test_faces_by_gradient_flow(complexes):
    rng = np.random.default_rng(0)
    cx = complexes[0]
    pos = np.array([c.position for c in cx.critical])
    checked = 0
    for f in cx.faces[::2][:12]:
        lo, hi = f.polygon.min(axis=0), f.polygon.max(axis=0)
        pts = rng.uniform(lo, hi, (200, 2))
        inside = pts[points_inside(f.polygon, pts)]
        if len(inside) == 0:
            continue
        p = np.mod(inside[0], 1.0)
        assert flow_endpoint(cx.field, p, True, pos) == f.maximum
        assert flow_endpoint(cx.field, p, False, pos) == f.minimum
        checked += 1
    assert checked >= 10


def test_negated_field_same_shapes(complexes):
    f = complexes[1].field
    neg = build_complex(TorusField(f.modes, -f.coefficients))
    a = np.sort([x.rho for x in complexes[1].faces])
    b = np.sort([x.rho for x in neg.faces])
    assert np.allclose(a, b, atol=1e-6)
    assert sorted(x.kind for x in complexes[1].faces) == sorted(x.kind for x in neg.faces)


def test_half_shift_pairs_faces():
    # f(p + (1/2, 1/2)) = -f(p), so faces come in pairs with equal rho
    cx = build_complex(random_field(65, np.random.default_rng(2)), nodal=False)
    rho = np.sort([f.rho for f in cx.faces])
    assert cx.n_faces % 2 == 0
    assert np.allclose(rho[0::2], rho[1::2], atol=1e-6)


def test_tracing_tolerance_halved(complexes):
    cx = complexes[2]
    fine = build_complex(cx.field, nodal=False, tol=TRACE_TOL / 2)
    a = np.sort([f.rho for f in cx.faces])
    b = np.sort([f.rho for f in fine.faces])
    assert a.shape == b.shape
    assert np.abs(a - b).max() < 1e-4


@pytest.mark.parametrize("mx, my", [(1, 1), (1, 2), (2, 3), (3, 1)])
def test_separable_counts(mx, my):
    cx = build_complex(TorusField.separable(mx, my))
    assert cx.n_faces == 8 * mx * my
    assert cx.n_saddles == 4 * mx * my
    assert cx.euler == 0
    assert cx.nodal_count == 4 * mx * my
    kinds = [f.kind for f in cx.faces]
    if mx == my:
        assert set(kinds) == {"other"}
    else:
        assert kinds.count("star") == kinds.count("lens") == 4 * mx * my
    for f in cx.faces:
        arc = f.nodal_arc
        assert min(np.ptp(arc[:, 0]), np.ptp(arc[:, 1])) < 1e-9
        assert all(e.at_saddle for e in f.nodal_ends)
    # all stars are congruent, as are all lenses; a star and a lens tile one cell
    if mx != my:
        star = [f.area for f in cx.faces if f.kind == "star"]
        lens = [f.area for f in cx.faces if f.kind == "lens"]
        assert np.ptp(star) < 1e-9 and np.ptp(lens) < 1e-9
        assert star[0] + lens[0] == pytest.approx(1 / (4 * mx * my), rel=1e-9)


def test_separable_extremum_angles():
    cx = build_complex(TorusField.separable(1, 2), nodal=False)
    for f in cx.faces:
        expected = {"star": (0, 0), "lens": (math.pi, math.pi)}[f.kind]
        assert np.allclose(f.extremum_angles, expected, atol=1e-2)


def test_rho_certificates():
    assert RHO_ONE == pytest.approx(1.8411837813406593 / 2)
    assert RHO_TWO == pytest.approx(1.8411837813406593 / math.sqrt(2))
    assert rho_position_certificate(0.5) == "unknown"
    assert rho_position_certificate(1.0) == "N>1 certified"
    assert rho_position_certificate(1.4) == "N>2 certified"


def test_line_angle():
    assert line_angle(np.array([1.0, 0]), np.array([-1.0, 1e-12])) == pytest.approx(0, abs=1e-9)
    assert line_angle(np.array([1.0, 0]), np.array([1.0, 1.0])) == pytest.approx(math.pi / 4)


def test_sampling_independent_of_jobs():
    a = sample_complexes(5, 3, seed=11, nodal=False, jobs=1)
    b = sample_complexes(5, 3, seed=11, nodal=False, jobs=2)
    assert a.draws == b.draws
    assert [[f.rho for f in cx.faces] for cx in a.complexes] == [[f.rho for f in cx.faces] for cx in b.complexes]
    f = draw_field(5, 11, a.draws[0])
    assert np.array_equal(f.coefficients, a.complexes[0].field.coefficients)


@given(st.floats(0.2, 5.0), st.floats(0.0, 1.0), st.floats(0.005, 0.25))
def test_fitted_tangent_on_circle(radius, frac, step):
    # samples ``step`` radians apart; the query point lies anywhere between
    # samples, on either side of the nearest one
    theta = step * np.arange(-4, 5)
    pts = radius * np.stack([np.cos(theta), np.sin(theta)], -1)
    phi = theta[3] + frac * (theta[5] - theta[3])
    at = radius * np.array([math.cos(phi), math.sin(phi)])
    t = fitted_tangent(pts, at)
    assert line_angle(t, np.array([-math.sin(phi), math.cos(phi)])) < 0.05 * step ** 2 + 1e-9
