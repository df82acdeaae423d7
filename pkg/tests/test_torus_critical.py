import numpy as np
import pytest
from scipy.spatial import cKDTree

from neumann_domains.torus.critical import CriticalPointSearchError, NonMorseField, find_critical_points
from neumann_domains.torus.field import TorusField, random_field

from oracles import separable_critical_points


def _match(found, expected):
    """Max wrapped distance from each expected point to the nearest found one."""
    tree = cKDTree(np.mod(found, 1.0), boxsize=1.0)
    d, _ = tree.query(np.mod(expected, 1.0))
    return d.max()


@pytest.mark.parametrize("mx, my", [(1, 1), (1, 2), (2, 3), (3, 1)])
def test_separable_positions(mx, my):
    f = TorusField.separable(mx, my)
    crit = find_critical_points(f)
    ref = separable_critical_points(mx, my)
    for kind, pts in ref.items():
        found = np.array([c.position for c in crit if c.kind == kind])
        assert len(found) == len(pts)
        assert _match(found, pts) < 1e-10
    a, b = 2 * np.pi * mx, 2 * np.pi * my
    for c in crit:
        if c.kind == "saddle":
            assert abs(c.value) < 1e-12
            assert np.allclose(c.hessian_eigenvalues, [-a * b, a * b], rtol=1e-9)


def test_isotropic_extrema_are_still_morse():
    crit = find_critical_points(TorusField.separable(2, 2))
    assert sum(c.kind == "saddle" for c in crit) == 2 * sum(c.is_extremum for c in crit) // 2


@pytest.mark.parametrize("seed", range(4))
def test_random_field_critical_points(seed):
    f = random_field(13, np.random.default_rng(seed))
    crit = find_critical_points(f)
    n_max = sum(c.kind == "max" for c in crit)
    n_min = sum(c.kind == "min" for c in crit)
    n_sad = sum(c.kind == "saddle" for c in crit)
    assert n_max + n_min == n_sad  # Euler characteristic of the torus
    for c in crit:
        assert c.gradient_norm < 1e-12 * f.scale * f.wavenumber * 10
        assert np.all(c.hessian_eigenvalues != 0)
        if c.kind == "max":
            assert c.value > 0
        if c.kind == "min":
            assert c.value < 0
    pos = np.array([c.position for c in crit])
    assert np.all((pos >= 0) & (pos < 1))
    assert [c.index for c in crit] == list(range(len(crit)))


def test_degenerate_field_rejected():
    # cos(2 pi x) is constant along y, so its critical set is a union of lines
    with pytest.raises((NonMorseField, CriticalPointSearchError)):
        find_critical_points(TorusField(np.array([[1, 0]]), np.array([[1.0, 0, 0, 0]])))
