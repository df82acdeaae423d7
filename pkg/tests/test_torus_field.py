import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from neumann_domains.torus.field import TorusField, lattice_modes, random_field

from oracles import fd_gradient, fd_hessian


def test_lattice_modes():
    assert sorted(lattice_modes(65)) == [(1, 8), (4, 7), (7, 4), (8, 1)]
    assert sorted(lattice_modes(25)) == [(0, 5), (3, 4), (4, 3), (5, 0)]
    assert lattice_modes(3) == []


def test_invalid_fields():
    with pytest.raises(ValueError):
        TorusField(np.array([[1, 2], [2, 2]]), np.ones((2, 4)))
    with pytest.raises(ValueError):
        TorusField(np.array([[0, 1]]), np.array([[0.0, 0.0, 1.0, 0.0]]))  # only sin(0 x) terms
    with pytest.raises(ValueError):
        TorusField(np.array([[0, 0]]), np.ones((1, 4)))


@given(st.integers(0, 10_000))
def test_derivatives_against_finite_differences(seed):
    f = random_field(13, np.random.default_rng(seed))
    p = np.random.default_rng(seed + 1).uniform(0, 1, 2)
    g = f.gradient(p[None])[0]
    g_fd = fd_gradient(lambda q: f.value(q[None])[0], p)
    assert np.linalg.norm(g - g_fd) <= 1e-6 * max(np.linalg.norm(g), f.scale * f.wavenumber)
    H = f.hessian(p[None])[0]
    H_fd = fd_hessian(lambda q: f.gradient(q[None])[0], p)
    assert np.abs(H - H_fd).max() <= 1e-6 * f.scale * f.eigenvalue
    assert np.allclose(H, H.T)


def test_eigenfunction_identity():
    f = random_field(65, np.random.default_rng(3))
    pts = np.random.default_rng(4).uniform(0, 1, (200, 2))
    assert np.abs(f.laplacian_residual(pts)).max() < 1e-10 * f.scale * f.eigenvalue
    assert f.eigenvalue == pytest.approx(4 * np.pi ** 2 * 65)


def test_periodic():
    f = random_field(65, np.random.default_rng(5))
    p = np.random.default_rng(6).uniform(0, 1, (50, 2))
    for shift in ([1, 0], [0, 1], [-2, 3]):
        assert np.allclose(f.value(p + shift), f.value(p), atol=1e-10)


def test_half_shift_antisymmetry():
    # every mode of norm 65 has mx + my odd
    f = random_field(65, np.random.default_rng(7))
    p = np.random.default_rng(8).uniform(0, 1, (50, 2))
    assert np.allclose(f.value(p + 0.5), -f.value(p), atol=1e-10)


def test_dict_round_trip():
    f = random_field(25, np.random.default_rng(9))
    g = TorusField.from_dict(f.to_dict())
    p = np.random.default_rng(10).uniform(0, 1, (20, 2))
    assert np.array_equal(f.value(p), g.value(p))


def test_separable_closed_form():
    f = TorusField.separable(2, 3)
    p = np.random.default_rng(11).uniform(0, 1, (20, 2))
    assert np.allclose(f.value(p), np.sin(4 * np.pi * p[:, 0]) * np.cos(6 * np.pi * p[:, 1]))


def test_random_field_is_reproducible():
    a = random_field(65, np.random.default_rng(12))
    b = random_field(65, np.random.default_rng(12))
    assert np.array_equal(a.coefficients, b.coefficients)
