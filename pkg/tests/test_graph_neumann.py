import math

import numpy as np
import pytest

from neumann_domains.graphs.library import figure_eight, interval, irrational_lengths, lasso, mandarin, star
from neumann_domains.graphs.neumann import (analyze_batch, domain_bound_violations, domain_rho, neumann_domains,
                                            neumann_points, nodal_points, point_counts, spectral_position,
                                            surplus_series)
from neumann_domains.graphs.spectrum import compute_spectrum, reconstruct_eigenfunction


def _xs(points):
    return sorted(p.x for p in points if p.x is not None)


def test_interval_cos3x_points():
    pair = reconstruct_eigenfunction(interval(), 3.0)
    assert np.allclose(_xs(neumann_points(interval(), pair)), [math.pi / 3, 2 * math.pi / 3], atol=1e-9)
    assert np.allclose(_xs(nodal_points(interval(), pair)), [math.pi / 6, math.pi / 2, 5 * math.pi / 6], atol=1e-9)


@pytest.mark.parametrize("n", [1, 2, 5])
def test_interval_domains_are_half_waves(n):
    g = interval()
    doms = neumann_domains(g, reconstruct_eigenfunction(g, float(n)))
    assert len(doms) == n
    for d in doms:
        assert d.kind == "path"
        assert d.length == pytest.approx(math.pi / n, rel=1e-9)
        assert d.nodal_count == 1 and d.spectral_position == 1
        assert domain_bound_violations(d) == []
    assert sum(d.length for d in doms) == pytest.approx(g.total_length)


def test_star_domain_around_centre():
    g = star(irrational_lengths(3))
    sp = compute_spectrum(g, 60)
    seen = 0
    for pair in list(sp)[1:]:
        if not pair.is_generic:
            continue
        doms = neumann_domains(g, pair)
        assert sum(d.length for d in doms) == pytest.approx(g.total_length, rel=1e-9)
        stars = [d for d in doms if d.kind == "star"]
        for d in stars:
            seen += 1
            assert d.vertex == "c" and d.boundary_count == 3 and d.is_tree
            pos, checked = spectral_position(d)
            assert checked and 1 <= pos <= 2
            assert 1 / 3 - 1e-9 <= domain_rho(d) / math.pi <= 2 / 3 + 1e-9
            assert domain_bound_violations(d) == []
        for d in doms:
            if d.kind == "path":
                assert d.rho == pytest.approx(math.pi / 2, rel=1e-8)
    assert seen > 20


def test_figure_eight_domains_partition():
    g = figure_eight(1.0, math.sqrt(2))
    sp = compute_spectrum(g, 40)
    for pair in list(sp)[1:]:
        if pair.is_generic:
            doms = neumann_domains(g, pair)
            assert sum(d.length for d in doms) == pytest.approx(g.total_length, rel=1e-9)
            for d in doms:
                assert domain_bound_violations(d) == []


def test_non_morse_rejected():
    g = lasso()
    with pytest.raises(ValueError):
        neumann_domains(g, reconstruct_eigenfunction(g, 2 * math.pi))


def test_surplus_tree_sigma_zero():
    g = star(irrational_lengths(4))
    records, report = surplus_series(g, compute_spectrum(g, 400))
    assert records and all(r.sigma == 0 for r in records)
    assert report["window_holds"]


def test_surplus_three_star_omega_support():
    g = star(irrational_lengths(3))
    records, _ = surplus_series(g, compute_spectrum(g, 2000))
    assert {r.omega for r in records} <= {-3, -2, -1}
    assert {r.omega for r in records} >= {-2, -1}


def test_surplus_interval():
    g = interval()
    records, _ = surplus_series(g, compute_spectrum(g, 50))
    assert all(r.omega == -1 and r.sigma == 0 for r in records)


def test_surplus_cycle_bounds():
    g = mandarin(irrational_lengths(3))
    records, report = surplus_series(g, compute_spectrum(g, 500))
    beta = g.betti
    for r in records:
        assert 0 <= r.sigma <= beta
        assert 1 - beta - len(g.boundary) <= r.omega <= 2 * beta - 1


def test_batch_matches_domainwise():
    g = star(irrational_lengths(5))
    sp = compute_spectrum(g, 400)
    an = analyze_batch(g, sp.batch)
    assert an.bound_violations == []
    assert an.path_length_error < 1e-8 and an.path_rho_error < 1e-8
    assert an.path_position_mismatches == 0
    stats = an.stars["c"]
    by_n = dict(zip(stats.n.tolist(), stats.rho.tolist()))
    checked = 0
    for pair in list(sp)[1:]:
        if not pair.is_generic or pair.n not in by_n:
            continue
        d = [d for d in neumann_domains(g, pair) if d.kind == "star"]
        assert len(d) == 1
        assert d[0].rho == pytest.approx(by_n[pair.n], rel=1e-9)
        checked += 1
        if checked == 60:
            break
    assert checked == 60
    assert np.array_equal(stats.position, stats.nodal)


def test_point_counts_match_lists():
    g = star(irrational_lengths(3))
    sp = compute_spectrum(g, 80)
    sub = sp.batch.subset(sp.batch.is_generic)
    mu, phi = point_counts(g, sub)
    for i, pair in enumerate(p for p in list(sp) if p.is_generic):
        assert mu[i] == len(neumann_points(g, pair))
        assert phi[i] == len(nodal_points(g, pair))
