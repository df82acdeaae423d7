import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from neumann_domains.stats.distributions import (EmpiricalDistribution, InsufficientSamples, support_check,
                                                 symmetry_test, values_outside)
from neumann_domains.stats.lattice import (LatticeCountState, arcsin_cdf, lattice_count_by_rows,
                                           lattice_counts_by_histogram, radius_sq_cutoff, sup_distance)

from oracles import lattice_count_brute


def test_arcsin_cdf_values():
    assert arcsin_cdf(0.0) == 0.0
    assert arcsin_cdf(4 / math.pi) == pytest.approx(1.0)
    assert arcsin_cdf(10.0) == 1.0
    assert arcsin_cdf(2 / math.pi) == pytest.approx(1 / 3)
    assert arcsin_cdf(2 * math.sqrt(2) / math.pi) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        arcsin_cdf(-0.1)


@given(st.floats(0, 1.27), st.floats(0, 1.27))
def test_arcsin_cdf_monotone(a, b):
    lo, hi = sorted((a, b))
    assert arcsin_cdf(lo) <= arcsin_cdf(hi)


def test_lattice_counts_three_ways():
    table = lattice_counts_by_histogram(400)
    for n in range(0, 401, 7):
        ref = lattice_count_brute(n)
        assert table[n] == ref
        assert lattice_count_by_rows(n) == ref


def test_lattice_count_weyl_law():
    n = 10 ** 6
    assert lattice_count_by_rows(n) / (math.pi * n) == pytest.approx(1.0, abs=5e-3)


def test_lattice_state_consistency():
    lam = 4 * math.pi ** 2 * 200.5
    s = LatticeCountState.enumerate(lam)
    assert s.r2_max == pytest.approx(radius_sq_cutoff(lam))
    assert s.weyl_count == 4 * s.pairs == lattice_count_brute(201)
    assert np.all(s.mx ** 2 + s.my ** 2 < s.r2_max)
    i = 17
    assert s.n_t[i] == lattice_count_brute(int(s.mx[i]) ** 2 + int(s.my[i]) ** 2)
    # modes with N_T = 0 have an infinite ratio and never count
    assert s.cdf(np.inf) == pytest.approx(4 * np.isfinite(s.ratio).sum() / s.weyl_count)
    assert np.isinf(s.ratio[(s.mx == 1) & (s.my == 1)]).all()
    assert s.cdf(0.0) == 0.0
    assert 0 <= sup_distance(s) <= 1


def test_sup_distance_against_dense_grid():
    s = LatticeCountState.enumerate(4 * math.pi ** 2 * 3000)
    c = np.linspace(0, 1.5, 20001)
    approx = np.abs(s.cdf(c) - arcsin_cdf(c)).max()
    exact = sup_distance(s)
    assert approx <= exact + 1e-12
    assert exact - approx < 0.01


def test_lattice_cutoff_guard():
    with pytest.raises(ValueError):
        LatticeCountState.enumerate(-1.0)


def test_histogram_and_merge():
    a = EmpiricalDistribution.histogram([0.1, 0.2, 0.9], bins=10)
    b = EmpiricalDistribution.histogram([0.95], bins=10)
    m = a.merge(b)
    assert m.samples == 4 and m.counts.sum() == 4
    assert m.counts[9] == 2
    with pytest.raises(ValueError):
        a.merge(EmpiricalDistribution.histogram([0.5], bins=5))


def test_pmf_merge_unions_atoms():
    a = EmpiricalDistribution.pmf([1, 2, 2])
    b = EmpiricalDistribution.pmf([-1, 2])
    m = a.merge(b)
    assert m.atoms.tolist() == [-1, 1, 2]
    assert m.counts.tolist() == [1, 1, 3]
    assert m.probabilities().sum() == pytest.approx(1.0)


@given(st.lists(st.integers(-5, 5), min_size=1, max_size=50))
def test_pmf_json_round_trip(values):
    d = EmpiricalDistribution.pmf(values, center=0.0)
    assert EmpiricalDistribution.from_json(d.to_json()) == d


@given(st.lists(st.floats(0, 1), min_size=1, max_size=50), st.integers(1, 30))
def test_histogram_json_round_trip(values, bins):
    d = EmpiricalDistribution.histogram(values, bins=bins)
    assert d.counts.sum() == len(values)
    assert EmpiricalDistribution.from_json(d.to_json()) == d


def test_symmetry_test_detects_asymmetry():
    rng = np.random.default_rng(1)
    sym = EmpiricalDistribution.histogram(rng.uniform(0, 1, 50_000), bins=20, center=0.5)
    assert symmetry_test(sym)["passed"]
    skew = EmpiricalDistribution.histogram(rng.beta(2, 5, 50_000), bins=20, center=0.5)
    assert not symmetry_test(skew)["passed"]
    with pytest.raises(InsufficientSamples):
        symmetry_test(EmpiricalDistribution.histogram([0.5], bins=20, center=0.5))


def test_symmetry_pmf_half_integer_center():
    d = EmpiricalDistribution.pmf([-3] * 5000 + [-2] * 5000 + [-1] * 5000)
    assert symmetry_test(d, center=-2.0)["passed"]
    with pytest.raises(ValueError):
        symmetry_test(d, center=-2.25)


def test_support_check():
    d = EmpiricalDistribution.pmf([-3, -2, -1, 0])
    r = support_check(d, {-3, -2, -1})
    assert not r["passed"] and r["outside_count"] == 1
    h = EmpiricalDistribution.histogram([0.2, 0.4], bins=10)
    assert support_check(h, (0.2, 0.5))["passed"]
    assert values_outside([0.1, 0.5, 0.9], 0.2, 0.8) == 2
