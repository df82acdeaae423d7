"""Acceptance suite: one test and one printed PASS/FAIL line per criterion."""

import math
import time

import numpy as np
import pytest

from neumann_domains.graphs.library import double_star, interval, irrational_lengths, lasso, star
from neumann_domains.graphs.neumann import analyze_batch, neumann_domains, point_counts, surplus_series
from neumann_domains.graphs.spectrum import compute_spectrum
from neumann_domains.stats.distributions import EmpiricalDistribution, symmetry_test
from neumann_domains.stats.lattice import LatticeCountState, sup_distance
from neumann_domains.torus.complex import build_complex
from neumann_domains.torus.field import TorusField
from neumann_domains.torus.geometry import RHO_ONE
from neumann_domains.torus.sampling import sample_complexes
from neumann_domains.torus.tracing import saddle_tangent

from conftest import ACCEPTANCE_LINES

TORUS_NORM = 65
TORUS_FIELDS = 100
LATTICE_R2 = 3e7  # about 2.4e7 lattice pairs


def report(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def corpus():
    """Three graphs for the dual-route and surplus checks."""
    return {
        "5-star": star(irrational_lengths(5)),
        "double star (5, 3)": double_star(irrational_lengths(1, 7)[0], irrational_lengths(4, 1),
                                          irrational_lengths(2, 5)),
        "lasso": lasso(),
    }


@pytest.fixture(scope="module")
def graph_batches():
    out = {}
    for name, g in corpus().items():
        sp = compute_spectrum(g, 12_000)
        out[name] = (g, sp)
    return out


@pytest.fixture(scope="module")
def torus_run():
    t0 = time.perf_counter()
    run = sample_complexes(TORUS_NORM, TORUS_FIELDS, seed=2024)
    return run, time.perf_counter() - t0


def test_criterion_01_interval():
    t0 = time.perf_counter()
    g = interval()
    sp = compute_spectrum(g, 200)
    n = np.arange(1, 201)
    rel = float(np.max(np.abs(sp.k[1:] - n) / n))
    mu, _ = point_counts(g, sp.batch)
    mu_ok = bool(np.all(mu[1:] == n - 1))
    dt = time.perf_counter() - t0
    ok = rel < 1e-9 and mu_ok and dt < 1.0
    report(1, ok, f"max rel error {rel:.2e}, mu_n = n-1: {mu_ok}, {dt:.2f}s")
    assert ok


def test_criterion_02_path_domains():
    t0 = time.perf_counter()
    g = star(irrational_lengths(3))
    sp = compute_spectrum(g, 10_000 + 200)
    b = sp.batch
    sel = np.nonzero(b.k > math.pi / g.lengths.min())[0][:10_000]
    batch = b.subset(np.isin(np.arange(len(b)), sel))
    an = analyze_batch(g, batch)
    # every domain of a spread of eigenfunctions through the full partition
    worst_len = worst_rho = 0.0
    full = 0
    for i in np.linspace(0, batch.k.size - 1, 20).astype(int):
        if not batch.is_generic[i]:
            continue
        pair = batch.pair(int(i))
        for d in neumann_domains(g, pair):
            if d.kind == "star":
                continue
            worst_len = max(worst_len, abs(d.length * pair.k / math.pi - 1))
            worst_rho = max(worst_rho, abs(d.rho / (math.pi / 2) - 1))
            full += 1
    dt = time.perf_counter() - t0
    len_err = max(an.path_length_error, worst_len)
    rho_err = max(an.path_rho_error / (math.pi / 2), worst_rho)
    ok = len_err < 1e-8 and rho_err < 1e-8 and dt < 60 and batch.k.size == 10_000
    report(2, ok, f"{batch.k.size} eigenfunctions, {an.paths_checked} batch paths + {full} partitioned domains, "
                  f"length rel {len_err:.1e}, rho rel {rho_err:.1e}, {dt:.1f}s")
    assert ok


def test_criterion_03_dual_spectral_position(graph_batches):
    lines, total, mismatches, generic = [], 0, 0, 0
    for name, (g, sp) in graph_batches.items():
        an = analyze_batch(g, sp.batch)
        total += an.tree_domains_checked
        mismatches += an.path_position_mismatches
        generic += int(an.n.size)
        lines.append(f"{name}: {an.tree_domains_checked} tree domains, {int(an.n.size)} generic")
    ok = mismatches == 0 and generic >= 10_000 and len(graph_batches) >= 3
    report(3, ok, f"{mismatches} mismatches over {total} tree domains; " + "; ".join(lines))
    assert ok


def test_criterion_04_surplus_bounds(graph_batches):
    violations, windows = 0, []
    for name, (g, sp) in graph_batches.items():
        try:
            _, rep = surplus_series(g, sp)
        except Exception as exc:  # InvariantViolation carries the failing eigenfunction
            violations += 1
            windows.append(f"{name}: {exc}")
            continue
        windows.append(f"{name}: omega in [{rep['omega_min']}, {rep['omega_max']}], "
                       f"window {list(rep['window'])} {'holds' if rep['window_holds'] else 'FAILS'}")
    ok = violations == 0
    report(4, ok, f"{violations} violations; " + "; ".join(windows))
    assert ok


def test_criterion_05_morse_proportion():
    loop, tail = 1.0, math.sqrt(2) - 1
    sp = compute_spectrum(lasso(loop, tail), 10_000)
    frac = float(sp.batch.is_morse[1:].mean())
    expected = 1 - loop / (2 * (loop + tail))
    ok = abs(frac - expected) <= 0.02
    report(5, ok, f"Morse fraction {frac:.4f} vs {expected:.4f}")
    assert ok


def test_criterion_06_symmetry():
    t0 = time.perf_counter()
    g = star(irrational_lengths(5))
    sp = compute_spectrum(g, 100_000)
    an = analyze_batch(g, sp.batch)
    st = an.stars["c"]
    samples = int(st.position.size)
    pos = EmpiricalDistribution.pmf(st.position)
    zeta = EmpiricalDistribution.histogram(st.rho / np.pi, bins=100)
    records, _ = surplus_series(g, sp)
    omega = EmpiricalDistribution.pmf([r.omega for r in records])
    beta, bd = g.betti, len(g.boundary)
    res = {
        "N about 5/2": symmetry_test(pos, 2.5),
        "zeta about 1/2": symmetry_test(zeta, 0.5),
        "omega about (beta-|bd|)/2": symmetry_test(omega, 0.5 * (beta - bd)),
    }
    dt = time.perf_counter() - t0
    ok = all(r["passed"] for r in res.values()) and samples >= 100_000 - 1000
    parts = [f"{k}: TV {r['tv']:.4f} < {r['threshold']:.4f}" for k, r in res.items()]
    report(6, ok, f"{samples} star domains; " + "; ".join(parts) + f"; {dt:.0f}s")
    assert res["N about 5/2"]["threshold"] == pytest.approx(3 * math.sqrt(4 / samples))
    assert ok


def test_criterion_07_separable_counts():
    bad = []
    for mx in range(1, 5):
        for my in range(1, 5):
            cx = build_complex(TorusField.separable(mx, my), nodal=False)
            if not (cx.n_faces == 8 * mx * my and cx.n_edges == 4 * cx.n_saddles and cx.euler == 0):
                bad.append((mx, my, cx.n_faces, cx.n_edges, cx.n_saddles, cx.euler))
    ok = not bad
    report(7, ok, f"16 separable fields, failures {bad}")
    assert ok


def test_criterion_08_arcsin_law():
    t0 = time.perf_counter()
    state = LatticeCountState.enumerate(4 * math.pi ** 2 * LATTICE_R2)
    d = sup_distance(state)
    dt = time.perf_counter() - t0
    ok = state.pairs >= 100_000 and d < 0.02 and dt < 300
    report(8, ok, f"{state.pairs} lattice pairs, sup-norm {d:.4f}, {dt:.1f}s")
    assert ok


def test_criterion_09_angle_laws(torus_run):
    run, _ = torus_run
    saddles = saddle_bad = 0
    worst_saddle = worst_reg = worst_sad = 0.0
    crossings = 0
    for cx in run.complexes:
        k = cx.field.wavenumber
        by_saddle = {}
        for s in cx.separatrices:
            by_saddle.setdefault(s.saddle, []).append(saddle_tangent(s, k))
        for c in cx.critical:
            if c.kind != "saddle":
                continue
            saddles += 1
            t = by_saddle.get(c.index, [])
            if len(t) != 4:
                saddle_bad += 1
                continue
            ang = np.sort([math.atan2(v[1], v[0]) for v in t])
            gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * math.pi]]))
            worst_saddle = max(worst_saddle, float(np.abs(gaps - math.pi / 2).max()))
    # random fields almost surely have no saddle on the nodal set; separable
    # fields have every nodal crossing at a saddle
    separable = [build_complex(TorusField.separable(mx, my)) for mx, my in ((1, 1), (1, 2), (2, 3))]
    sad_crossings = 0
    for cx in list(run.complexes) + separable:
        for f in cx.faces:
            for end in f.nodal_ends:
                for a in end.angles:
                    crossings += 1
                    if end.at_saddle:
                        sad_crossings += 1
                        worst_sad = max(worst_sad, abs(a - math.pi / 4))
                    else:
                        worst_reg = max(worst_reg, abs(a - math.pi / 2))
    ok = (len(run.complexes) == TORUS_FIELDS and saddle_bad == 0 and worst_saddle < 1e-3
          and worst_sad < 1e-2 and worst_reg < 1e-2 and sad_crossings > 0 and crossings > sad_crossings)
    report(9, ok, f"{len(run.complexes)} random + {len(separable)} separable fields, {saddles} saddles, "
                  f"separatrix angle error {worst_saddle:.1e}, {crossings} nodal crossings "
                  f"({sad_crossings} at saddles, error {worst_sad:.1e}; others error {worst_reg:.1e})")
    assert ok


def test_criterion_10_rho_distribution(torus_run):
    run, _ = torus_run
    rho = {k: [] for k in ("star", "wedge", "lens", "other")}
    for cx in run.complexes:
        for f in cx.faces:
            rho[f.kind].append(f.rho)
    allr = np.concatenate([np.asarray(v) for v in rho.values()])
    frac = float(np.mean(allr > RHO_ONE))
    mean = {k: (float(np.mean(v)) if v else float("nan")) for k, v in rho.items()}
    ok = allr.size >= 10_000 and frac > 0 and mean["lens"] > mean["wedge"] > mean["star"]
    counts = ", ".join(f"{k} {len(v)}" for k, v in rho.items())
    report(10, ok, f"{allr.size} faces ({counts}), fraction rho > {RHO_ONE:.4f}: {frac:.4f}, mean rho "
                   f"lens {mean['lens']:.4f} > wedge {mean['wedge']:.4f} > star {mean['star']:.4f}")
    assert ok


def test_criterion_11_count_inequality(torus_run):
    run, elapsed = torus_run
    bad = [(d, cx.n_faces, cx.nodal_count) for d, cx in zip(run.draws, run.complexes)
           if 2 * cx.n_faces < cx.nodal_count]
    ratio = min(cx.n_faces / cx.nodal_count for cx in run.complexes)
    ok = not bad and len(run.complexes) == TORUS_FIELDS
    rej = run.rejection_report()
    report(11, ok, f"{len(run.complexes)} complexes, min mu/nu {ratio:.1f}, failures {bad}; "
                   f"{rej['rejected']} of {rej['attempted']} draws redrawn {rej['reasons']}; sampling {elapsed:.0f}s")
    assert ok
