"""Command-line entry points.

Exit codes: 0 success, 2 invalid input (bad graph file, bad options, a field
that is not Morse or not Morse-Smale), 3 an invariant of the computation
failed, which points at a bug rather than at the input.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from collections import Counter
from pathlib import Path

import numpy as np

from .graphs.metric_graph import GraphSpecError
from .graphs.neumann import InvariantViolation, analyze_batch, neumann_domains, surplus_series
from .graphs.spectrum import SpectrumError, compute_spectrum
from .io import RunConfig, SchemaError, dump_csv, dump_json, load_graph_spec, write_text
from .stats.distributions import EmpiricalDistribution, InsufficientSamples, support_check, symmetry_test
from .stats.lattice import LatticeCountState, arcsin_cdf, sup_distance
from .svg import complex_svg
from .torus.complex import ComplexError, NonMorseSmale, build_complex
from .torus.critical import CriticalPointSearchError, NonMorseField
from .torus.field import TorusField
from .torus.geometry import RHO_ONE
from .torus.sampling import sample_complexes
from .torus.tracing import TRACE_TOL, TracingError

log = logging.getLogger("neumann_domains")

EXIT_OK, EXIT_INVALID, EXIT_INVARIANT = 0, 2, 3


def _out(config: RunConfig) -> Path:
    path = Path(config.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _safe(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in name)


# graph-spectrum

def cmd_graph_spectrum(config: RunConfig) -> dict:
    graph = load_graph_spec(config.inputs[0])
    scan = compute_spectrum(graph, config.n, tol=config.tolerances.get("root", 1e-11))
    b = scan.batch
    out = _out(config)
    rows = zip(b.index, b.k, b.multiplicity, b.is_morse, b.is_generic)
    write_text(out / "spectrum.csv", dump_csv("spectrum", ["n", "k", "multiplicity", "isMorse", "isGeneric"],
                                              ([int(n), float(k), int(m), bool(a), bool(g)] for n, k, m, a, g in rows),
                                              config))
    records = [{"n": int(b.index[i]), "k": float(b.k[i]), "multiplicity": int(b.multiplicity[i]),
                "isMorse": bool(b.is_morse[i]), "isGeneric": bool(b.is_generic[i]),
                "amplitude": b.amplitude[i], "phase": b.phase[i]} for i in range(len(b))]
    write_text(out / "eigenfunctions.json", dump_json("eigenfunctions", {"graph": graph.to_description(),
                                                                         "records": records}, config))
    positive = b.index >= 1
    loops = sum(graph.lengths[graph.edge_index[e]] for e in graph.loop_edges)
    morse = b.is_morse[positive]
    fried = np.pi * (b.index + 1) / (2 * graph.total_length)
    report = {
        "eigenvalues": int(len(b)),
        "expectedCount": scan.expected_count,
        "foundCount": scan.found_count,
        "friedViolations": int(np.count_nonzero(b.k[positive] < fried[positive] * (1 - 1e-12))),
        "morseFraction": float(morse.mean()) if morse.size else None,
        "morsePredicted": 1.0 - 0.5 * loops / graph.total_length,
        "genericAmongMorse": float(b.is_generic[positive][morse].mean()) if morse.any() else None,
        "diagnostics": scan.diagnostics,
    }
    write_text(out / "report.json", dump_json("spectrum-report", report, config))
    return report


# graph-neumann-stats

def _symmetry(dist: EmpiricalDistribution, center: float) -> dict:
    try:
        return symmetry_test(dist, center, min_samples=1)
    except (InsufficientSamples, ValueError) as exc:
        return {"passed": None, "error": str(exc)}


def cmd_graph_neumann_stats(config: RunConfig) -> dict:
    graph = load_graph_spec(config.inputs[0])
    scan = compute_spectrum(graph, config.n, tol=config.tolerances.get("root", 1e-11))
    out = _out(config)
    records, window = surplus_series(graph, scan)
    write_text(out / "surplus.csv", dump_csv("surplus", ["n", "k", "mu", "phi", "omega", "sigma"],
                                             ([r.n, r.k, r.mu, r.phi, r.omega, r.sigma] for r in records), config))
    analysis = analyze_batch(graph, scan.batch)
    beta, boundary = graph.betti, len(graph.boundary)
    omega = EmpiricalDistribution.pmf([r.omega for r in records], center=0.5 * (beta - boundary))
    reports: dict = {
        "generic": len(records),
        "omegaWindow": window,
        "omegaSymmetry": _symmetry(omega, omega.center),
        "omegaSupport": support_check(omega, range(1 - beta - boundary, 2 * beta)),
        "pathLengthError": analysis.path_length_error,
        "pathRhoError": analysis.path_rho_error,
        "positionMismatches": analysis.path_position_mismatches,
        "treeDomainsChecked": analysis.tree_domains_checked,
        "boundViolations": analysis.bound_violations,
        "vertices": {},
    }
    write_text(out / "omega.json", dump_json("distribution", omega.to_dict(), config))
    chosen = config.extra.get("vertices") or list(analysis.stars)
    for v in chosen:
        if v not in analysis.stars:
            raise ValueError(f"vertex {v!r} is not an interior vertex of the graph")
        st = analysis.stars[v]
        d = st.degree
        zeta = EmpiricalDistribution.histogram(st.rho / np.pi, bins=100, center=0.5)
        pos = EmpiricalDistribution.pmf(st.position, center=d / 2)
        given = {int(j): EmpiricalDistribution.histogram(st.rho[st.position == j] / np.pi, bins=100).to_dict()
                 for j in np.unique(st.position)}
        tag = _safe(v)
        write_text(out / f"zeta_{tag}.json", dump_json("distribution", zeta.to_dict(), config))
        write_text(out / f"position_{tag}.json", dump_json("distribution", pos.to_dict(), config))
        write_text(out / f"rho_given_position_{tag}.json", dump_json("conditional-histograms", given, config))
        reports["vertices"][v] = {
            "degree": d,
            "samples": int(st.rho.size),
            "zetaSymmetry": _symmetry(zeta, 0.5),
            "zetaSupport": support_check(zeta, (1 / d, 1 - 1 / d)),
            "positionSymmetry": _symmetry(pos, d / 2),
            "positionSupport": support_check(pos, range(1, d)),
        }
    limit = int(config.extra.get("records", 50))
    domain_records = []
    for pair in scan:
        if len(domain_records) >= limit:
            break
        if not pair.is_generic:
            continue
        doms = neumann_domains(graph, pair)
        # interior Neumann points bound two domains, leaves of the graph only one
        mu = (sum(d.boundary_count for d in doms) - boundary) // 2
        phi = sum(d.nodal_count for d in doms)
        domain_records.append({
            "n": pair.n, "k": pair.k, "mu": mu, "phi": phi, "omega": mu - pair.n, "sigma": phi - pair.n,
            "domains": [{"class": d.kind, "length": d.length, "boundary": d.boundary_count, "rho": d.rho,
                         "N": d.spectral_position, "phi": d.nodal_count} for d in doms],
        })
    write_text(out / "domains.json", dump_json("neumann-domains", domain_records, config))
    write_text(out / "reports.json", dump_json("neumann-reports", reports, config))
    if analysis.bound_violations or analysis.path_position_mismatches:
        raise InvariantViolation(f"{len(analysis.bound_violations)} bound violations, "
                                 f"{analysis.path_position_mismatches} spectral position mismatches")
    return reports


# torus-complex

def _parse_modes(text: str) -> list[tuple[int, int]]:
    try:
        modes = [tuple(int(v) for v in part.split(",")) for part in text.split(";") if part.strip()]
    except ValueError:
        raise ValueError(f"cannot parse modes {text!r}; use 'mx,my' or 'mx,my;mx,my'") from None
    if not modes or any(len(m) != 2 for m in modes):
        raise ValueError(f"cannot parse modes {text!r}; use 'mx,my' or 'mx,my;mx,my'")
    return modes


def cmd_torus_complex(config: RunConfig) -> dict:
    out = _out(config)
    tol = config.tolerances.get("trace", TRACE_TOL)
    rejection = None
    if config.extra.get("modes"):
        modes = _parse_modes(config.extra["modes"])
        if len(modes) == 1:
            field = TorusField.separable(*modes[0], kind=config.extra.get("kind", "sc"))
        else:
            rng = np.random.default_rng(config.seed)
            field = TorusField(np.array(modes), rng.standard_normal((len(modes), 4)))
        complexes, draws = [build_complex(field, tol=tol)], [0]
    else:
        run = sample_complexes(int(config.extra.get("norm", 65)), config.n, config.seed, tol=tol, jobs=config.jobs,
                               redraw=config.extra.get("redraw", True))
        complexes, draws = run.complexes, run.draws
        rejection = run.rejection_report()
    polylines = config.extra.get("polylines", len(complexes) == 1)
    face_rows, fields = [], []
    for draw, cx in zip(draws, complexes):
        write_text(out / f"complex_{draw:04d}.json", dump_json("torus-complex", {"draw": draw, **cx.to_dict(polylines)},
                                                               config))
        if config.svg:
            write_text(out / f"complex_{draw:04d}.svg", complex_svg(cx))
        for f in cx.faces:
            face_rows.append([draw, f.index, f.kind, f.area, f.perimeter, f.rho, f.certificate, f.saddle_count])
        fields.append({"draw": draw, "mu": cx.n_faces, "nu": cx.nodal_count, "saddles": cx.n_saddles,
                       "edges": cx.n_edges, "vertices": cx.n_vertices, "euler": cx.euler,
                       "muAtLeastHalfNu": 2 * cx.n_faces >= cx.nodal_count})
    write_text(out / "faces.csv", dump_csv("torus-faces", ["draw", "face", "type", "area", "perimeter", "rho",
                                                           "certificate", "saddles"], face_rows, config))
    kinds = ("star", "wedge", "lens", "other")
    rho = {k: np.array([r[5] for r in face_rows if r[2] == k]) for k in kinds}
    hist = {}
    for k in kinds:
        h = EmpiricalDistribution.histogram(rho[k], bins=100, lo=0.0, hi=2.0)
        h.meta = {"marker": RHO_ONE}
        hist[k] = h.to_dict()
    write_text(out / "rho_histograms.json", dump_json("rho-histograms", hist, config))
    summary = {
        "fields": fields,
        "faces": len(face_rows),
        "typeCounts": {k: int(rho[k].size) for k in kinds},
        "meanRho": {k: (float(rho[k].mean()) if rho[k].size else None) for k in kinds},
        "certificates": dict(Counter(r[6] for r in face_rows)),
        "rejections": rejection,
    }
    write_text(out / "summary.json", dump_json("torus-summary", summary, config))
    bad = [f for f in fields if not f["muAtLeastHalfNu"] or f["euler"] != 0]
    if bad:
        raise InvariantViolation(f"count relation fails for draw {bad[0]['draw']}")
    return summary


# torus-count-dist

def cmd_torus_count_dist(config: RunConfig) -> dict:
    out = _out(config)
    lambdas = config.lambda_max or [4 * math.pi ** 2 * 1e5]
    points = int(config.extra.get("points", 401))
    c = np.linspace(0.0, 4 / math.pi * 1.05, points)
    write_text(out / "cdf_arcsin.csv", dump_csv("cdf", ["c", "F"], zip(c, arcsin_cdf(c)), config))
    sweep = []
    for i, lam in enumerate(lambdas):
        state = LatticeCountState.enumerate(lam)
        F = state.cdf(c)
        write_text(out / f"cdf_empirical_{i}.csv", dump_csv("cdf", ["c", "F"], zip(c, F), config))
        sweep.append({"lambdaMax": float(lam), "pairs": state.pairs, "weylCount": state.weyl_count,
                      "supNorm": sup_distance(state), "cdfAtZero": float(state.cdf(0.0)),
                      "cdfAtFourOverPi": float(state.cdf(4 / math.pi * (1 + 1e-12)))})
    write_text(out / "sweep.csv", dump_csv("count-sweep", list(sweep[0]), ([s[k] for k in sweep[0]] for s in sweep),
                                           config))
    sup = [s["supNorm"] for s in sweep]
    summary = {"sweep": sweep, "supNormDecreasing": all(b < a for a, b in zip(sup, sup[1:]))}
    write_text(out / "summary.json", dump_json("count-summary", summary, config))
    return summary


COMMANDS = {
    "graph-spectrum": cmd_graph_spectrum,
    "graph-neumann-stats": cmd_graph_neumann_stats,
    "torus-complex": cmd_torus_complex,
    "torus-count-dist": cmd_torus_count_dist,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="neumann-domains", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="subcommand", required=True)

    def common(sp, n_default):
        sp.add_argument("--n", type=int, default=n_default)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=".")
        sp.add_argument("--svg", action="store_true")
        sp.add_argument("--jobs", type=int, default=1)

    for name in ("graph-spectrum", "graph-neumann-stats"):
        sp = sub.add_parser(name)
        sp.add_argument("graph", help="JSON graph description")
        common(sp, 1000)
        sp.add_argument("--tol-root", type=float, default=1e-11)
        if name == "graph-neumann-stats":
            sp.add_argument("--vertex", action="append", default=[], help="interior vertex to report (repeatable)")
            sp.add_argument("--records", type=int, default=50, help="per-eigenfunction domain records to write")
    sp = sub.add_parser("torus-complex")
    common(sp, 1)
    sp.add_argument("--modes", help="'mx,my' for a separable field, 'mx,my;mx,my' for a random combination")
    sp.add_argument("--kind", default="sc", choices=("cc", "cs", "sc", "ss"))
    sp.add_argument("--norm", type=int, default=65, help="mx^2 + my^2 of the random eigenspace")
    sp.add_argument("--no-redraw", action="store_true", help="fail on a non-Morse-Smale draw instead of redrawing")
    sp.add_argument("--polylines", action=argparse.BooleanOptionalAction, default=None)
    sp.add_argument("--tol-trace", type=float, default=TRACE_TOL)
    sp = sub.add_parser("torus-count-dist")
    common(sp, 1)
    sp.add_argument("--lambda-max", type=float, action="append", default=[])
    sp.add_argument("--points", type=int, default=401)
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    tolerances, extra, inputs = {}, {}, []
    if args.subcommand in ("graph-spectrum", "graph-neumann-stats"):
        inputs = [args.graph]
        tolerances["root"] = args.tol_root
        if args.subcommand == "graph-neumann-stats":
            extra = {"vertices": args.vertex, "records": args.records}
    elif args.subcommand == "torus-complex":
        tolerances["trace"] = args.tol_trace
        extra = {"modes": args.modes, "kind": args.kind, "norm": args.norm, "redraw": not args.no_redraw}
        if args.polylines is not None:
            extra["polylines"] = args.polylines
    else:
        extra = {"points": args.points}
    return RunConfig(args.subcommand, inputs, args.n, getattr(args, "lambda_max", []), args.seed, tolerances,
                     args.out, args.svg, args.jobs, extra)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = config_from_args(args)
        COMMANDS[config.subcommand](config)
    except (GraphSpecError, SchemaError, NonMorseField, NonMorseSmale, TracingError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (InvariantViolation, ComplexError, SpectrumError, CriticalPointSearchError) as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
