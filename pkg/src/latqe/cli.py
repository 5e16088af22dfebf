"""Command-line driver: build models, run checks, write reports.

Subcommands: ``bands``, ``check-assumption``, ``qe-variance``, ``que``,
``counterexample``, ``bloch``, ``egorov``, ``presets``.  Every writing
command emits CSV plus a JSON summary carrying the full config echo,
package versions and seeds, and renders a PNG figure alongside.  Re-running
with the same config and seed reproduces the CSV/JSON bytes exactly.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, assumption, ergodicity, finite, floquet, lattice
from . import report as rpt
from . import scenarios
from .floquet import CapExceededError
from .lattice import GraphValidationError


def _versions() -> dict:
    return {"latqe": __version__, "numpy": np.__version__}


def _config_echo(args: argparse.Namespace) -> dict:
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _parallel_map(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))  # ordered, deterministic merge


def _build_graph(args) -> lattice.PeriodicGraph:
    if getattr(args, "spec", None):
        return lattice.load_graph_spec(args.spec)
    params = {}
    if getattr(args, "dim", None):
        params["d"] = args.dim
    if getattr(args, "k", None):
        params["k"] = args.k
    if getattr(args, "Q", None):
        params["Q"] = [float(x) for x in args.Q.split(",")]
    return lattice.build_preset(args.preset, params)


def _observable(args, model) -> ergodicity.Observable:
    spec = args.observable
    if spec == "half":
        return ergodicity.Observable.half_indicator(model)
    if spec == "alternating":
        return ergodicity.Observable.alternating_block(model)
    if spec == "constant":
        return ergodicity.Observable.constant(model)
    if spec.startswith("cosine:"):
        freq = [int(x) for x in spec.split(":", 1)[1].split(",")]
        return ergodicity.Observable.cosine(model, freq)
    if spec.startswith("file:"):
        vals = np.loadtxt(spec.split(":", 1)[1], delimiter=",")
        return ergodicity.Observable.scalar(model, vals, tag="from-file")
    raise GraphValidationError(
        f"unknown observable {spec!r}: use constant | half | alternating | "
        "cosine:F1[,F2..] | file:PATH")


def _basis(args, model) -> finite.Eigenbasis:
    spec = args.basis
    if spec == "fiber":
        return finite.fiber_eigenbasis(model, mode="fiber")
    if spec == "real-mixed":
        return finite.fiber_eigenbasis(model, mode="real_mixed")
    if spec.startswith("random:"):
        return finite.fiber_eigenbasis(model, mode="random_mix",
                                       seed=int(spec.split(":", 1)[1]))
    if spec == "dense":
        return finite.dense_eigenbasis(model)
    raise GraphValidationError(
        f"unknown basis {spec!r}: use fiber | real-mixed | random:SEED | dense")


def _n_list(args) -> list[int]:
    ns = [int(x) for x in str(args.N).split(",")]
    if any(n < 2 for n in ns):
        raise GraphValidationError("N must be >= 2")
    return ns


def _summary(args, **extra) -> dict:
    return {"config": _config_echo(args), "versions": _versions(), **extra}


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_presets(args) -> int:
    for name, doc in lattice.preset_catalog().items():
        print(f"{name:24s} {doc}")
    return 0


def cmd_bands(args) -> int:
    g = _build_graph(args)
    thetas, energies, nu_prime = floquet.band_grid(g, args.grid)
    out = rpt.ensure_outdir(args.out)
    header = [f"theta_{i+1}" for i in range(g.dim)] + \
        [f"E_{s+1}" for s in range(g.nu)] + ["nu_prime"]
    rows = [list(t) + list(e) + [int(np_)]
            for t, e, np_ in zip(thetas, energies, nu_prime)]
    rpt.write_csv(os.path.join(out, "bands.csv"), header, rows)
    flats = floquet.flat_band_scan(g, grid_size=args.grid)
    exceptional = int(np.sum(nu_prime != np.max(nu_prime)))
    rpt.write_json(os.path.join(out, "bands.json"), _summary(
        args, flat_bands=flats, exceptional_grid_points=exceptional,
        nu=g.nu, dim=g.dim))
    rpt.fig_bands(thetas, energies, f"bands: {args.preset or args.spec}",
                  os.path.join(out, "bands.png"))
    print(f"wrote bands over a {args.grid}^{g.dim} grid to {out}")
    if flats:
        print(f"flat bands detected: {flats}")
    return 0


def cmd_check_assumption(args) -> int:
    g = _build_graph(args)
    ns = _n_list(args)
    reports = _parallel_map(
        lambda N: assumption.coincidence_report(
            g, N, tol=args.tol, seed=args.seed), ns, args.threads)
    out = rpt.ensure_outdir(args.out)
    rows = []
    for rep in reports:
        for m, counts in sorted(rep.pair_counts.items()):
            for s in range(counts.shape[0]):
                for w in range(counts.shape[1]):
                    if counts[s, w]:
                        rows.append([rep.N, ";".join(str(x) for x in m),
                                     s + 1, w + 1, int(counts[s, w]), rep.tol])
    rpt.write_csv(os.path.join(out, "coincidence_census.csv"),
                  ["N", "m", "s", "w", "count", "tol"], rows)
    fractions = [rep.sup_pair_fraction for rep in reports]
    summary = _summary(
        args,
        sup_pair_fractions={rep.N: rep.sup_pair_fraction for rep in reports},
        sup_total_fractions={rep.N: rep.sup_total_fraction for rep in reports},
        decaying=assumption.decay_verdict(reports),
        flat_band_detected=any(r.flat_band_detected for r in reports),
        identically_coincident={
            rep.N: [[list(m), s, w] for (m, s, w) in rep.identically_coincident]
            for rep in reports},
        unstable_counts=any(r.unstable for r in reports),
        exhaustive={rep.N: rep.exhaustive for rep in reports},
    )
    rpt.write_json(os.path.join(out, "assumption_summary.json"), summary)
    rpt.fig_assumption(ns, fractions, f"coincidence fractions: "
                       f"{args.preset or args.spec}",
                       os.path.join(out, "assumption.png"))
    failed = fractions[-1] > 0.5 or any(r.identically_coincident for r in reports)
    print(f"sup coincidence fractions: "
          f"{ {r.N: round(r.sup_pair_fraction, 6) for r in reports} }")
    if failed:
        print("coincidence condition FAILS for this model "
              "(non-vanishing fraction)")
    return 0


def cmd_qe_variance(args) -> int:
    g = _build_graph(args)
    ns = _n_list(args)
    window = None
    if args.window:
        lo, hi = (float(x) for x in args.window.split(":"))
        window = (lo, hi)
    out = rpt.ensure_outdir(args.out)
    rows = []
    curves: dict[str, list] = {}
    gap_payload = {}
    for N in ns:
        model = finite.FiniteGraphModel(g, N)
        basis = _basis(args, model)
        a = _observable(args, model)
        rep = ergodicity.qe_variance(basis, a, reference=args.reference,
                                     window=window)
        rows.append([N, basis.tag, a.tag, rep.reference, rep.variance,
                     rep.sup_gap])
        curves.setdefault(basis.tag, []).append(rep.variance)
        if args.gaps:
            gap_payload[N] = [[z.real, z.imag] for z in rep.gaps]
    rpt.write_csv(os.path.join(out, "variance.csv"),
                  ["N", "basis", "observable", "reference", "V", "sup_gap"],
                  rows)
    payload = _summary(args, variances={r[0]: r[4] for r in rows})
    if args.gaps:
        payload["gaps"] = gap_payload
    rpt.write_json(os.path.join(out, "variance.json"), payload)
    rpt.fig_variance(ns, curves, f"QE variance: {args.preset or args.spec} "
                     f"[{args.observable}]", os.path.join(out, "variance.png"))
    print(f"variances by N: { {r[0]: r[4] for r in rows} }")
    return 0


def cmd_que(args) -> int:
    g = _build_graph(args)
    ns = _n_list(args)
    out = rpt.ensure_outdir(args.out)
    rows = []
    for N in ns:
        model = finite.FiniteGraphModel(g, N)
        basis = _basis(args, model)
        a = _observable(args, model)
        sup = ergodicity.que_sup(basis, a)
        rows.append([N, basis.tag, a.tag, sup])
    rpt.write_csv(os.path.join(out, "que.csv"),
                  ["N", "basis", "observable", "sup_gap"], rows)
    rpt.write_json(os.path.join(out, "que.json"),
                   _summary(args, sup_gaps={r[0]: r[3] for r in rows}))
    rpt.fig_variance(ns, {"sup gap": [r[3] for r in rows]},
                     f"QUE sup gap: {args.preset or args.spec}",
                     os.path.join(out, "que.png"))
    print(f"sup gaps by N: { {r[0]: r[3] for r in rows} }")
    return 0


def cmd_counterexample(args) -> int:
    result = scenarios.run_scenario(args.name)
    out = rpt.ensure_outdir(args.out)
    rpt.write_json(os.path.join(out, f"counterexample_{result.name}.json"),
                   _summary(args, name=result.name, passed=result.passed,
                            expected=result.expected, actual=result.actual,
                            details=result.details))
    status = "PASS" if result.passed else "FAIL"
    print(f"[{result.name}] {status}")
    print(f"  expected: {result.expected}")
    print(f"  actual:   {result.actual}")
    return 0 if result.passed else 1


def cmd_bloch(args) -> int:
    g = _build_graph(args)
    N = _n_list(args)[0]
    model = finite.FiniteGraphModel(g, N)
    out = rpt.ensure_outdir(args.out)
    rows = []
    residuals = []
    for j_flat, j in enumerate(floquet.momentum_grid(N, g.dim)):
        for s in range(1, g.nu + 1):
            bf = finite.bloch_eigenfunction(model, j, s)
            res = bf.residual()
            rows.append([";".join(str(x) for x in bf.momentum), s,
                         bf.eigenvalue, res, bf.modulus_defect()])
            residuals.append(res)
    rpt.write_csv(os.path.join(out, "bloch.csv"),
                  ["j", "band", "eigenvalue", "residual", "modulus_defect"],
                  rows)
    worst = max(residuals)
    rpt.write_json(os.path.join(out, "bloch.json"),
                   _summary(args, max_residual=worst,
                            count=len(rows)))
    rpt.fig_bloch(residuals, f"Bloch residuals: {args.preset or args.spec} "
                  f"N={N}", os.path.join(out, "bloch.png"))
    print(f"verified {len(rows)} Bloch functions, max residual {worst:.3e}")
    return 0


def cmd_egorov(args) -> int:
    g = _build_graph(args)
    N = _n_list(args)[0]
    model = finite.FiniteGraphModel(g, N)
    a = _observable(args, model)
    Ts = [float(x) for x in args.T.split(",")]
    out = rpt.ensure_outdir(args.out)
    rows, id_dev, tail = [], [], []
    for T in Ts:
        ft, b, abar = ergodicity.egorov_symbols(model, a, T, coincide_tol=args.tol)
        op_ft = ergodicity.quantize(ft).dense()
        op_b = ergodicity.quantize(b).dense()
        oracle = ergodicity.exact_time_average(model, a, T)
        dev = ergodicity.hs_norm(oracle - op_ft)
        tl = ergodicity.hs_norm(op_ft - op_b)
        rows.append([T, dev, tl])
        id_dev.append(dev)
        tail.append(tl)
    rpt.write_csv(os.path.join(out, "egorov.csv"),
                  ["T", "hs_identity_deviation", "hs_ft_minus_b"], rows)
    rpt.write_json(os.path.join(out, "egorov.json"),
                   _summary(args, identity_deviation={t: d for t, d, _ in rows},
                            tail_norm={t: x for t, _, x in rows}))
    rpt.fig_egorov(Ts, id_dev, tail, f"Egorov check: "
                   f"{args.preset or args.spec} N={N}",
                   os.path.join(out, "egorov.png"))
    print(f"identity deviations: {dict(zip(Ts, id_dev))}")
    print(f"tail norms |Op(F_T)-Op(b)|: {dict(zip(Ts, tail))}")
    return 0


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------


def _add_graph_args(p):
    p.add_argument("--preset", help="catalog model name (see `latqe presets`)")
    p.add_argument("--spec", help="path to a graph-spec JSON file")
    p.add_argument("--dim", type=int, help="dimension for the zd preset")
    p.add_argument("--k", type=int, help="range for the z-range-k preset")
    p.add_argument("--Q", help="comma-separated potential values")


def _add_common(p):
    p.add_argument("--out", default="latqe_out", help="output directory")
    p.add_argument("--tol", type=float, default=None,
                   help="coincidence tolerance override")
    p.add_argument("--seed", type=int, default=0, help="sampling seed")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads for independent sweeps")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latqe",
        description="Floquet block-diagonalization and finite-size quantum "
                    "ergodicity checks for periodic graphs")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("presets", help="list catalog models")
    p.set_defaults(func=cmd_presets)

    p = sub.add_parser("bands", help="dispersion CSV + figure")
    _add_graph_args(p)
    _add_common(p)
    p.add_argument("--grid", type=int, default=64, help="grid points per axis")
    p.set_defaults(func=cmd_bands)

    p = sub.add_parser("check-assumption",
                       help="coincidence census and sweep")
    _add_graph_args(p)
    _add_common(p)
    p.add_argument("--N", required=True, help="comma-separated sizes")
    p.set_defaults(func=cmd_check_assumption)

    p = sub.add_parser("qe-variance", help="variance sweep")
    _add_graph_args(p)
    _add_common(p)
    p.add_argument("--N", required=True)
    p.add_argument("--observable", default="half")
    p.add_argument("--basis", default="fiber")
    p.add_argument("--reference", default="uniform",
                   choices=["uniform", "opn_abar"])
    p.add_argument("--window", help="energy window lo:hi")
    p.add_argument("--gaps", action="store_true",
                   help="also dump per-eigenvector gaps into the JSON")
    p.set_defaults(func=cmd_qe_variance)

    p = sub.add_parser("que", help="sup-gap (quantum unique ergodicity)")
    _add_graph_args(p)
    _add_common(p)
    p.add_argument("--N", required=True)
    p.add_argument("--observable", default="alternating")
    p.add_argument("--basis", default="real-mixed")
    p.set_defaults(func=cmd_que)

    p = sub.add_parser("counterexample", help="run a scripted scenario")
    p.add_argument("name", help=f"one of: {', '.join(sorted(scenarios.REGISTRY))}")
    _add_common(p)
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("bloch", help="construct and verify Bloch functions")
    _add_graph_args(p)
    _add_common(p)
    p.add_argument("--N", required=True)
    p.set_defaults(func=cmd_bloch)

    p = sub.add_parser("egorov", help="time-average identity and tail decay")
    _add_graph_args(p)
    _add_common(p)
    p.add_argument("--N", required=True)
    p.add_argument("--observable", default="half")
    p.add_argument("--T", default="1,10,100", help="comma-separated times")
    p.set_defaults(func=cmd_egorov)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (GraphValidationError, CapExceededError, ValueError, KeyError,
            FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
