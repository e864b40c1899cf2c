"""Command-line interface.

Subcommands: simulate, cluster, gof, select, profile, bench.  Every artifact
embeds the run configuration (JSON field or ``#`` comment line) and the seed,
so any output can be regenerated from the file alone.  Exit codes: 0 success,
1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np
import scipy.sparse as sp

from . import __version__
from ._json import dumps, jsonable
from .baselines import as_statistic, bic_score, lr_statistic
from .clustering import SpectralClusterer
from .exceptions import DataError, NumericalError
from .graphs import degree_summary, load_graph, reduce_by_degree_quantile
from .models import simulate_from_config
from .network_tests import TestOutcome, bootstrap_debias, nac_full, snac
from .report import (flat_csv_text, labels_csv_text, render_profile_svg,
                     write_bench_csv, write_curve_csv, write_profile_csv)
from .seeds import derive_seed
from .selection import build_profile, profile_points, select_k, select_k_bic

_METHODS = ("nac", "nac+", "snac", "snac+", "as", "as-sbm", "lr", "bic")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise _UsageError(message)


def _add_graph_opts(p):
    p.add_argument("graph", help="input graph file")
    p.add_argument("--format", choices=("edge-list", "matrix-market"),
                   default="edge-list")
    p.add_argument("--index-base", type=int, choices=(0, 1), default=1)
    p.add_argument("--reduce-q", type=float, default=None,
                   help="drop nodes at or above this degree quantile before testing")


def _add_common_opts(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--tau", type=float, default=0.25,
                   help="spectral regularization constant")
    p.add_argument("--restarts", type=int, default=20, help="k-means restarts")
    p.add_argument("--emit", choices=("json", "csv", "svg"), default="json")


def build_parser() -> _Parser:
    p = _Parser(prog="dcgof", description=__doc__)
    p.add_argument("--version", action="version", version=f"dcgof {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp_sim = sub.add_parser("simulate", help="sample a graph from a model config")
    sp_sim.add_argument("--params", required=True, help="model config JSON file")
    sp_sim.add_argument("--out", required=True, help="edge-list output path")
    sp_sim.add_argument("--labels-out", default=None,
                        help="ground-truth labels CSV path")
    _add_common_opts(sp_sim)

    sp_clu = sub.add_parser("cluster", help="spectral clustering labels")
    _add_graph_opts(sp_clu)
    sp_clu.add_argument("--k", type=int, required=True)
    sp_clu.add_argument("--out", default=None, help="labels CSV (default stdout)")
    sp_clu.add_argument("--spherical", action="store_true",
                        help="normalize embedding rows before k-means")
    sp_clu.add_argument("--dump-embedding", default=None, metavar="CSV",
                        help="also write the spectral embedding for debugging")
    _add_common_opts(sp_clu)

    sp_gof = sub.add_parser(
        "gof", help="one goodness-of-fit statistic",
        description="Compute one goodness-of-fit statistic. Conventions: "
        "chi-square terms (x-e)^2/e use 0/0 = 0; rows with zero degree on "
        "the compression side contribute nothing and are excluded from the "
        "effective row count; p-values are upper-tail normal unless "
        "--two-sided is given.")
    _add_graph_opts(sp_gof)
    sp_gof.add_argument("--method", choices=_METHODS, required=True)
    sp_gof.add_argument("--k", type=int, required=True)
    sp_gof.add_argument("--boot", type=int, default=0,
                        help="bootstrap replicates for debiasing full variants")
    sp_gof.add_argument("--poisson-boot", action="store_true",
                        help="resample bootstrap graphs with Poisson entries")
    sp_gof.add_argument("--two-sided", action="store_true")
    sp_gof.add_argument("--out", default=None, help="JSON output (default stdout)")
    _add_common_opts(sp_gof)

    sp_sel = sub.add_parser("select", help="sequential choice of K")
    _add_graph_opts(sp_sel)
    sp_sel.add_argument("--method", choices=("snac+", "snac", "nac+", "nac", "bic"),
                        default="snac+")
    sp_sel.add_argument("--kmin", type=int, default=1)
    sp_sel.add_argument("--kmax", type=int, required=True)
    sp_sel.add_argument("--alpha", type=float, default=1e-6)
    sp_sel.add_argument("--boot", type=int, default=0)
    sp_sel.add_argument("--out", default=None, help="JSON output (default stdout)")
    _add_common_opts(sp_sel)

    sp_pro = sub.add_parser("profile", help="community profile CSV + SVG")
    _add_graph_opts(sp_pro)
    sp_pro.add_argument("--kmin", type=int, default=1)
    sp_pro.add_argument("--kmax", type=int, default=13)
    sp_pro.add_argument("--repeats", type=int, default=20)
    sp_pro.add_argument("--smoothness", type=float, default=0.3)
    sp_pro.add_argument("--out-prefix", required=True,
                        help="writes PREFIX.csv, PREFIX_curve.csv, PREFIX.svg")
    _add_common_opts(sp_pro)

    sp_ben = sub.add_parser("bench", help="replicated simulation grid")
    sp_ben.add_argument("--params", required=True, help="model config JSON file")
    sp_ben.add_argument("--methods", default="snac+",
                        help="comma-separated subset of: " + ",".join(_METHODS))
    sp_ben.add_argument("--kmin", type=int, default=1)
    sp_ben.add_argument("--kmax", type=int, required=True)
    sp_ben.add_argument("--reps", type=int, default=10)
    sp_ben.add_argument("--alpha", type=float, default=1e-6)
    sp_ben.add_argument("--boot", type=int, default=0)
    sp_ben.add_argument("--out", required=True, help="tidy CSV output path")
    _add_common_opts(sp_ben)

    return p


def _config_of(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if not k.startswith("_")}
    return jsonable(cfg)


def _load(args):
    g = load_graph(args.graph, format=args.format, index_base=args.index_base)
    if args.reduce_q is not None:
        g = reduce_by_degree_quantile(g, args.reduce_q)
    return g


def _clusterer(args) -> SpectralClusterer:
    return SpectralClusterer(tau=args.tau, restarts=args.restarts,
                             spherical=getattr(args, "spherical", False),
                             seed=derive_seed(args.seed, "clusterer"))


def _write_json(payload: dict, path: str | None) -> None:
    text = dumps(payload) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _write_result(payload: dict, args) -> None:
    """Emit a result dict as JSON (default) or flat CSV per --emit."""
    if args.emit == "json":
        _write_json(payload, args.out)
        return
    if args.emit == "csv":
        config = payload.pop("config", None)
        text = flat_csv_text(payload, config)
        if args.out is None:
            sys.stdout.write(text)
        else:
            with open(args.out, "w") as fh:
                fh.write(text)
        return
    raise DataError(f"--emit {args.emit} is not available for {args.command}")


def _write_edge_list(g, path, config) -> None:
    up = sp.triu(g.adjacency, k=1).tocoo()
    with open(path, "w") as fh:
        fh.write("# config " + dumps(config).replace("\n", " ") + "\n")
        for i, j, w in zip(up.row, up.col, up.data):
            if w == 1:
                fh.write(f"{i + 1} {j + 1}\n")
            else:
                fh.write(f"{i + 1} {j + 1} {int(w)}\n")


def _gof_outcome(g, args, config) -> TestOutcome:
    clusterer = _clusterer(args)
    method = args.method
    if method in ("snac+", "snac"):
        variant = "plus" if method.endswith("+") else "plain"
        return snac(g, args.k, variant, clusterer, seed=args.seed,
                    two_sided=args.two_sided)
    if method in ("nac+", "nac"):
        variant = "plus" if method.endswith("+") else "plain"
        if args.boot >= 2:
            label = "NAC+" if variant == "plus" else "NAC"

            def base(graph, s):
                return nac_full(graph, args.k, variant, clusterer, seed=s).statistic

            return bootstrap_debias(g, args.k, base, J=args.boot, seed=args.seed,
                                    clusterer=clusterer, method_label=label,
                                    poisson=args.poisson_boot,
                                    two_sided=args.two_sided)
        return nac_full(g, args.k, variant, clusterer, seed=args.seed,
                        two_sided=args.two_sided)
    if method in ("as", "as-sbm"):
        return as_statistic(g, args.k, "DCSBM" if method == "as" else "SBM",
                            clusterer, seed=args.seed)
    if method == "lr":
        stat = lr_statistic(g, args.k, clusterer, seed=args.seed)
        return TestOutcome("LR", args.k, None, stat, None, args.seed)
    stat = bic_score(g, args.k, clusterer, seed=args.seed)
    return TestOutcome("BIC", args.k, None, stat, None, args.seed)


def _bench_rows(cfg, args, rep):
    from scipy.stats import norm

    seed_rep = derive_seed(args.seed, "bench", rep)
    g, _, _ = simulate_from_config(cfg, seed=seed_rep)
    clusterer = SpectralClusterer(tau=args.tau, restarts=args.restarts,
                                  seed=derive_seed(seed_rep, "clusterer"))
    threshold = float(norm.ppf(1.0 - args.alpha))
    rows = []
    for method in args.methods.split(","):
        method = method.strip().lower()
        if method == "bic":
            res = select_k_bic(g, args.kmax, args.kmin, seed=seed_rep,
                               clusterer=clusterer)
            for K, score in zip(res.tested_Ks, res.statistics):
                rows.append((rep, "bic", K, score, int(K == res.chosen_K)))
            continue
        for K in range(args.kmin, args.kmax + 1):
            ns = argparse.Namespace(method=method, k=K, boot=args.boot,
                                    poisson_boot=False, two_sided=False,
                                    seed=derive_seed(seed_rep, method, K),
                                    tau=args.tau, restarts=args.restarts)
            out = _gof_outcome_cached(g, ns, clusterer)
            decision = int(out.statistic > threshold)
            rows.append((rep, method, K, out.statistic, decision))
    return rows


def _gof_outcome_cached(g, ns, clusterer) -> TestOutcome:
    # bench-internal variant of _gof_outcome sharing one clusterer per replicate
    method = ns.method
    if method in ("snac+", "snac"):
        variant = "plus" if method.endswith("+") else "plain"
        return snac(g, ns.k, variant, clusterer, seed=ns.seed)
    if method in ("nac+", "nac"):
        variant = "plus" if method.endswith("+") else "plain"
        if ns.boot >= 2:
            label = "NAC+" if variant == "plus" else "NAC"

            def base(graph, s):
                return nac_full(graph, ns.k, variant, clusterer, seed=s).statistic

            return bootstrap_debias(g, ns.k, base, J=ns.boot, seed=ns.seed,
                                    clusterer=clusterer, method_label=label)
        return nac_full(g, ns.k, variant, clusterer, seed=ns.seed)
    if method in ("as", "as-sbm"):
        return as_statistic(g, ns.k, "DCSBM" if method == "as" else "SBM",
                            clusterer, seed=ns.seed)
    if method == "lr":
        stat = lr_statistic(g, ns.k, clusterer, seed=ns.seed)
        return TestOutcome("LR", ns.k, None, stat, None, ns.seed)
    raise DataError(f"unknown bench method {method!r}")


def dispatch(args) -> int:
    config = _config_of(args)

    if args.command == "simulate":
        with open(args.params) as fh:
            cfg = json.load(fh)
        g, z, _ = simulate_from_config(cfg, seed=args.seed)
        _write_edge_list(g, args.out, config)
        if args.labels_out:
            with open(args.labels_out, "w") as fh:
                fh.write(labels_csv_text(z, config))
        summary = degree_summary(g).to_dict(n=g.n)
        _write_json({"config": config, "degree_summary": summary,
                     "edge_sum": g.edge_sum}, None)
        return 0

    if args.command == "cluster":
        g = _load(args)
        lv = _clusterer(args).labels(g, args.k)
        text = labels_csv_text(lv.labels, config)
        if args.out is None:
            sys.stdout.write(text)
        else:
            with open(args.out, "w") as fh:
                fh.write(text)
        if args.dump_embedding:
            from .clustering import spectral_embed

            emb = spectral_embed(g, args.k, tau=args.tau)
            np.savetxt(args.dump_embedding, emb.vectors, delimiter=",",
                       header=",".join(f"v{j}" for j in range(args.k)))
        return 0

    if args.command == "gof":
        g = _load(args)
        outcome = _gof_outcome(g, args, config)
        payload = outcome.to_dict()
        payload["config"] = config
        _write_result(payload, args)
        return 0

    if args.command == "select":
        g = _load(args)
        clusterer = _clusterer(args)
        if args.method == "bic":
            res = select_k_bic(g, args.kmax, args.kmin, seed=args.seed,
                               clusterer=clusterer)
        else:
            res = select_k(g, args.kmax, args.kmin, method=args.method,
                           alpha=args.alpha, seed=args.seed,
                           clusterer=clusterer, boot=args.boot)
        payload = res.to_dict()
        payload["config"] = config
        _write_result(payload, args)
        return 0

    if args.command == "profile":
        g = _load(args)
        clusterer = _clusterer(args)
        pts = profile_points(g, range(args.kmin, args.kmax + 1),
                             repeats=args.repeats, seed=args.seed,
                             clusterer=clusterer, threads=args.threads)
        curve = build_profile(pts, smoothness=args.smoothness)
        write_profile_csv(pts, args.out_prefix + ".csv", config)
        write_curve_csv(curve, args.out_prefix + "_curve.csv", config)
        render_profile_svg(curve, args.out_prefix + ".svg", config=config)
        _write_json({"config": config,
                     "elbow_gcv": curve.elbow_gcv, "dip_gcv": curve.dip_gcv,
                     "elbow_smooth": curve.elbow_smooth,
                     "dip_smooth": curve.dip_smooth}, None)
        return 0

    if args.command == "bench":
        with open(args.params) as fh:
            cfg = json.load(fh)
        reps = range(args.reps)
        if args.threads > 1:
            from joblib import Parallel, delayed

            chunks = Parallel(n_jobs=args.threads)(
                delayed(_bench_rows)(cfg, args, rep) for rep in reps)
        else:
            chunks = [_bench_rows(cfg, args, rep) for rep in reps]
        rows = [row for chunk in chunks for row in chunk]
        write_bench_csv(rows, args.out, config)
        return 0

    raise DataError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError:
        return 1
    try:
        return dispatch(args)
    except _UsageError:
        return 1
    except DataError as exc:
        sys.stderr.write(f"dcgof: data error: {exc}\n")
        return 2
    except NumericalError as exc:
        sys.stderr.write(f"dcgof: numerical failure: {exc}\n")
        return 3
    except FileNotFoundError as exc:
        sys.stderr.write(f"dcgof: data error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
