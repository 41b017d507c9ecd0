"""
Command-line front end.

    cdfm simulate  --config cfg.json --seed 1 --out run/
    cdfm pipeline  --input series.csv --r 2 --auto-k --tau 0.3 --out report/
    cdfm grid      --config grid.json --out grid.csv --jobs 4
    cdfm fit       --input loadings.csv --labels labels.csv --method nce --out fit.json
    cdfm sigclust  --input series.csv --r 2 --tau 0.3 --out tree.json
    cdfm netvar    --config net.json --seed 1 --out net/

Exit codes: 0 success, 1 invalid input, 2 numerical failure, 3 I/O error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io
from .clustering import kmeans, misclustering_rate
from .errors import NumericalError, ValidationError
from .estimation import pca_from_series, sample_correlation, sample_covariance
from .experiments import ExperimentGrid, autocorrelation, run_grid
from .fitting import fit_communities
from .model import Membership, simulate_series
from .netvar import (WsbmVarConfig, cdfm_rewrite, empirical_c_values, expected_c_values,
                     sample_wsbm, simulate_wsbm_var)
from ._linalg import numerical_rank, spectral_radius
from .sigclust import choose_k
from .svg import heatmap_svg, scatter_svg

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


def _stage_rngs(seed, n):
    """Independent generators for the stages of one command."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def _formats(args):
    return set(args.format or ["csv", "json"])


# --- commands ----------------------------------------------------------------

def cmd_simulate(args):
    cfg = io.load_config(args.config)
    draw = simulate_series(cfg, np.random.default_rng(args.seed))
    series, truth = io.write_draw(draw, args.out, seed=args.seed)
    print(f"wrote {series} ({cfg.T} x {cfg.d}) and {truth}")


def _read_labels(path):
    path = Path(path)
    if path.suffix == ".json":
        data = io.read_json(path)
        labels = data["labels"] if isinstance(data, dict) else data
        return np.asarray(labels, dtype=int)
    return io.read_matrix_csv(path).astype(int).ravel()


def cmd_pipeline(args):
    X = io.read_matrix_csv(args.input)
    T, d = X.shape
    if args.r > d:
        raise ValidationError(f"r={args.r} exceeds the number of series d={d}")
    rng_sig, rng_km, rng_fit = _stage_rngs(args.seed, 3)
    use_corr = args.corr
    est = pca_from_series(X, args.r, use_correlation=use_corr)
    C = sample_correlation(X) if use_corr else sample_covariance(X)
    eigenvalues = np.linalg.eigvalsh(C)[::-1]

    report = {"d": d, "T": T, "r": args.r, "matrix": "correlation" if use_corr else "covariance",
              "seed": args.seed}
    if args.k is None:
        sc = choose_k(est.loadings, tau=args.tau, n_sim=args.n_sim, max_k=args.max_k, rng=rng_sig)
        K = sc.k_hat
        report["sigclust"] = {"tau": args.tau, "n_sim": args.n_sim, "k_hat": K, "tree": sc.tree.to_dict()}
    else:
        K = args.k
    if K > d:
        raise ValidationError(f"K={K} exceeds d={d}")
    res = kmeans(est.loadings, K, rng_km, n_init=args.n_init)
    labels = res.labels
    report.update(K=K, labels=labels.tolist(), kmeans=res.to_dict(), pca=est.to_dict())

    if args.fit != "none":
        fits = fit_communities(est.loadings, labels, method=args.fit, rng=rng_fit)
        report["fits"] = [f.to_dict() for f in fits]
    if args.truth:
        truth = io.read_truth(args.truth)
        report["misclustering"] = misclustering_rate(labels, truth["labels"], max(K, int(truth["labels"].max()) + 1))

    perm = np.argsort(labels, kind="stable")
    sizes = np.bincount(labels, minlength=K)
    boundaries = np.cumsum(sizes)[:-1].tolist()
    reordered = C[np.ix_(perm, perm)]
    lags = min(args.max_lag, T - 1)
    acf = np.column_stack([autocorrelation(est.factors[:, j], lags) for j in range(args.r)])
    report["heatmap"] = {"permutation": perm.tolist(), "boundaries": boundaries}

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fmts = _formats(args)
    io.write_json(out / "report.json", report)
    scatter = np.column_stack([est.loadings, labels])
    if "csv" in fmts:
        io.write_matrix_csv(out / "heatmap.csv", reordered)
        io.write_matrix_csv(out / "permutation.csv", perm[:, None])
        io.write_matrix_csv(out / "scatter.csv", scatter,
                            header=[f"lambda{j + 1}" for j in range(args.r)] + ["label"])
        io.write_matrix_csv(out / "scree.csv", np.column_stack([np.arange(1, d + 1), eigenvalues]),
                            header=["index", "eigenvalue"])
        io.write_matrix_csv(out / "acf.csv", np.column_stack([np.arange(lags + 1), acf]),
                            header=["lag"] + [f"factor{j + 1}" for j in range(args.r)])
    if "json" in fmts:
        io.write_json(out / "figures.json", {
            "heatmap": reordered, "permutation": perm, "boundaries": boundaries,
            "scatter": {"loadings": est.loadings, "labels": labels},
            "scree": eigenvalues, "acf": acf.T,
        })
    if "svg" in fmts:
        (out / "heatmap.svg").write_text(heatmap_svg(reordered, boundaries), encoding="utf-8")
        (out / "scatter.svg").write_text(scatter_svg(est.loadings, labels), encoding="utf-8")
    msg = f"K={K}"
    if "misclustering" in report:
        msg += f" misclustering={report['misclustering']:.4f}"
    print(f"{msg}; wrote {out}")


def cmd_grid(args):
    if args.full:
        grid = ExperimentGrid.full(base_seed=args.seed)
    else:
        if not args.config:
            raise ValidationError("grid needs --config or --full")
        spec = io.read_json(args.config)
        if args.seed is not None:
            spec["base_seed"] = args.seed
        grid = ExperimentGrid.from_dict(spec)
    rows = run_grid(grid, args.out, jobs=args.jobs)
    failed = sum(1 for r in rows if r["status"] != "ok")
    print(f"{len(rows)} runs in {args.out} ({failed} failed)")


def cmd_fit(args):
    lam = io.read_matrix_csv(args.input)
    labels = _read_labels(args.labels)
    if labels.size != lam.shape[0]:
        raise ValidationError("labels and loadings have different lengths")
    fits = fit_communities(lam, labels, method=args.method, rng=np.random.default_rng(args.seed))
    io.write_json(args.out, {"method": args.method, "seed": args.seed, "fits": [f.to_dict() for f in fits]})
    print(f"fitted {len(fits)} communities; wrote {args.out}")


def cmd_sigclust(args):
    X = io.read_matrix_csv(args.input)
    points = X if args.r is None else pca_from_series(X, args.r, use_correlation=args.corr).loadings
    res = choose_k(points, tau=args.tau, n_sim=args.n_sim, max_k=args.max_k,
                   rng=np.random.default_rng(args.seed))
    io.write_json(args.out, {"k_hat": res.k_hat, "tau": args.tau, "n_sim": args.n_sim,
                             "seed": args.seed, "labels": res.labels, "tree": res.tree.to_dict()})
    print(f"K_hat={res.k_hat}; wrote {args.out}")


def netvar_config(data) -> tuple:
    try:
        sizes = np.asarray(data["sizes"], dtype=int)
        mem = Membership(np.repeat(np.arange(sizes.size), sizes), sizes.size)
        cfg = WsbmVarConfig(mem, np.asarray(data["B"], dtype=float), float(data["phi"]),
                            float(data.get("weight_low", 1.0)), float(data.get("weight_high", 1.0)))
        return cfg, int(data["T"]), data.get("c_values", "empirical")
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"bad netvar config: missing or malformed {exc}") from exc


def cmd_netvar(args):
    cfg, T, c_mode = netvar_config(io.read_json(args.config))
    rng = np.random.default_rng(args.seed)
    A, deg = sample_wsbm(cfg, rng)
    series, psi = simulate_wsbm_var(cfg, T, rng, adjacency=(A, deg))
    if c_mode == "expected":
        c = expected_c_values(cfg)
    elif c_mode == "empirical":
        c = empirical_c_values(deg, cfg.membership)
    else:
        c = np.asarray(c_mode, dtype=float)
    avg = cdfm_rewrite(cfg, c)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_matrix_csv(out / "series.csv", series, header=[f"y{i + 1}" for i in range(cfg.d)])
    io.write_json(out / "report.json", {
        "seed": args.seed, "d": cfg.d, "T": T, "K": cfg.K, "phi": cfg.phi, "mu_w": cfg.mu_w,
        "labels": cfg.membership.z, "c_values": c,
        "spectral_radius_psi": spectral_radius(psi),
        "rank_psi_bar": numerical_rank(avg.psi_bar),
        "loadings_gram": avg.gram, "factor_transition": avg.phi_mat, "factor_innovation_cov": avg.eta_cov,
    })
    print(f"wrote {out / 'series.csv'} ({T} x {cfg.d}) and {out / 'report.json'}")


# --- parser ------------------------------------------------------------------

def _add_common(p, seed_default=0):
    p.add_argument("--seed", type=int, default=seed_default)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1, help="worker processes (outputs do not depend on it)")


def _add_matrix_switch(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--corr", dest="corr", action="store_true", default=True,
                   help="PCA on the sample correlation matrix (default)")
    g.add_argument("--cov", dest="corr", action="store_false", help="PCA on the sample covariance matrix")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cdfm", description="Community dynamic factor models.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a CDFM panel from a JSON config")
    p.add_argument("--config", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("pipeline", help="PCA, choice of K, k-means and optional fits on a series CSV")
    p.add_argument("--input", required=True, help="T x d CSV")
    p.add_argument("--r", type=int, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--k", type=int)
    g.add_argument("--auto-k", action="store_true", help="choose K by recursive SigClust")
    p.add_argument("--tau", type=float, default=0.30)
    p.add_argument("--n-sim", type=int, default=1000)
    p.add_argument("--max-k", type=int, default=20)
    p.add_argument("--n-init", type=int, default=10)
    p.add_argument("--max-lag", type=int, default=20)
    p.add_argument("--fit", choices=["none", "nce", "mle"], default="none")
    p.add_argument("--truth", help="truth.json written by `cdfm simulate`")
    p.add_argument("--format", action="append", choices=["csv", "json", "svg"])
    _add_matrix_switch(p)
    _add_common(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("grid", help="misclustering simulation grid")
    p.add_argument("--config")
    p.add_argument("--full", action="store_true", help="run the full 13 x 13 x 10 x 10 grid")
    p.add_argument("--seed", type=int, default=None, help="overrides base_seed")
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("fit", help="fit restricted normals per community")
    p.add_argument("--input", required=True, help="n x r loadings CSV")
    p.add_argument("--labels", required=True, help="labels CSV or JSON")
    p.add_argument("--method", choices=["nce", "mle"], default="nce")
    _add_common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("sigclust", help="choose K by recursive SigClust")
    p.add_argument("--input", required=True, help="points CSV, or a series CSV with --r")
    p.add_argument("--r", type=int, help="estimate r-dimensional loadings from a series first")
    p.add_argument("--tau", type=float, default=0.30)
    p.add_argument("--n-sim", type=int, default=1000)
    p.add_argument("--max-k", type=int, default=20)
    _add_matrix_switch(p)
    _add_common(p)
    p.set_defaults(func=cmd_sigclust)

    p = sub.add_parser("netvar", help="simulate a WSBM network VAR and its CDFM rewrite")
    p.add_argument("--config", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_netvar)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "auto_k", False):
        args.k = None
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
