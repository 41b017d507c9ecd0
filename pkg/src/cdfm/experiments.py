"""
Simulation studies: the misclustering grid, NCE accuracy and SigClust
recovery, plus the single-replicate building blocks they share.
"""
from __future__ import annotations

import csv
import io as _io
import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence

import numpy as np
from scipy.linalg import orthogonal_procrustes

from .clustering import kmeans, misclustering_rate, separation_stats, theorem_bound
from .estimation import align_columns, align_truth, pca_from_series
from .errors import CdfmError, ValidationError
from .fitting import fit_communities, fit_errors
from .model import (equidistant_means, random_direction_means,
                    restricted_normal_config, simulate_series)
from .sigclust import choose_k

__all__ = [
    "ExperimentGrid",
    "RUN_FIELDS",
    "derive_seed",
    "simulate_cell",
    "run_replicate",
    "run_grid",
    "read_grid_table",
    "run_nce_replicate",
    "run_sigclust_replicate",
    "autocorrelation",
]

RUN_FIELDS = ["cell", "replicate", "seed", "d", "T", "m", "sigma", "K", "r",
              "misclustering", "epsilon", "rho_sigma", "rho_eps", "delta",
              "theorem_bound", "iterations", "status"]


def derive_seed(base_seed: int, *keys: int) -> int:
    """Independent 64-bit seed for a (cell, replicate, ...) key."""
    ss = np.random.SeedSequence([int(base_seed), *[int(k) for k in keys]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class ExperimentGrid:
    d_values: Sequence[int]
    T_values: Sequence[int]
    m_values: Sequence[float]
    sigma_values: Sequence[float]
    K: int = 3
    r: int = 2
    replications: int = 10
    base_seed: int = 0
    use_correlation: bool = True
    n_init: int = 10

    def __post_init__(self):
        vals = [*self.d_values, *self.T_values, *self.m_values, *self.sigma_values]
        if not vals or not np.all(np.isfinite(np.asarray(vals, dtype=float))):
            raise ValidationError("grid values must be finite")
        if self.replications < 1:
            raise ValidationError("replications must be at least 1")

    @classmethod
    def full(cls, replications=10, base_seed=0) -> "ExperimentGrid":
        """The full 13 x 13 x 10 x 10 lattice."""
        return cls(
            d_values=[30 + 90 * a for a in range(13)],
            T_values=[30 + 90 * b for b in range(13)],
            m_values=[round(0.1 * i, 1) for i in range(10)],
            sigma_values=[round(0.1 * i, 1) for i in range(10)],
            K=3, r=2, replications=replications, base_seed=base_seed,
        )

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentGrid":
        data = dict(data)
        if data.pop("preset", None) == "full":
            return cls.full(data.get("replications", 10), data.get("base_seed", 0))
        try:
            return cls(**data)
        except TypeError as exc:
            raise ValidationError(f"bad grid spec: {exc}") from exc

    def cells(self):
        return list(itertools.product(self.d_values, self.T_values, self.m_values, self.sigma_values))


def _pad_means(means, r):
    if means.shape[1] >= r:
        return means
    return np.hstack([means, np.zeros((means.shape[0], r - means.shape[1]))])


def simulate_cell(d, T, m, sigma, K, r, rng, normalize_errors=False, means=None):
    """One draw from the equal-size restricted-normal mixture design."""
    means = _pad_means(equidistant_means(K, m), r) if means is None else np.atleast_2d(means)
    cfg = restricted_normal_config(d, T, means, sigma, r=r, normalize_errors=normalize_errors)
    return simulate_series(cfg, rng), means


def run_replicate(d, T, m, sigma, K=3, r=2, seed=0, use_correlation=True, n_init=10) -> dict:
    """Simulate, estimate loadings by PCA, cluster, and score one replicate."""
    rng = np.random.default_rng(seed)
    draw, means = simulate_cell(d, T, m, sigma, K, r, rng)
    est = pca_from_series(draw.series, r, use_correlation=use_correlation)
    truth = align_truth(draw.loadings) if r > 1 else None
    lam0 = truth.lambda0 if truth is not None else draw.loadings
    signs = align_columns(est.loadings, lam0)
    eps = float(np.max(np.linalg.norm(est.loadings * signs - lam0, axis=1)))
    res = kmeans(est.loadings, K, rng, n_init=n_init)
    stats = separation_stats(means, draw.membership.sizes, sigma, eps, r=r)
    return {
        "d": d, "T": T, "m": m, "sigma": sigma, "K": K, "r": r,
        "misclustering": misclustering_rate(res.labels, draw.membership.z, K),
        "epsilon": eps,
        "rho_sigma": stats.rho_sigma,
        "rho_eps": stats.rho_eps,
        "delta": stats.delta,
        "theorem_bound": theorem_bound(stats)["bound"],
        "iterations": res.iterations,
        "status": "ok",
    }


def _grid_task(args):
    cell, rep, seed, (d, T, m, sigma), K, r, use_corr, n_init = args
    start = time.perf_counter()
    try:
        rec = run_replicate(d, T, m, sigma, K, r, seed, use_corr, n_init)
    except (CdfmError, np.linalg.LinAlgError) as exc:
        rec = {"d": d, "T": T, "m": m, "sigma": sigma, "K": K, "r": r,
               "status": f"error: {type(exc).__name__}: {exc}".replace(",", ";")}
    rec.update(cell=cell, replicate=rep, seed=seed)
    return rec, time.perf_counter() - start


def _format_row(rec) -> List[str]:
    out = []
    for key in RUN_FIELDS:
        v = rec.get(key, "")
        if isinstance(v, (float, np.floating)):
            out.append(repr(float(v)))
        else:
            out.append(str(v))
    return out


def _csv_line(values) -> str:
    buf = _io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow(values)
    return buf.getvalue()


def read_grid_table(path) -> List[dict]:
    """Rows of a grid table with numeric columns converted."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    ints = {"cell", "replicate", "seed", "d", "T", "K", "r", "iterations"}
    out = []
    for row in rows:
        rec = {}
        for k, v in row.items():
            if k == "status" or v == "":
                rec[k] = v
            elif k in ints:
                rec[k] = int(v)
            else:
                rec[k] = float(v)
        out.append(rec)
    return out


def run_grid(grid: ExperimentGrid, out_path, jobs: int = 1, progress=None) -> List[dict]:
    """Run every (cell, replicate) not already present in ``out_path``.

    Rows are appended as they finish, then the table is rewritten sorted by
    (cell, replicate), so the final file does not depend on ``jobs``.
    Wall-clock timings go to a separate ``<out>.timings.csv``.
    """
    out_path = Path(out_path)
    existing = {}
    if out_path.exists() and out_path.stat().st_size:
        with open(out_path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header == RUN_FIELDS:
                for row in reader:
                    if len(row) == len(RUN_FIELDS):
                        existing[(int(row[0]), int(row[1]))] = row
    tasks = []
    for cell, params in enumerate(grid.cells()):
        for rep in range(grid.replications):
            if (cell, rep) in existing:
                continue
            tasks.append((cell, rep, derive_seed(grid.base_seed, cell, rep), params,
                          grid.K, grid.r, grid.use_correlation, grid.n_init))

    timings = []
    with open(out_path, "a" if existing else "w", encoding="utf-8", newline="") as fh:
        if not existing:
            fh.write(_csv_line(RUN_FIELDS))
        if jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = pool.map(_grid_task, tasks, chunksize=max(1, len(tasks) // (8 * jobs)))
                for rec, secs in results:
                    _record(fh, existing, rec, secs, timings, progress)
        else:
            for task in tasks:
                rec, secs = _grid_task(task)
                _record(fh, existing, rec, secs, timings, progress)

    ordered = [existing[k] for k in sorted(existing)]
    out_path.write_text(_csv_line(RUN_FIELDS) + "".join(_csv_line(r) for r in ordered),
                        encoding="utf-8", newline="\n")
    if timings:
        tpath = out_path.with_name(out_path.name + ".timings.csv")
        with open(tpath, "a", encoding="utf-8", newline="") as th:
            for cell, rep, secs in timings:
                th.write(f"{cell},{rep},{secs:.6f}\n")
    return read_grid_table(out_path)


def _record(fh, existing, rec, secs, timings, progress):
    row = _format_row(rec)
    existing[(rec["cell"], rec["replicate"])] = row
    fh.write(_csv_line(row))
    fh.flush()
    timings.append((rec["cell"], rec["replicate"], secs))
    if progress is not None:
        progress(rec)


def run_nce_replicate(seed, d=570, T=750, m=0.7, sigma=0.3, K=2, r=2,
                      use_correlation=True, method="nce", normalize_errors=True) -> dict:
    """NCE (or MLE) accuracy with known labels, on random-direction means.

    PCA identifies the loadings only up to an orthogonal map, so the
    estimates are rotated onto the true loadings (orthogonal Procrustes)
    before fitting; errors are then measured against the true means.
    """
    rng = np.random.default_rng(seed)
    means = random_direction_means(K, r, m, rng)
    draw, _ = simulate_cell(d, T, m, sigma, K, r, rng, means=means,
                            normalize_errors=normalize_errors)
    est = pca_from_series(draw.series, r, use_correlation=use_correlation)
    R, _ = orthogonal_procrustes(est.loadings, draw.loadings)
    fits = fit_communities(est.loadings @ R, draw.membership.z, method=method, rng=rng)
    errs = fit_errors(fits, means, sigma**2)
    errs["converged"] = [f.converged for f in fits]
    return errs


def run_sigclust_replicate(seed, K, d=750, T=930, m=0.7, sigma=0.3, r=2, tau=0.30,
                           n_sim=1000, use_correlation=True, design="random",
                           normalize_errors=True) -> dict:
    """Estimate K by recursive SigClust on PCA loadings of one simulated panel."""
    rng = np.random.default_rng(seed)
    if design == "random":
        means = random_direction_means(K, r, m, rng)
    else:
        means = _pad_means(equidistant_means(K, m), r)
    draw, _ = simulate_cell(d, T, m, sigma, K, r, rng, means=means,
                            normalize_errors=normalize_errors)
    est = pca_from_series(draw.series, r, use_correlation=use_correlation)
    res = choose_k(est.loadings, tau=tau, n_sim=n_sim, rng=rng)
    return {"K": K, "k_hat": res.k_hat, "error": abs(res.k_hat - K),
            "root_p_value": res.tree.p_value}


def autocorrelation(x, max_lag: int) -> np.ndarray:
    """Sample ACF at lags ``0..max_lag`` (mean removed, biased normalization)."""
    x = np.asarray(x, dtype=float).ravel()
    T = x.size
    if not 0 <= max_lag < T:
        raise ValidationError(f"need 0 <= max_lag < T={T}")
    y = x - x.mean()
    denom = float(y @ y)
    if denom == 0:
        raise ValidationError("ACF of a constant series is undefined")
    return np.array([float(y[: T - k] @ y[k:]) / denom for k in range(max_lag + 1)])
