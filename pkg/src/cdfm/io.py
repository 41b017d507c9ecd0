"""
File formats: series CSV, JSON sidecars and configuration parsing.

CSV: comma separated, ``.`` decimal, optional single header row, UTF-8,
LF line endings. Floats are written with 17 significant digits so a
round trip reproduces the array exactly.
"""
from __future__ import annotations

import csv
import io as _io
import json
import math
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .mixtures import MixingSpec
from .model import CdfmConfig, CdfmDraw, IidGaussian, Var1, equidistant_means, restricted_normal_config

__all__ = [
    "write_matrix_csv",
    "read_matrix_csv",
    "write_json",
    "read_json",
    "config_from_dict",
    "config_to_dict",
    "load_config",
    "write_draw",
    "read_truth",
    "to_jsonable",
]


def _fmt(v) -> str:
    return repr(float(v))


def write_matrix_csv(path, matrix, header=None):
    M = np.atleast_2d(np.asarray(matrix, dtype=float))
    buf = _io.StringIO()
    if header is not None:
        buf.write(",".join(header) + "\n")
    for row in M:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="\n")


def read_matrix_csv(path) -> np.ndarray:
    """Parse a numeric CSV; a non-numeric first row is treated as a header."""
    text = Path(path).read_text(encoding="utf-8")
    rows = [r for r in csv.reader(_io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise ValidationError(f"{path}: empty CSV")
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        rows = rows[1:]
    try:
        data = np.array([[float(c) for c in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise ValidationError(f"{path}: non-numeric entry ({exc})") from exc
    if data.ndim != 2 or len({len(r) for r in rows}) != 1:
        raise ValidationError(f"{path}: ragged CSV")
    if not np.all(np.isfinite(data)):
        raise ValidationError(f"{path}: non-finite values")
    return data


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, obj):
    Path(path).write_text(json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n",
                          encoding="utf-8", newline="\n")


def read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc


def _error_cov_from(value, d):
    if value is None:
        return None
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return float(arr) * np.eye(d)
    if arr.ndim == 1:
        return np.diag(arr)
    return arr


def config_from_dict(data: dict) -> CdfmConfig:
    """Build a :class:`CdfmConfig` from its JSON form.

    Components are either listed explicitly or generated with
    ``"equidistant": {"m": .., "sigma": ..}`` (restricted normals at
    equidistant means on a circle of radius ``m``, equal community sizes).
    """
    try:
        d, T = int(data["d"]), int(data["T"])
        fp = data.get("factor_process", {"kind": "iid"})
        if fp.get("kind", "iid") == "iid":
            process = IidGaussian()
        elif fp["kind"] == "var1":
            process = Var1(fp["transition"], fp["innovation_cov"])
        else:
            raise ValidationError(f"unknown factor process {fp['kind']!r}")
        error_cov = _error_cov_from(data.get("error_cov"), d)
        normalize = bool(data.get("normalize_errors", False))
        if "equidistant" in data:
            eq = data["equidistant"]
            K = int(data.get("K", 3))
            return restricted_normal_config(
                d, T, equidistant_means(K, float(eq["m"])), float(eq["sigma"]),
                error_cov=error_cov, normalize_errors=normalize, factor_process=process,
            )
        comps = [MixingSpec.from_dict(c) for c in data["components"]]
        K = int(data.get("K", len(comps)))
        r = int(data.get("r", comps[0].r))
        weights = data.get("weights", [1.0 / K] * K)
        return CdfmConfig(d=d, T=T, r=r, K=K, weights=weights, components=comps,
                          factor_process=process, error_cov=error_cov,
                          normalize_errors=normalize, fixed_sizes=data.get("fixed_sizes"))
    except (KeyError, TypeError, IndexError) as exc:
        raise ValidationError(f"bad config: missing or malformed {exc}") from exc


def config_to_dict(cfg: CdfmConfig) -> dict:
    fp = cfg.factor_process
    out = {
        "d": cfg.d, "T": cfg.T, "r": cfg.r, "K": cfg.K,
        "weights": cfg.weights.tolist(),
        "components": [c.to_dict() for c in cfg.components],
        "factor_process": ({"kind": "iid"} if isinstance(fp, IidGaussian) else
                           {"kind": "var1", "transition": fp.transition.tolist(),
                            "innovation_cov": fp.innovation_cov.tolist()}),
        "normalize_errors": cfg.normalize_errors,
        "fixed_sizes": None if cfg.fixed_sizes is None else [int(s) for s in cfg.fixed_sizes],
    }
    if cfg.error_cov is not None:
        out["error_cov"] = cfg.error_cov.tolist()
    return out


def load_config(path) -> CdfmConfig:
    return config_from_dict(read_json(path))


def write_draw(draw: CdfmDraw, out_dir, seed=None):
    """Write ``series.csv`` (header ``x1..xd``) and ``truth.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    d = draw.series.shape[1]
    write_matrix_csv(out / "series.csv", draw.series, header=[f"x{i + 1}" for i in range(d)])
    write_json(out / "truth.json", {
        "seed": seed,
        "config": config_to_dict(draw.config),
        "labels": draw.membership.z.tolist(),
        "loadings": draw.loadings.tolist(),
        "means": [c.mu.tolist() for c in draw.config.components],
    })
    return out / "series.csv", out / "truth.json"


def read_truth(path) -> dict:
    data = read_json(path)
    data["labels"] = np.asarray(data["labels"], dtype=int)
    data["loadings"] = np.asarray(data["loadings"], dtype=float)
    return data
