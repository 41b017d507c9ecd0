import json
from pathlib import Path

import numpy as np
import pytest

from cdfm import io
from cdfm.cli import main
from cdfm.errors import ValidationError
from cdfm.model import restricted_normal_config, simulate_series

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


# --- CSV / JSON -----------------------------------------------------------------

def test_csv_roundtrip_exact(tmp_path, rng):
    M = rng.standard_normal((7, 3)) * 10.0 ** rng.integers(-8, 8, (7, 3))
    io.write_matrix_csv(tmp_path / "m.csv", M, header=["a", "b", "c"])
    np.testing.assert_array_equal(io.read_matrix_csv(tmp_path / "m.csv"), M)
    text = (tmp_path / "m.csv").read_bytes()
    assert b"\r" not in text and text.startswith(b"a,b,c\n")


def test_csv_rejects_bad_input(tmp_path):
    p = tmp_path / "bad.csv"
    for content in ["", "1,2\n3\n", "1,2\n2,x\n", "1,nan\n2,3\n"]:
        p.write_text(content)
        with pytest.raises(ValidationError):
            io.read_matrix_csv(p)


def test_json_nonfinite(tmp_path):
    io.write_json(tmp_path / "a.json", {"x": np.inf, "y": np.arange(2), "z": np.bool_(True)})
    assert io.read_json(tmp_path / "a.json") == {"x": "inf", "y": [0, 1], "z": True}


def test_config_roundtrip():
    cfg = io.load_config(CONFIGS / "two_point_masses.json")
    back = io.config_from_dict(io.config_to_dict(cfg))
    assert io.config_to_dict(back) == io.config_to_dict(cfg)
    assert cfg.d == 60 and cfg.K == 2


def test_config_errors(tmp_path):
    with pytest.raises(ValidationError):
        io.config_from_dict({"d": 4, "T": 8, "K": 2, "components": [{"kind": "point_mass", "mu": [0.1]}]})
    (tmp_path / "broken.json").write_text("{")
    with pytest.raises(ValidationError):
        io.load_config(tmp_path / "broken.json")


# --- simulate ---------------------------------------------------------------------

def _run(*argv):
    return main([str(a) for a in argv])


def test_simulate_minimal(tmp_path):
    assert _run("simulate", "--config", CONFIGS / "minimal.json", "--seed", 3, "--out", tmp_path / "a") == 0
    X = io.read_matrix_csv(tmp_path / "a" / "series.csv")
    assert X.shape == (8, 4)
    truth = io.read_truth(tmp_path / "a" / "truth.json")
    assert truth["labels"].tolist() == [0] * 4
    _run("simulate", "--config", CONFIGS / "minimal.json", "--seed", 3, "--out", tmp_path / "b")
    for f in ("series.csv", "truth.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_simulate_roundtrip_matches_library(tmp_path):
    _run("simulate", "--config", CONFIGS / "two_point_masses.json", "--seed", 5, "--out", tmp_path)
    cfg = io.load_config(CONFIGS / "two_point_masses.json")
    direct = simulate_series(cfg, np.random.default_rng(5)).series
    np.testing.assert_array_equal(io.read_matrix_csv(tmp_path / "series.csv"), direct)


def test_simulate_large_panel_shape(tmp_path):
    assert _run("simulate", "--config", CONFIGS / "three_communities.json", "--seed", 1, "--out", tmp_path) == 0
    lines = (tmp_path / "series.csv").read_text().splitlines()
    assert len(lines) == 931 and len(lines[1].split(",")) == 750


def test_exit_codes(tmp_path):
    assert _run("simulate", "--config", tmp_path / "missing.json", "--out", tmp_path) == 3
    (tmp_path / "bad.json").write_text(json.dumps({"d": 0, "T": 5, "K": 1, "components": []}))
    assert _run("simulate", "--config", tmp_path / "bad.json", "--out", tmp_path) == 1
    io.write_matrix_csv(tmp_path / "s.csv", np.random.default_rng(0).standard_normal((20, 3)))
    assert _run("pipeline", "--input", tmp_path / "s.csv", "--r", 5, "--k", 2, "--out", tmp_path / "p") == 1
    # second moments are uncentered, so only an all-zero column has no variance
    dead = np.random.default_rng(1).standard_normal((20, 3))
    dead[:, 1] = 0.0
    io.write_matrix_csv(tmp_path / "c.csv", dead)
    assert _run("pipeline", "--input", tmp_path / "c.csv", "--r", 1, "--k", 1, "--out", tmp_path / "q") == 1


# --- pipeline ---------------------------------------------------------------------

@pytest.fixture(scope="module")
def two_block_run(tmp_path_factory):
    d = tmp_path_factory.mktemp("twoblock")
    _run("simulate", "--config", CONFIGS / "two_point_masses.json", "--seed", 2, "--out", d)
    return d


def test_pipeline_recovers_point_masses(two_block_run, tmp_path):
    out = tmp_path / "rep"
    rc = _run("pipeline", "--input", two_block_run / "series.csv", "--r", 2, "--auto-k", "--n-sim", 200,
              "--truth", two_block_run / "truth.json", "--format", "csv", "--format", "json",
              "--format", "svg", "--out", out)
    assert rc == 0
    rep = io.read_json(out / "report.json")
    assert rep["K"] == 2
    assert rep["misclustering"] == 0.0
    for name in ("heatmap.csv", "permutation.csv", "scatter.csv", "scree.csv", "acf.csv",
                 "figures.json", "heatmap.svg", "scatter.svg"):
        assert (out / name).exists(), name
    H = io.read_matrix_csv(out / "heatmap.csv")
    perm = io.read_matrix_csv(out / "permutation.csv").astype(int).ravel()
    assert H.shape == (60, 60) and sorted(perm.tolist()) == list(range(60))
    acf = io.read_matrix_csv(out / "acf.csv")
    np.testing.assert_allclose(acf[0, 1:], 1.0)


def test_pipeline_fits(two_block_run, tmp_path):
    rc = _run("pipeline", "--input", two_block_run / "series.csv", "--r", 2, "--k", 2, "--fit", "nce",
              "--out", tmp_path)
    assert rc == 0
    rep = io.read_json(tmp_path / "report.json")
    assert len(rep["fits"]) == 2


def _shaped_series(T, d, r, K, seed):
    g = np.random.default_rng(seed)
    ang = 2 * np.pi * np.arange(K) / K
    mu = np.zeros((K, r))
    mu[:, 0], mu[:, 1] = 0.6 * np.cos(ang), 0.6 * np.sin(ang)
    cfg = restricted_normal_config(d, T, mu, 0.1, normalize_errors=True)
    return simulate_series(cfg, g).series


def test_pipeline_fmri_shape(tmp_path):
    io.write_matrix_csv(tmp_path / "roi.csv", _shaped_series(392, 58, 3, 3, 7))
    rc = _run("pipeline", "--input", tmp_path / "roi.csv", "--r", 3, "--auto-k", "--tau", 0.3,
              "--n-sim", 100, "--out", tmp_path / "o")
    assert rc == 0
    acf = io.read_matrix_csv(tmp_path / "o" / "acf.csv")
    assert acf.shape[1] == 1 + 3


def test_pipeline_macro_shape(tmp_path):
    io.write_matrix_csv(tmp_path / "macro.csv", _shaped_series(200, 90, 4, 3, 8))
    rc = _run("pipeline", "--input", tmp_path / "macro.csv", "--r", 4, "--auto-k", "--tau", 0.3,
              "--n-sim", 100, "--out", tmp_path / "o")
    assert rc == 0
    rep = io.read_json(tmp_path / "o" / "report.json")
    assert rep["K"] >= 1
    assert io.read_matrix_csv(tmp_path / "o" / "heatmap.csv").shape == (90, 90)


# --- fit / sigclust / netvar ---------------------------------------------------------

def test_fit_command(tmp_path, rng):
    lam = np.vstack([rng.normal([0.5, 0.0], 0.1, (40, 2)), rng.normal([-0.4, 0.3], 0.1, (40, 2))])
    io.write_matrix_csv(tmp_path / "L.csv", lam)
    io.write_json(tmp_path / "z.json", {"labels": [0] * 40 + [1] * 40})
    assert _run("fit", "--input", tmp_path / "L.csv", "--labels", tmp_path / "z.json",
                "--out", tmp_path / "fit.json") == 0
    out = io.read_json(tmp_path / "fit.json")
    fits = out["fits"] if isinstance(out, dict) else out
    assert len(fits) == 2
    assert np.linalg.norm(np.array(fits[0]["mu_hat"]) - [0.5, 0.0]) < 0.1


def test_sigclust_command(tmp_path, rng):
    pts = np.vstack([rng.normal(0, 0.05, (40, 2)), rng.normal(1, 0.05, (40, 2))])
    io.write_matrix_csv(tmp_path / "p.csv", pts)
    assert _run("sigclust", "--input", tmp_path / "p.csv", "--n-sim", 50, "--out", tmp_path / "t.json") == 0
    assert io.read_json(tmp_path / "t.json")["k_hat"] >= 2


def test_netvar_command(tmp_path):
    assert _run("netvar", "--config", CONFIGS / "netvar.json", "--seed", 4, "--out", tmp_path) == 0
    files = sorted(p.name for p in tmp_path.iterdir())
    assert any(f.endswith(".csv") for f in files) and any(f.endswith(".json") for f in files)
