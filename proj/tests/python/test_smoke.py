import json
import os
import subprocess

import numpy as np
import pytest

import lpca


def relative_error(truth, estimate):
    return float(((truth - estimate) ** 2).sum() / (truth ** 2).sum())


@pytest.fixture(scope="module")
def data():
    return lpca.simulate(rows=40, cols=60, rank=3, snr=1.0, offset="sampled", seed=3)


def test_simulate_shapes_and_snr(data):
    assert data["X"].shape == (40, 60)
    assert data["theta"].shape == (40, 60)
    assert abs(data["realized_snr"] - 1.0) < 1e-12
    assert set(np.unique(data["X"])) <= {0.0, 1.0}
    assert np.allclose(data["Z"].sum(axis=0), 0.0, atol=1e-9)


def test_fit_is_monotone_and_seeded(data):
    a = lpca.fit(data["X"], "gdp", lam=3.0, gamma=1.0, seed=5)
    b = lpca.fit(data["X"], "gdp", lam=3.0, gamma=1.0, seed=5)
    trace = np.asarray(a.objective_trace)
    assert np.all(np.diff(trace) <= 1e-9 * np.abs(trace[:-1]))
    assert np.array_equal(a.S, b.S)
    assert a.theta().shape == (40, 60)
    probs = a.probabilities()
    assert np.all((probs > 0) & (probs < 1))


def test_missing_values_are_ignored(data):
    X = data["X"].copy()
    X[0, 0] = np.nan
    model = lpca.fit(X, "nuclear", lam=2.0)
    assert np.isfinite(model.final_objective)


def test_select_and_evaluate(data, tmp_path):
    result = lpca.select(data["X"], "gdp", n_lambda=8, seed=1, max_iter=300, refit_max_iter=300)
    assert result["path"][0]["rank"] == 0
    assert abs(result["lambda_max"] / result["lambda_min"] - 500.0) < 1e-9
    model = result["model"]
    metrics = lpca.evaluate(model, data["theta"], data["Z"], data["mu"], data["Pi"])
    assert metrics["rmse_theta"] == pytest.approx(relative_error(data["theta"], model.theta()))
    model.save(tmp_path / "m.json")
    back = lpca.Model.load(tmp_path / "m.json")
    assert np.array_equal(back.S, model.S)
    assert np.array_equal(back.mu, model.mu)
    assert result["path_start"] == "random"


def test_select_path_start(data):
    warm = lpca.select(data["X"], "gdp", n_lambda=6, seed=1, max_iter=5000, path_start="warm")
    assert warm["path_start"] == "warm"
    assert not any(r["extended"] for r in warm["path"])
    assert lpca.select(data["X"], "nuclear", n_lambda=6, seed=1, max_iter=300)["path_start"] == "warm"
    with pytest.raises(ValueError):
        lpca.select(data["X"], "gdp", path_start="cold")


def test_threshold_curve_and_prox():
    sigma, eta = lpca.threshold_curve("nuclear", lam=1.0, sigma_max=4.0, points=5)
    assert np.allclose(eta, [0, 0, 1, 2, 3])
    M = np.diag([3.0, 1.0, 0.5])
    Z = lpca.weighted_sv_threshold(M, np.ones(3), lam=1.0)
    assert np.allclose(Z, np.diag([2.0, 0.0, 0.0]))
    with pytest.raises(ValueError):
        lpca.weighted_sv_threshold(M, np.array([3.0, 2.0, 1.0]), lam=1.0)


def test_nll_matches_numpy(data):
    theta = np.zeros((40, 60))
    assert lpca.neg_log_likelihood(data["X"], theta) == pytest.approx(40 * 60 * np.log(2.0))


@pytest.mark.skipif("LPCA_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_round_trip(tmp_path):
    cli = os.environ["LPCA_CLI"]
    out = tmp_path / "d"
    subprocess.run([cli, "simulate", "--rows", "30", "--cols", "40", "--rank", "2", "--seed", "1",
                    "--out", str(out)], check=True, capture_output=True)
    sim = lpca.simulate(rows=30, cols=40, rank=2, seed=1)
    X = np.loadtxt(out / "X.csv", delimiter=",")
    assert np.array_equal(X, sim["X"])
    meta = json.loads((out / "meta.json").read_text())
    assert meta["config"]["seed"] == 1
    bad = subprocess.run([cli, "fit", "--nope"], capture_output=True, text=True)
    assert bad.returncode == 1
    assert "--nope" in bad.stderr
