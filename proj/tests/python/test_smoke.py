import math

import numpy as np
import pytest

import lsps


def cohort(n=800, seed=0, effect=2.0):
    rng = np.random.default_rng(seed)
    x = (rng.random((n, 12)) < 0.4).astype(float)
    eta = -0.4 + 1.2 * x[:, 0] + 0.5 * x[:, 1]
    t = (rng.random(n) < 1 / (1 + np.exp(-eta))).astype(np.uint8)
    y = 2 * x[:, 0] + effect * t + rng.normal(0, 0.5, n)
    return x, t, y


def test_logistic_fit_meets_kkt():
    x, t, _ = cohort()
    lam = 0.1 * lsps.lambda_max(x, t)
    fit = lsps.fit_logistic_l1(x, t, lam)
    assert fit["converged"]
    assert fit["coefficients"].shape == (12,)
    assert lsps.kkt_residual(x, t, fit["coefficients"], fit["intercept"], lam) < 1e-4


def test_preference_fixture():
    assert lsps.preference(np.array([0.5]), 0.25)[0] == pytest.approx(0.75, abs=1e-12)


def test_weighted_smd_fixture():
    smd = lsps.weighted_smd(np.array([1.0, 0, 1, 0, 0, 0]), np.array([1, 1, 0, 0, 0, 0], dtype=np.uint8),
                            np.array([0.5, 0.5, 0.25, 0.25, 0.25, 0.25]))
    assert smd == pytest.approx(0.25 / math.sqrt(0.375), abs=1e-9)


def test_cox_fixture():
    hr = lsps.fit_cox(np.array([1.0, 2, 3, 4]), np.array([1, 1, 1, 1], dtype=np.uint8),
                      np.array([1, 0, 1, 0], dtype=np.uint8), [0, 0, 0, 0])
    assert hr["log_hr"] == pytest.approx(math.log((1 + math.sqrt(17)) / 2), abs=1e-6)


def test_stratify_and_ate():
    x, t, y = cohort()
    s = lsps.stratify(x[:, 0] + 0.1 * x[:, 1], t, k=4)
    assert len(s["stratum_of"]) == len(t)
    est = lsps.estimate_ate(y, t, s["stratum_of"])
    assert est["ci"][0] < est["nu_hat"] < est["ci"][1]


def test_analyze_recovers_effect():
    x, t, y = cohort(n=2000, seed=3)
    out = lsps.analyze(x, t, y, strata=5, cv_folds=5, lambda_count=10)
    assert abs(out["estimate"]["nu_hat"] - 2.0) < 0.2
    assert out["unadjusted"]["nu_hat"] > out["estimate"]["nu_hat"]
    assert out["propensity"].shape == (2000,)
    assert out["status"] in (0, 2, 3)


def test_sim1_and_aggregate():
    d = lsps.generate_sim1(n=200, m=20, sigma2=0.0, replicate=1)
    assert d["x"].shape == (200, 20)
    again = lsps.generate_sim1(n=200, m=20, sigma2=0.0, replicate=1)
    assert np.array_equal(d["y"], again["y"])
    s = lsps.aggregate(np.array([1.0, 3.0]), 2.0)
    assert s["rmse"] == pytest.approx(1.0)


def test_errors_map_to_python():
    with pytest.raises(ValueError):
        lsps.aggregate(np.array([2.0]), 2.0)
    with pytest.raises(ValueError):
        lsps.stratify(np.array([0.1, 0.2]), np.array([1, 0], dtype=np.uint8), k=0)
