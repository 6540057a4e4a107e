"""Smoke tests for the python bindings: build a dataset, run the estimators,
and cross-check the baseline against numpy."""

import numpy as np

import pmls


def test_ols_matches_numpy():
    rng = np.random.default_rng(3)
    X = rng.normal(1.0, 1.0, size=(200, 2))
    Y = X @ np.array([2.0, -1.0]) + rng.normal(0.0, 0.3, size=200)
    ds = pmls.Dataset(X, Y)
    fit = pmls.ols_fit(ds)
    ref, *_ = np.linalg.lstsq(X, Y, rcond=None)
    assert np.allclose(fit.beta, ref, atol=1e-10)


def test_generation_is_deterministic():
    cfg = pmls.ExperimentConfig.builtin(pmls.ExperimentId.E2, 300, 1, 42)
    a = pmls.generate(cfg, 0)
    b = pmls.generate(cfg, 0)
    assert np.array_equal(a.Y, b.Y)
    assert np.array_equal(a.X, b.X)
    c = pmls.generate(cfg, 1)
    assert not np.array_equal(a.Y, c.Y)


def test_upper_expectation_sample_two_groups():
    rng = np.random.default_rng(11)
    y = np.concatenate([rng.normal(1.0, 0.2, 200), rng.normal(6.0, 0.2, 50)])
    grid = pmls.CvGrid.defaults(len(y), 0, 5)
    theta = pmls.cv_select_theta_sample(y, grid)
    t = pmls.TuningParams()
    t.lambda_ = theta.lambda_tilde
    t.n_lambda = theta.n_lambda_tilde
    r = pmls.upper_expectation_sample(y, t)
    assert abs(r.mu_upper - 6.0) < 0.3
    assert 10 <= r.n_selected <= 100


def test_full_pipeline_smoke():
    cfg = pmls.ExperimentConfig.builtin(pmls.ExperimentId.E2, 200, 1, 9)
    ds = pmls.generate(cfg, 0)
    fit = pmls.fit_pipeline(ds, pmls.Pipeline.pmls_full, cfg)
    assert abs(fit.beta[0] - 2.0) < 0.5
    assert fit.mu_upper is not None
    X0 = np.zeros((1, 1))
    pred = pmls.predict(fit, X0, pmls.PredictionMode.max)
    assert pred[0] == fit.mu_upper


def test_diagnostic_closed_form():
    d = pmls.order_statistic_diagnostic(1, 1, trials=500)
    assert abs(d.p - 9.0 / 32.0) < 1e-12
    assert abs(d.tail_bound - 9.0 / 32.0) < 1e-12


def test_error_is_raised():
    X = np.ones((10, 2))  # duplicated column
    try:
        pmls.Dataset(X, np.ones(10))
    except Exception as e:
        assert "rank" in str(e).lower()
    else:
        raise AssertionError("rank-deficient design was accepted")


if __name__ == "__main__":
    failures = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                fn()
                print(f"ok   {name}")
            except Exception as exc:  # noqa: BLE001
                failures += 1
                print(f"FAIL {name}: {exc}")
    raise SystemExit(1 if failures else 0)
