import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fxscaling.errors import BootstrapDegeneracyError, DegenerateError, InsufficientDataError
from fxscaling.panel import ActivityPanel
from fxscaling.scaling import bootstrap_moments, bootstrap_scaling, fit_scaling, ols, replicate_rng
from fxscaling.schemas import BOOTSTRAP, FIT_REPORT
from fxscaling.tickdata import Interval, Kind
from oracles import naive_ols

MEANS = (4, 16, 64, 256)


def panel(rows):
    rows = np.asarray(rows)
    return ActivityPanel(Kind.QUOTE, 1, Interval(0, rows.shape[1] * 60_000),
                         tuple(f"P{i:02d}/USD" for i in range(rows.shape[0])), rows)


def law_panel(means, spread, q=40):
    # alternating mu +/- spread(mu): mean mu and population variance spread**2
    return panel([[mu + spread(mu) * (-1) ** k for k in range(q)] for mu in means])


def test_variance_equals_mean_gives_half():
    fit = fit_scaling(law_panel(MEANS, lambda mu: int(math.isqrt(mu))))
    assert abs(fit.alpha - 0.5) < 1e-12
    assert abs(fit.A - 1.0) < 1e-12
    assert fit.normr < 1e-12
    assert fit.n_used == 4 and fit.excluded == ()


def test_variance_equals_mean_squared_gives_one():
    fit = fit_scaling(law_panel(MEANS, lambda mu: mu))
    assert abs(fit.alpha - 1.0) < 1e-12
    assert fit.normr < 1e-12


def test_fit_matches_independent_regression():
    rng = np.random.default_rng(0)
    rows = rng.poisson(np.logspace(0, 3, 8)[:, None], size=(8, 200))
    fit = fit_scaling(panel(rows))
    mu = rows.mean(axis=1)
    var = rows.var(axis=1)
    slope, icpt = naive_ols(np.log(mu).tolist(), np.log(var).tolist())
    assert fit.alpha == pytest.approx(slope / 2, rel=1e-12)
    assert math.log(fit.A) == pytest.approx(icpt, rel=1e-10, abs=1e-12)
    resid = np.log(var) - (icpt + slope * np.log(mu))
    assert fit.normr == pytest.approx(math.sqrt(math.fsum(resid ** 2)), rel=1e-9)


def test_exclusions_are_reported():
    rows = [[4, 0] * 10, [0] * 20, [5] * 20, [20, 12] * 10, [1, 0] + [0] * 18]
    fit = fit_scaling(panel(rows), min_mean=0.5)
    reasons = dict(fit.excluded)
    assert set(reasons) == {"P01/USD", "P02/USD", "P04/USD"}
    assert "zero variance" in reasons["P02/USD"]
    assert fit.n_used == 2
    assert fit.pairs_used == ("P00/USD", "P03/USD")


def test_degenerate_fits():
    with pytest.raises(InsufficientDataError):
        fit_scaling(panel([[1, 3] * 5, [0] * 10]))
    with pytest.raises(DegenerateError):
        fit_scaling(panel([[1, 3] * 5, [3, 1] * 5]))  # identical means
    with pytest.raises(DegenerateError):
        ols([1, 1, 1], [1, 2, 3])


def test_pair_permutation_invariance():
    rng = np.random.default_rng(5)
    rows = rng.poisson(np.logspace(0, 2, 6)[:, None], size=(6, 100))
    a = fit_scaling(panel(rows))
    b = fit_scaling(panel(rows[::-1]))
    assert a.alpha == pytest.approx(b.alpha, rel=1e-12)
    assert a.normr == pytest.approx(b.normr, rel=1e-9)


def test_log_base_does_not_change_alpha():
    rng = np.random.default_rng(6)
    rows = rng.poisson(np.logspace(0, 2, 6)[:, None], size=(6, 100))
    fit = fit_scaling(panel(rows))
    mu, var = rows.mean(axis=1), rows.var(axis=1)
    slope10, _ = naive_ols(np.log10(mu).tolist(), np.log10(var).tolist())
    assert fit.alpha == pytest.approx(slope10 / 2, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 40), st.integers(1, 10))
def test_normr_grows_with_scatter(k, step):
    # one point pushed off the exact law: the residual norm is linear in its log displacement
    base = np.array(law_panel((4, 16, 64, 256, 1024), lambda mu: int(math.isqrt(mu)), q=4).counts)

    def normr(spread):
        rows = base.copy()
        rows[2] = [64 + spread, 64 - spread] * 2
        return fit_scaling(panel(rows)).normr

    assert normr(8 + k + step) > normr(8 + k)
    assert normr(8) < 1e-12


def test_fit_json_schema():
    import jsonschema
    fit = fit_scaling(law_panel(MEANS, lambda mu: mu))
    jsonschema.validate(fit.to_json(), FIT_REPORT)


def test_bootstrap_deterministic_and_seed_sensitive():
    rng = np.random.default_rng(1)
    p = panel(rng.poisson(np.logspace(0, 2, 10)[:, None], size=(10, 500)))
    a = bootstrap_scaling(p, B=200, m=50, seed=3)
    b = bootstrap_scaling(p, B=200, m=50, seed=3)
    c = bootstrap_scaling(p, B=200, m=50, seed=4)
    assert np.array_equal(a.replicates, b.replicates)
    assert a == b and a.to_json() == b.to_json()
    assert a.estimate_mean != c.estimate_mean
    assert a.estimate_sd > 0 and a.n_failed == 0
    import jsonschema
    jsonschema.validate(a.to_json(), BOOTSTRAP)


def test_bootstrap_replicate_matches_manual_refit():
    rng = np.random.default_rng(2)
    counts = rng.poisson(np.logspace(0, 2, 5)[:, None], size=(5, 300))
    p = panel(counts)
    res = bootstrap_scaling(p, B=5, m=40, seed=9)
    for r in range(5):
        idx = replicate_rng(9, r).integers(0, 300, size=40)
        sub = counts[:, idx]
        slope, _ = naive_ols(np.log(sub.mean(axis=1)).tolist(), np.log(sub.var(axis=1)).tolist())
        assert res.replicates[r] == pytest.approx(slope / 2, rel=1e-10)


def test_bootstrap_single_replicate_has_zero_sd():
    rng = np.random.default_rng(3)
    p = panel(rng.poisson(np.logspace(0, 2, 5)[:, None], size=(5, 100)))
    res = bootstrap_scaling(p, B=1, m=50, seed=0)
    assert res.estimate_sd == 0.0 and res.n_replicates == 1


def test_bootstrap_exact_law_centres_on_half():
    p = law_panel(MEANS, lambda mu: int(math.isqrt(mu)), q=400)
    res = bootstrap_scaling(p, B=100, m=100, seed=0)
    assert abs(res.estimate_mean - 0.5) < 0.05


def test_bootstrap_degeneracy_and_arguments():
    # only one pair ever has activity: no replicate can be fitted
    rows = [[0] * 99 + [5], [3, 1] * 50]
    with pytest.raises(BootstrapDegeneracyError):
        bootstrap_scaling(panel(rows), B=50, m=10, seed=0)
    ok = panel([[1, 3] * 10, [2, 9] * 10])
    with pytest.raises(ValueError):
        bootstrap_scaling(ok, B=0)
    with pytest.raises(ValueError):
        bootstrap_scaling(ok, B=10, m=21)


def test_bootstrap_moments_constant_series():
    out = bootstrap_moments([7] * 50, B=100, seed=1)
    assert out["mean"].estimate_mean == 7 and out["mean"].estimate_sd == 0
    assert out["sd"].estimate_mean == 0 and out["sd"].estimate_sd == 0


def test_bootstrap_moments_poisson_standard_error():
    lam, q = 100, 10_000
    x = np.random.default_rng(4).poisson(lam, q)
    out = bootstrap_moments(x, B=300, seed=2)
    expected = math.sqrt(lam / q)
    assert abs(out["mean"].estimate_sd - expected) <= 0.2 * expected
    assert out["sd"].estimate_mean == pytest.approx(math.sqrt(lam), rel=0.05)
    again = bootstrap_moments(x, B=300, seed=2)
    assert again["mean"] == out["mean"]
