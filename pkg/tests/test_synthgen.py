import io
import math

import numpy as np
import pytest

from fxscaling.errors import GeometryError, SpecError
from fxscaling.panel import bin_counts
from fxscaling.scaling import fit_scaling
from fxscaling.synthgen import (GenSpec, analytic_moments, gen_factor, gen_panel, gen_tick_stream,
                                panels_to_stream)
from fxscaling.tickdata import Interval, OrderPolicy, parse_tick_file, write_tick_csv
from oracles import naive_ols


def test_factor_moments():
    spec = GenSpec(("EUR/USD",), (1.0,), Q=200_000, coupling_v=0.25, factor_memory=0.8, seed=1)
    s = gen_factor(spec)
    assert s.mean() == pytest.approx(1.0, abs=0.02)
    assert s.var() == pytest.approx(0.25, rel=0.1)
    z = np.log(s)
    z = z - z.mean()
    lag1 = np.dot(z[:-1], z[1:]) / np.dot(z, z)
    assert lag1 == pytest.approx(0.8, abs=0.02)
    assert np.array_equal(gen_factor(GenSpec(("EUR/USD",), (1.0,), Q=10)), np.ones(10))


def test_coupled_variance_matches_closed_form():
    lam, v = 1000.0, 0.25
    spec = GenSpec(("EUR/USD",), (lam,), Q=10_080, coupling_v=v, seed=3)
    p, _ = gen_panel(spec)
    expected = lam + v * lam ** 2  # 251000
    assert p.counts[0].var() == pytest.approx(expected, rel=0.05)
    assert p.counts[0].mean() == pytest.approx(lam, rel=0.02)


def test_analytic_moments_hand_values():
    spec = GenSpec(("EUR/USD", "USD/JPY"), (100.0, 100.0), Q=10, coupling_v=0.25)
    am = analytic_moments(spec)
    assert am.cov[0, 1] == pytest.approx(2500.0)
    assert am.var.tolist() == [2600.0, 2600.0]
    assert am.corr[0, 1] == pytest.approx(2500 / 2600)
    assert am.global_corr == pytest.approx(0.9615384615, rel=1e-9)
    with pytest.raises(NotImplementedError):
        analytic_moments(GenSpec(("EUR/USD",), (1.0,), Q=10, factor_memory=0.5))


def test_implied_alpha_against_two_line_regression():
    spec = GenSpec.poisson(7, 10, 1e4, 100, coupling_v=0.1)
    am = analytic_moments(spec)
    lam = np.asarray(spec.rates)
    slope, _ = naive_ols(np.log(lam).tolist(), np.log(lam + 0.1 * lam ** 2).tolist())
    assert am.implied_alpha == pytest.approx(slope / 2, rel=1e-12)
    assert 0.5 < am.implied_alpha < 1.0
    assert analytic_moments(GenSpec.poisson(5, 1, 100, 10)).implied_alpha == pytest.approx(0.5)


def test_panels_are_deterministic_and_seeded():
    spec = GenSpec.poisson(4, 1, 50, 500, coupling_v=0.1, factor_memory=0.5, seed=7)
    p1, d1 = gen_panel(spec)
    p2, d2 = gen_panel(spec)
    assert p1 == p2 and d1 == d2
    p3, _ = gen_panel(GenSpec.poisson(4, 1, 50, 500, coupling_v=0.1, factor_memory=0.5, seed=8))
    assert p3 != p1


def test_trade_thinning():
    spec = GenSpec.poisson(3, 20, 80, 5000, trade_fraction=0.3, seed=2)
    p, d = gen_panel(spec)
    assert np.all(d.counts <= p.counts)
    ratio = d.counts.sum() / p.counts.sum()
    assert ratio == pytest.approx(0.3, abs=0.01)
    p0, d0 = gen_panel(GenSpec.poisson(3, 20, 80, 50, trade_fraction=0.0))
    assert not d0.counts.any()


def test_tick_roundtrip_recovers_panels():
    spec = GenSpec.poisson(5, 0.5, 20, 300, coupling_v=0.1, factor_memory=0.7, seed=4)
    p, d = gen_panel(spec)
    stream = gen_tick_stream(spec)
    data = write_tick_csv(stream)
    parsed = parse_tick_file(io.BytesIO(data), OrderPolicy.STRICT, span=spec.window)
    assert bin_counts(parsed, "Q", 1, spec.window, spec.pairs) == p
    assert bin_counts(parsed, "T", 1, spec.window, spec.pairs) == d
    assert write_tick_csv(gen_tick_stream(spec)) == data


def test_tick_stream_is_sorted_and_inside_window():
    spec = GenSpec.poisson(3, 1, 10, 100, seed=5)
    s = gen_tick_stream(spec)
    assert np.all(np.diff(s.timestamps) >= 0)
    assert s.timestamps.min() >= spec.window.start and s.timestamps.max() < spec.window.end


def test_coarser_generation_dt():
    spec = GenSpec.poisson(3, 5, 50, 20, seed=6, dt=5)
    assert spec.window.minutes == 100
    w = Interval.of("2008-08-10T00:00:00Z", "2008-08-10T01:40:00Z")
    s = gen_tick_stream(spec, window=w)
    assert s.span == w
    with pytest.raises(GeometryError):
        gen_tick_stream(spec, window=Interval.of("2008-08-10T00:00:00Z", "2008-08-10T01:00:00Z"))


def test_tiny_rates_reach_exclusion_path():
    spec = GenSpec.poisson(6, 1e-4, 100, 200, seed=1)
    p, _ = gen_panel(spec)
    fit = fit_scaling(p)
    assert fit.excluded  # the 1e-4 pair has no events
    assert fit.n_used < 6


def test_spec_validation():
    with pytest.raises(SpecError):
        GenSpec(("EUR/USD",), (1.0, 2.0), Q=10)
    with pytest.raises(SpecError):
        GenSpec(("EURUSD",), (1.0,), Q=10)
    with pytest.raises(SpecError):
        GenSpec(("EUR/USD",), (0.0,), Q=10)
    with pytest.raises(SpecError):
        GenSpec(("EUR/USD",), (1.0,), Q=10, factor_memory=1.0)
    with pytest.raises(SpecError):
        GenSpec(("EUR/USD",), (1.0,), Q=10, trade_fraction=1.5)
    with pytest.raises(SpecError):
        GenSpec(("EUR/USD",), (1.0,), Q=1)


def test_spec_from_json_conveniences(tmp_path):
    spec = GenSpec.from_json({"pairs": 4, "rates": {"logspace": [1, 1000]}, "weeks": 1,
                              "coupling_v": 0.2, "seed": 3})
    assert spec.Q == 10_080 and len(spec.pairs) == 4
    assert spec.rates[0] == pytest.approx(1) and spec.rates[-1] == pytest.approx(1000)
    path = tmp_path / "spec.json"
    path.write_text('{"pairs": ["EUR/USD", "USD/JPY"], "rates": 3, "Q": 60}')
    assert GenSpec.from_json(path).rates == (3.0, 3.0)
    with pytest.raises(SpecError):
        GenSpec.from_json({"pairs": 2, "rates": 1, "Q": 10, "bogus": 1})


def test_empty_panels_give_empty_stream():
    spec = GenSpec(("EUR/USD",), (1e-9,), Q=10)
    p, d = gen_panel(spec)
    assert len(panels_to_stream(p, d)) == 0
    assert math.isfinite(spec.log_sigma2)


def test_sample_moments_within_bands_across_seeds():
    q = 5000
    for seed in range(5):
        spec = GenSpec(("EUR/USD", "USD/JPY", "GBP/USD"), (2.0, 20.0, 200.0), Q=q,
                       coupling_v=0.05, seed=seed)
        p, _ = gen_panel(spec)
        am = analytic_moments(spec)
        band = 4 / math.sqrt(q)
        x = p.counts.astype(float)
        assert np.all(np.abs(x.mean(axis=1) / am.mean - 1) <= band)
        # the variance of a variance estimate is wider; allow the band on its square root
        assert np.all(np.abs(np.sqrt(x.var(axis=1) / am.var) - 1) <= band)


def test_oversized_coupling_is_a_spec_error():
    with pytest.raises(SpecError):
        GenSpec(("EUR/USD",), (1.0,), Q=1000, coupling_v=1e300)
    with pytest.raises(SpecError):
        GenSpec(("EUR/USD",), (1.0,), Q=10, coupling_v=200)
    GenSpec(("EUR/USD",), (1.0,), Q=10, coupling_v=50)


@pytest.mark.slow
def test_million_event_roundtrip():
    spec = GenSpec.poisson(10, 1, 30, 10_080, coupling_v=0.05, factor_memory=0.5, seed=9)
    p, d = gen_panel(spec)
    assert p.counts.sum() + d.counts.sum() >= 1_000_000
    data = write_tick_csv(panels_to_stream(p, d, spec.seed))
    parsed = parse_tick_file(io.BytesIO(data), span=spec.window)
    assert bin_counts(parsed, "Q", 1, spec.window, spec.pairs) == p
    assert bin_counts(parsed, "T", 1, spec.window, spec.pairs) == d
