import math

import numpy as np
import pytest

from focrlb.covariance import build
from focrlb.crlb_engine import bounds_for
from focrlb.fo_signal import FoParams, waveform
from focrlb.monte_carlo import (
    DegenerateFit,
    FoEstimator,
    McConfig,
    estimate_fo,
    generate_ambient,
    min_burn_in,
    run_mc,
    trial_rng,
)
from focrlb.noise_model import RationalFilter, autocovariance


def white_cov(n, sigma2=1.0):
    r = np.zeros(n)
    r[0] = sigma2
    return build(r, n)


class TestGenerateAmbient:
    def test_white_passthrough(self):
        filt = RationalFilter.white(1.0)
        v = generate_ambient(filt, 50, 10, trial_rng(3, 0))
        w = trial_rng(3, 0).standard_normal(60)
        assert np.array_equal(v, w[10:])

    def test_white_scaled(self):
        v = generate_ambient(RationalFilter.white(4.0), 20, 0, trial_rng(3, 0))
        assert np.array_equal(v, 2.0 * trial_rng(3, 0).standard_normal(20))

    def test_ar1_variance(self):
        filt = RationalFilter.ar1(0.9)
        v = generate_ambient(filt, 100_000, min_burn_in(filt), trial_rng(11, 0))
        assert np.var(v) == pytest.approx(1 / (1 - 0.81), rel=0.03)

    def test_deterministic(self, surrogate):
        a = generate_ambient(surrogate, 200, 500, trial_rng(99, 4))
        b = generate_ambient(surrogate, 200, 500, trial_rng(99, 4))
        assert np.array_equal(a, b)

    def test_streams_differ_by_run(self):
        a = trial_rng(1, 0).standard_normal(4)
        b = trial_rng(1, 1).standard_normal(4)
        assert not np.array_equal(a, b)


class TestEstimator:
    def test_noiseless_recovery(self):
        truth = FoParams(0.01, 0.06, math.pi / 6)
        y = waveform(truth, 100)
        p = estimate_fo(y, white_cov(100, 1e-12))
        assert abs(p.amp - truth.amp) < 1e-6
        assert abs(p.f0 - truth.f0) < 1e-6
        assert abs(p.phi - truth.phi) < 1e-6

    def test_noiseless_recovery_colored(self, surrogate):
        truth = FoParams(0.01, 0.06, math.pi / 6)
        cov = build(autocovariance(surrogate, 99), 100)
        p = estimate_fo(waveform(truth, 100), cov)
        assert p.as_array() == pytest.approx(truth.as_array(), abs=1e-8)

    def test_zero_record_is_degenerate(self):
        with pytest.raises(DegenerateFit):
            estimate_fo(np.zeros(64), white_cov(64))

    def test_length_checked(self):
        with pytest.raises(ValueError):
            estimate_fo(np.ones(10), white_cov(64))

    def test_refinement_never_worse(self):
        est = FoEstimator(white_cov(128, 0.1))
        truth = FoParams(1.0, 0.1717, 0.3)
        for k in range(20):
            y = waveform(truth, 128) + math.sqrt(0.1) * trial_rng(5, k).standard_normal(128)
            p = est.estimate(y)
            assert est.residual(p.f0, y) <= est.residual(est.coarse(y), y)

    def test_high_snr_frequency_error(self):
        n, sigma2 = 256, 1e-4
        truth = FoParams(1.0, 0.1234, 0.7)
        cov = white_cov(n, sigma2)
        sd = bounds_for(truth, cov).std_f0
        est = FoEstimator(cov)
        q = waveform(truth, n)
        errs = np.array(
            [est.estimate(q + 0.01 * trial_rng(8, k).standard_normal(n)).f0 - truth.f0 for k in range(500)]
        )
        assert np.mean(np.abs(errs) <= 10 * sd) >= 0.99


class TestRunMc:
    def test_repeatable(self, surrogate, paper_fo):
        cfg = McConfig(2, 77, 100, surrogate, paper_fo)
        a, b = run_mc(cfg), run_mc(cfg)
        assert a == b
        assert np.array_equal(a.estimates, b.estimates)

    def test_independent_of_workers(self, surrogate, paper_fo):
        cfg = McConfig(24, 5, 100, surrogate, paper_fo)
        one, many = run_mc(cfg, jobs=1), run_mc(cfg, jobs=4)
        assert one == many
        assert np.array_equal(one.estimates, many.estimates)

    def test_burn_in_rule(self, surrogate, paper_fo):
        need = min_burn_in(surrogate)
        assert McConfig(1, 0, 100, surrogate, paper_fo).burn_in == need
        with pytest.raises(ValueError, match="burn_in"):
            McConfig(1, 0, 100, surrogate, paper_fo, burn_in=need - 1)

    def test_failures_counted(self, surrogate, paper_fo, monkeypatch):
        real = FoEstimator.estimate
        calls = iter(range(1000))

        def flaky(self, y):
            if next(calls) % 3 == 0:
                raise DegenerateFit("injected")
            return real(self, y)

        monkeypatch.setattr(FoEstimator, "estimate", flaky)
        res = run_mc(McConfig(9, 0, 100, surrogate, paper_fo))
        assert res.runs == 9 and res.failed_runs == 3
        assert np.isnan(res.estimates).any(axis=1).sum() == 3
        assert all(math.isfinite(p.sample_var) for p in res.params)

    def test_high_snr_unbiased(self):
        n = 256
        truth = FoParams(1.0, 0.1234, 0.7)
        res = run_mc(McConfig(400, 31, n, RationalFilter.white(0.01), truth))
        assert res.failed_runs == 0
        assert abs(res.f0.bias) <= 0.1 * math.sqrt(res.f0.crlb_var)
