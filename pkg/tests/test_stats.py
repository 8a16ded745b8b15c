from __future__ import annotations

import numpy as np
import pytest

from meanfield.errors import DomainError
from meanfield.model import ModelParams
from meanfield.network import NetworkConfig, TrajectoryBundle
from meanfield.stats import Regime, TestReport, chi2_independence, ks_gaussian, regime_classify


def synthetic_bundle(paths: np.ndarray, dt: float, lam: float = 0.0) -> TrajectoryBundle:
    n_t, n = paths.shape
    p = ModelParams.create(theta=1.0, lam=lam)
    cfg = NetworkConfig(p, (n,), dt, dt * (n_t - 1))
    return TrajectoryBundle(np.arange(n_t) * dt, paths, np.zeros(n, dtype=np.int64), cfg)


class TestKS:
    def test_calibrated_under_null(self, rng):
        rejects = sum(not ks_gaussian(rng.normal(1.0, 2.0, 500), 1.0, 4.0, alpha=0.05).verdict for _ in range(400))
        assert 0.02 <= rejects / 400 <= 0.09

    def test_detects_shift(self, rng):
        rep = ks_gaussian(rng.normal(0.5, 1.0, 2000), 0.0, 1.0)
        assert rep.p_value < 1e-6 and not rep.verdict

    def test_statistic_matches_scipy(self, rng):
        from scipy import stats

        x = rng.normal(size=300)
        ref = stats.kstest(x, "norm", method="asymp")
        rep = ks_gaussian(x, 0.0, 1.0)
        assert rep.statistic == pytest.approx(ref.statistic, abs=1e-14)
        assert rep.p_value == pytest.approx(ref.pvalue, rel=1e-6)

    def test_constant_samples_fail(self):
        assert ks_gaussian(np.zeros(100), 0.0, 1.0).p_value < 1e-10

    def test_rejects(self, rng):
        with pytest.raises(DomainError):
            ks_gaussian(rng.normal(size=10), 0.0, 1.0)
        with pytest.raises(DomainError):
            ks_gaussian(rng.normal(size=100), 0.0, 0.0)


class TestChi2:
    def test_calibrated_under_null(self, rng):
        rejects = sum(not chi2_independence(rng.normal(size=500), rng.normal(size=500), alpha=0.05).verdict
                      for _ in range(400))
        assert 0.02 <= rejects / 400 <= 0.09

    def test_identical_variables(self, rng):
        x = rng.normal(size=500)
        assert chi2_independence(x, x).p_value < 1e-10

    def test_correlated_detected(self, rng):
        x = rng.normal(size=2000)
        y = 0.3 * x + rng.normal(size=2000)
        assert not chi2_independence(x, y).verdict

    def test_sparse_bins(self, rng):
        with pytest.raises(DomainError):
            chi2_independence(rng.normal(size=100), rng.normal(size=100), bins=5)

    def test_shape_checks(self, rng):
        with pytest.raises(DomainError):
            chi2_independence(rng.normal(size=200), rng.normal(size=199))
        with pytest.raises(DomainError):
            chi2_independence(rng.normal(size=200), rng.normal(size=200), bins=2)


class TestReportRecord:
    def test_json(self):
        rep = TestReport("ks_gaussian", 0.1, 0.5, 100)
        assert rep.to_json()["verdict"] == "pass"
        assert TestReport("x", 0.0, 0.001, 10).to_json()["verdict"] == "fail"

    def test_p_value_range(self):
        with pytest.raises(DomainError):
            TestReport("x", 0.0, 1.5, 10)


class TestRegimeClassify:
    dt = 0.05

    def times(self):
        return np.arange(0, 50 + self.dt / 2, self.dt)

    def test_constant_is_stationary(self, rng):
        t = self.times()
        paths = np.broadcast_to(rng.normal(size=40), (t.size, 40)).copy()
        assert regime_classify(synthetic_bundle(paths, self.dt), 0, (20.0, 50.0)).label is Regime.STATIONARY

    def test_common_sine_is_oscillatory(self, rng):
        t = self.times()
        # 10 cycles over the 601-sample window puts the tone on a periodogram bin
        w = 2 * np.pi * 10 / (601 * self.dt)
        paths = np.sin(w * t)[:, None] + 0.1 * rng.normal(size=40)[None, :]
        lab = regime_classify(synthetic_bundle(paths, self.dt), 0, (20.0, 50.0))
        assert lab.label is Regime.OSCILLATORY
        assert lab.peak_frequency == pytest.approx(w, rel=1e-12)
        assert lab.swing == pytest.approx(2.0, rel=0.02)

    def test_incoherent_fluctuations_are_chaotic(self, rng):
        t = self.times()
        phases = rng.uniform(0, 2 * np.pi, 400)
        freqs = rng.uniform(0.5, 3.0, 400)
        paths = np.sin(freqs[None, :] * t[:, None] + phases[None, :])
        assert regime_classify(synthetic_bundle(paths, self.dt), 0, (20.0, 50.0)).label is Regime.CHAOTIC

    def test_slow_drift_is_not_oscillatory(self):
        t = self.times()
        paths = np.broadcast_to((0.02 * t)[:, None], (t.size, 10)).copy()
        assert regime_classify(synthetic_bundle(paths, self.dt), 0, (20.0, 50.0)).label is Regime.STATIONARY

    def test_noise_floor_is_subtracted(self, rng):
        # temporal variance theta lam^2 / 2 = 0.125 comes from additive noise only
        t = self.times()
        paths = rng.normal(0, np.sqrt(0.125), size=(t.size, 200))
        lab = regime_classify(synthetic_bundle(paths, self.dt, lam=0.5), 0, (20.0, 50.0))
        assert lab.label is Regime.STATIONARY and lab.dispersion < 0.01

    @pytest.mark.parametrize("window", [(5.0, 40.0), (20.0, 35.0), (20.0, 60.0)])
    def test_window_checks(self, window):
        t = self.times()
        with pytest.raises(DomainError):
            regime_classify(synthetic_bundle(np.zeros((t.size, 3)), self.dt), 0, window)

    def test_population_check(self):
        t = self.times()
        with pytest.raises(DomainError):
            regime_classify(synthetic_bundle(np.zeros((t.size, 3)), self.dt), 1, (20.0, 50.0))
