from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.special import ndtr

from meanfield import io
from meanfield.errors import ConfigError, DomainError
from meanfield.model import InitialLaw, ModelParams
from meanfield.moments import solve_moments, stationary_variance_estimate

from conftest import wilson_cowan


def ou_variance(t, theta, lam, v0):
    e = np.exp(-2 * t / theta)
    return e * v0 + 0.5 * theta * lam * lam * (1 - e)


def gram_ok(C: np.ndarray, rng, draws=20) -> bool:
    n = C.shape[0]
    for _ in range(draws):
        idx = rng.choice(n, size=min(6, n), replace=False)
        G = C[np.ix_(idx, idx)]
        if np.linalg.eigvalsh(G).min() < -1e-8 * np.trace(G):
            return False
    return True


class TestNoDisorder:
    def test_variance_closed_form(self):
        p = ModelParams.create(theta=[1.0, 0.5], lam=[0.5, 1.2], jbar=[[1.0, -2.0], [0.5, 0.0]],
                               init=InitialLaw.gaussian([0.3, -0.1], [0.2, 0.0]))
        for store in ("diagonal", "full"):
            sol = solve_moments(p, 1.0, 1e-3, store=store)
            for a in range(2):
                ref = ou_variance(sol.times, p.theta[a], p.lam[a], p.init.var[a])
                assert np.max(np.abs(sol.var[:, a] - ref)) <= 1e-6

    def test_noiseless_mean_and_covariance(self):
        p = ModelParams.create(theta=1.0, jbar=1.5, family="centered-erf", gain=2.0,
                               init=InitialLaw.gaussian([0.4], [0.5]))
        sol = solve_moments(p, 2.0, 0.005)
        t = sol.times
        np.testing.assert_allclose(sol.cov_matrix(0), 0.5 * np.exp(-(t[:, None] + t[None, :])), atol=1e-14)

        # the mean solves mu' = -mu + J E[S(X)], X ~ N(mu, 0.5 e^{-2t})
        def rhs(s, m):
            v = 0.5 * math.exp(-2 * s)
            return -m + 1.5 * (ndtr(2.0 * m / math.sqrt(1 + 4 * v)) - 0.5)

        ref = solve_ivp(rhs, (0, 2), [0.4], t_eval=t, rtol=1e-11, atol=1e-12).y[0]
        assert np.max(np.abs(sol.mean[:, 0] - ref)) < 1e-5

    def test_deterministic_init_zero_covariance(self):
        p = ModelParams.create(theta=1.0, jbar=-1.0, init=InitialLaw.constant([1.0]))
        sol = solve_moments(p, 1.0, 0.01)
        assert np.all(sol.cov_matrix(0) == 0)

    def test_diagonal_storage_requires_no_disorder(self):
        with pytest.raises(ConfigError):
            solve_moments(ModelParams.create(theta=1.0, sigma=1.0), 1.0, 0.1, store="diagonal")


class TestWithDisorder:
    def test_second_order_convergence(self):
        p = wilson_cowan()
        ref = solve_moments(p, 1.0, 0.0025)
        errs = []
        for dt in (0.04, 0.02, 0.01):
            s = solve_moments(p, 1.0, dt)
            k = int(round(dt / 0.0025))
            errs.append(max(np.max(np.abs(s.mean - ref.mean[::k])), np.max(np.abs(s.var - ref.var[::k]))))
        ratios = [errs[0] / errs[1], errs[1] / errs[2]]
        assert min(ratios) >= 1.5

    def test_invariants_with_delay(self, rng):
        p = ModelParams.create(theta=[1.0, 0.7], lam=[0.3, 0.0], jbar=[[2.0, -1.0], [1.0, 0.5]],
                               sigma=[[1.5, 0.5], [0.8, 0.0]], tau=[[0.1, 0.0], [0.2, 0.3]], family="centered-erf",
                               gain=2.0, init=InitialLaw.gaussian([0.5, -0.5], [0.3, 0.1]))
        sol = solve_moments(p, 2.0, 0.02)
        for a in range(2):
            C = sol.cov_matrix(a)
            np.testing.assert_array_equal(C, C.T)
            d = np.sqrt(np.clip(np.diag(C), 0, None))
            assert np.all(np.abs(C) <= np.outer(d, d) + 1e-10)
            assert gram_ok(C, rng)
            np.testing.assert_array_equal(np.diag(C), sol.var[:, a])

    def test_scs_disorder_drives_variance(self):
        # past the transition (sigma S'(0) theta = 3) a small initial variance grows without noise
        p = ModelParams.create(theta=1.0, sigma=3.0, family="centered-erf", gain=math.sqrt(2 * math.pi),
                               init=InitialLaw.gaussian([0.0], [0.1]))
        sol = solve_moments(p, 10.0, 0.05)
        assert sol.var[-1, 0] > 0.5

    def test_kernels_agree_at_small_slope(self):
        p = ModelParams.create(theta=1.0, lam=0.2, jbar=0.5, sigma=0.8, family="centered-erf", gain=0.7,
                               init=InitialLaw.gaussian([0.2], [0.3]))
        a = solve_moments(p, 2.0, 0.02, kernel="exact")
        b = solve_moments(p, 2.0, 0.02, kernel="quadrature", nodes=48)
        np.testing.assert_allclose(a.var, b.var, atol=1e-9)


class TestStationaryEstimate:
    def test_ou_level(self):
        p = ModelParams.create(theta=1.0, lam=0.5)
        sol = solve_moments(p, 40.0, 0.01, store="diagonal")
        est = stationary_variance_estimate(sol, (20.0, 40.0))
        assert est.values[0] == pytest.approx(0.125, rel=1e-6)
        assert bool(est.converged[0])

    def test_noiseless_zero(self):
        sol = solve_moments(ModelParams.create(theta=1.0), 20.0, 0.1, store="diagonal")
        assert stationary_variance_estimate(sol, (5.0, 20.0)).values[0] == 0.0

    def test_below_threshold_decays(self):
        # sigma S'(0) theta = 0.5
        p = ModelParams.create(theta=1.0, sigma=0.5, family="centered-erf", gain=math.sqrt(2 * math.pi),
                               init=InitialLaw.gaussian([0.0], [1.0]))
        sol = solve_moments(p, 40.0, 0.05)
        assert stationary_variance_estimate(sol, (25.0, 40.0)).values[0] <= 1e-4

    def test_unconverged_flag_and_errors(self):
        sol = solve_moments(ModelParams.create(theta=5.0, lam=1.0), 60.0, 0.1, store="diagonal")
        assert not bool(stationary_variance_estimate(sol, (0.0, 60.0)).converged[0])
        with pytest.raises(DomainError):
            stationary_variance_estimate(sol, (0.0, 10.0))


class TestSolutionIO:
    def test_grid_checks(self):
        p = ModelParams.create(theta=1.0, tau=0.15)
        with pytest.raises(ConfigError):
            solve_moments(p, 1.0, 0.1)
        with pytest.raises(ConfigError):
            solve_moments(ModelParams.create(theta=1.0), 1.05, 0.1)

    def test_history_lookup(self):
        p = ModelParams.create(theta=1.0, tau=0.2, init=InitialLaw.gaussian([0.3], [0.4]))
        sol = solve_moments(p, 1.0, 0.1, store="diagonal")
        assert sol.mean_at(-0.1)[0] == pytest.approx(0.3)
        with pytest.raises(DomainError):
            sol.mean_at(-0.5)
        with pytest.raises(DomainError):
            sol.var_at(0.55)

    def test_csv_and_mfc1_roundtrip(self, tmp_path):
        p = ModelParams.create(theta=1.0, lam=0.4, sigma=0.6, init=InitialLaw.gaussian([0.1], [0.2]))
        sol = solve_moments(p, 1.0, 0.1)
        sol.to_csv(tmp_path / "m.csv")
        header, data = io.read_csv(tmp_path / "m.csv")
        assert header == ["t", "mu_1", "C_1"]
        np.testing.assert_allclose(data[:, 2], sol.var[:, 0], rtol=1e-11)
        sol.save_cov(tmp_path / "c.mfc1")
        raw = (tmp_path / "c.mfc1").read_bytes()
        assert raw[:4] == b"MFC1" and len(raw) == 20 + 8 * 11 * 11
        np.testing.assert_array_equal(io.read_mfc1(tmp_path / "c.mfc1"), sol.cov_matrix(0))
