from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import ndtr

from meanfield.bifurcation import model_coupling
from meanfield.errors import DomainError, NotGradientSystem
from meanfield.model import ModelParams, delta_kernel
from meanfield.stationary import (Regime, classify_local_phase, potential_phi, scs_integrate, shoot_stationary_variance,
                                  stationary_mean_roots, stationary_states)

ROOT_2PI = math.sqrt(2 * math.pi)


def one_pop(sigma=0.0, jbar=0.0, gain=ROOT_2PI, theta=1.0, family="centered-erf"):
    return ModelParams.create(theta=theta, sigma=sigma, jbar=jbar, family=family, gain=gain)


def energy_oracle(product: float) -> float:
    """c0 with zero potential energy for S'(0) = 1, theta = 1 and sigma = product, from the arcsin law."""
    g2 = 2 * math.pi

    def phi(c0):
        psi, _ = quad(lambda c: math.asin(g2 * c / (1 + g2 * c0)) / (2 * math.pi), 0, c0, epsabs=1e-14, epsrel=1e-13)
        return -0.5 * c0 * c0 + product ** 2 * psi

    return brentq(phi, 1e-6, 100.0, xtol=1e-14, rtol=1e-13)


class TestMeanRoots:
    def test_single_root_below_pitchfork(self):
        roots = stationary_mean_roots(one_pop(jbar=model_coupling(0.5), gain=1.0), 0.0)
        assert len(roots) == 1 and abs(roots[0][0]) < 1e-10

    def test_three_symmetric_roots_above_pitchfork(self):
        p = one_pop(jbar=model_coupling(2.0), gain=1.0)
        roots = sorted(float(r[0]) for r in stationary_mean_roots(p, 0.0))
        J = model_coupling(2.0)
        star = brentq(lambda m: -m + J * (ndtr(m) - 0.5), 0.1, 10.0, xtol=1e-14)
        np.testing.assert_allclose(roots, [-star, 0.0, star], atol=1e-9)

    @pytest.mark.parametrize("J,c0", [(0.3, 0.0), (3.0, 0.5), (-2.0, 2.0)])
    def test_zero_is_always_a_root(self, J, c0):
        assert any(abs(r[0]) < 1e-10 for r in stationary_mean_roots(one_pop(jbar=J), c0))

    def test_two_population_residuals(self):
        p = ModelParams.create(theta=[1.0, 1.0], jbar=[[15.0, -12.0], [16.0, -5.0]], gain=3.0)
        c0 = np.array([0.3, 0.2])
        roots = stationary_mean_roots(p, c0)
        assert roots
        for r in roots:
            f = ndtr(3.0 * r / np.sqrt(1 + 9 * c0))
            np.testing.assert_allclose(-r + p.jbar @ f, 0.0, atol=1e-8)

    def test_negative_variance(self):
        with pytest.raises(DomainError):
            stationary_mean_roots(one_pop(), -1.0)


class TestSCSIntegrate:
    def test_no_disorder_is_cosh(self):
        prof = scs_integrate(one_pop(), 0.0, 1.0, zeta_max=2.5, dzeta=0.01)
        np.testing.assert_allclose(prof.C[:, 0], np.cosh(prof.zeta), rtol=1e-9)
        assert not prof.diverged

    def test_blow_up_flag(self):
        prof = scs_integrate(one_pop(), 0.0, 1.0, zeta_max=5.0)
        assert prof.diverged and prof.zeta[-1] == pytest.approx(math.acosh(10.0), abs=0.02)

    def test_zero_is_equilibrium(self):
        prof = scs_integrate(one_pop(sigma=2.0), 0.0, 0.0, zeta_max=3.0)
        assert np.all(prof.C == 0)

    def test_shot_profile_decays_without_crossing(self):
        p = one_pop(sigma=2.0)
        c0 = shoot_stationary_variance(p, 0.0).c0
        # the approach to 0 is slow here: the linear rate at C = 0 is about 0.24
        prof = scs_integrate(p, 0.0, c0, zeta_max=30.0, dzeta=0.01)
        C = prof.C[:, 0]
        assert not prof.diverged
        assert np.all(np.diff(C) <= 1e-12)
        assert C.min() > -1e-3 * c0
        assert C[-1] < 0.01 * c0


class TestShooting:
    def test_below_threshold(self):
        res = shoot_stationary_variance(one_pop(sigma=0.5), 0.0)
        assert res.c0 == 0.0 and res.regime is Regime.STATIONARY

    @pytest.mark.parametrize("product", [2.0, 3.0])
    def test_above_threshold_matches_energy_oracle(self, product):
        res = shoot_stationary_variance(one_pop(sigma=product), 0.0)
        assert res.regime is Regime.CHAOTIC
        assert res.c0 == pytest.approx(energy_oracle(product), rel=1e-5)

    def test_variance_grows_with_disorder(self):
        vals = [shoot_stationary_variance(one_pop(sigma=s), 0.0).c0 for s in (1.2, 1.5, 2.0)]
        assert vals[0] > 0 and np.all(np.diff(vals) > 0)

    def test_gaussian_cdf_frozen_variance(self):
        # S = Phi(g x) has E[S^2] > 0 at any mean, so the stationary branch is the frozen variance
        p = one_pop(sigma=0.5, family="gaussian-cdf")
        res = shoot_stationary_variance(p, 0.0)
        assert res.regime is Regime.STATIONARY
        E2 = float(delta_kernel(p.sigmoids[0][0], 0.0, 0.0, res.c0, res.c0, res.c0))
        assert res.c0 == pytest.approx(0.25 * E2, rel=1e-8)

    def test_off_diagonal_disorder_rejected(self):
        p = ModelParams.create(theta=[1.0, 1.0], sigma=[[1.0, 0.5], [0.0, 1.0]], family="centered-erf")
        with pytest.raises(NotGradientSystem):
            shoot_stationary_variance(p, [0.0, 0.0])

    def test_diagonal_populations_shot_independently(self):
        p = ModelParams.create(theta=[1.0, 1.0], sigma=[[3.0, 0.0], [0.0, 0.5]], jbar=[[0.0, 1.0], [1.0, 0.0]],
                               family="centered-erf", gain=ROOT_2PI)
        r1, r2 = shoot_stationary_variance(p, [0.0, 0.0])
        assert r1.regime is Regime.CHAOTIC and r2.regime is Regime.STATIONARY
        assert r1.c0 == pytest.approx(shoot_stationary_variance(one_pop(sigma=3.0), 0.0).c0, rel=1e-9)


class TestPotential:
    def test_no_disorder_quadratic(self):
        C = np.linspace(0, 2, 21)
        pot = potential_phi(one_pop(), 0.0, 1.0, C)
        np.testing.assert_allclose(pot.phi, -C ** 2 / 2, atol=1e-15)
        assert pot.stationary_points().size == 0

    def test_convex_below_double_well_above(self):
        below = potential_phi(one_pop(sigma=0.5), 0.0, 1.0, np.linspace(0, 1.0, 601))
        assert below.stationary_points().size == 0
        p = one_pop(sigma=2.0)
        c0 = shoot_stationary_variance(p, 0.0).c0
        above = potential_phi(p, 0.0, c0, np.linspace(0, c0, 601))
        pts = above.stationary_points()
        assert pts.size == 1 and 0 < pts[0] < c0

    def test_gradient_matches_force(self):
        p = one_pop(sigma=2.0)
        C = np.linspace(0, 1.5, 1501)
        pot = potential_phi(p, 0.0, 1.5, C)
        slope = np.gradient(pot.phi, C)
        delta = delta_kernel(p.sigmoids[0][0], 0.0, 0.0, 1.5, C, 1.5)
        force = C - 4.0 * delta
        # Delta has a square-root kink at C = c0, so the last few points are left out
        np.testing.assert_allclose(slope[1:-15], -force[1:-15], atol=1e-6)

    def test_energy_zero_at_shot_variance(self):
        p = one_pop(sigma=3.0)
        c0 = shoot_stationary_variance(p, 0.0).c0
        pot = potential_phi(p, 0.0, c0, np.linspace(0, c0, 20001))
        assert abs(pot.phi[-1]) < 1e-6 * c0 * c0

    def test_grid_must_start_at_zero(self):
        with pytest.raises(DomainError):
            potential_phi(one_pop(sigma=1.0), 0.0, 1.0, np.linspace(0.1, 1, 5))

    def test_off_diagonal_rejected(self):
        p = ModelParams.create(theta=[1.0, 1.0], sigma=[[1.0, 0.5], [0.0, 1.0]])
        with pytest.raises(NotGradientSystem):
            potential_phi(p, 0.0, 1.0, np.linspace(0, 1, 5))


class TestLocalPhase:
    def test_examples(self):
        assert classify_local_phase(3.0, 2.0 / 3.0, 1.0) is Regime.CHAOTIC
        assert classify_local_phase(0.5, 0.6, 1.0) is Regime.STATIONARY
        assert classify_local_phase(2.0, 0.5, 1.0) is Regime.STATIONARY


class TestStationaryStates:
    def test_zero_mean_chaotic_state(self):
        states = stationary_states(one_pop(sigma=2.0, jbar=0.5))
        assert len(states) == 1
        s = states[0]
        assert abs(s.mean[0]) < 1e-9 and s.regime == (Regime.CHAOTIC,)
        assert s.c0[0] == pytest.approx(energy_oracle(2.0), rel=1e-5)
