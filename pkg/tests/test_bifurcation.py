from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import lambertw

from meanfield.bifurcation import (ERF_SLOPE_SCALE, BifurcationCurve, effective_gain, leading_root, leading_root_a,
                                   mean_oscillation, model_coupling, pitchfork_locus, pitchfork_sweep,
                                   turing_hopf_curve, turing_hopf_from_a, turing_hopf_sweep)
from meanfield.errors import DomainError


def lambert_root(a: float, tau: float) -> complex:
    """Principal-branch root of xi + 1 = a exp(-xi tau)."""
    return complex(lambertw(a * tau * math.exp(tau), 0) / tau - 1.0)


class TestPitchfork:
    def test_examples(self):
        assert pitchfork_locus(1.0, 0.0) == pytest.approx(1.0)
        assert pitchfork_locus(2.0, 0.5) == pytest.approx(math.sqrt(0.75))

    def test_rejects(self):
        with pytest.raises(DomainError):
            pitchfork_locus(0.0, 0.0)
        with pytest.raises(DomainError):
            pitchfork_locus(1.0, -0.1)

    def test_sweep_is_increasing(self):
        curve = pitchfork_sweep(3.0, [1.0, 0.0, 0.5])
        arr = curve.as_array()
        np.testing.assert_array_equal(arr[:, 0], [0.0, 0.5, 1.0])
        assert np.all(np.diff(arr[:, 1]) > 0)

    def test_model_coupling(self):
        assert model_coupling(1.0) == ERF_SLOPE_SCALE == pytest.approx(2.5066282746310002)


class TestTuringHopf:
    def test_subcritical_is_none(self):
        assert turing_hopf_curve(0.5, 1.0, 0.0) is None
        assert turing_hopf_from_a(-1.0) is None

    def test_delay_figure_parameters(self):
        # J = -2, g = 3, no noise: a = -6
        tau, w = turing_hopf_curve(-2.0, 3.0, 0.0)
        assert w == pytest.approx(math.sqrt(35))
        assert tau == pytest.approx(math.acos(-1 / 6) / math.sqrt(35), rel=1e-14)

    def test_noise_raises_critical_delay(self):
        curve = turing_hopf_sweep(-2.0, 3.0, np.linspace(0, 3, 31))
        arr = curve.as_array()
        assert np.all(np.diff(arr[:, 1]) > 0) and np.all(np.diff(arr[:, 2]) < 0)

    def test_effective_gain(self):
        assert effective_gain(-2.0, 3.0, 0.5) == pytest.approx(-6 / math.sqrt(5.5))
        with pytest.raises(DomainError):
            effective_gain(1.0, 1.0, -0.1)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(-5.0, -1.05))
    def test_purely_imaginary_root_at_critical_delay(self, a):
        tau, w = turing_hopf_from_a(a)
        xi = leading_root_a(a, tau)
        assert abs(xi.real) <= 1e-6
        assert xi.imag == pytest.approx(w, rel=1e-8)

    def test_real_instability_for_positive_feedback(self):
        # xi + 1 = a exp(-xi tau) has a positive real root for every tau when a > 1
        for a in (1.2, 2.0, 4.5):
            tau, _ = turing_hopf_from_a(a)
            for t in (0.5 * tau, tau, 2 * tau):
                xi = leading_root_a(a, t)
                assert xi.imag == pytest.approx(0.0, abs=1e-9) and xi.real > 0


class TestLeadingRoot:
    def test_no_delay(self):
        assert leading_root_a(0.3, 0.0) == complex(-0.7, 0.0)

    @pytest.mark.parametrize("a,tau", [(-3.0, 0.2), (-3.0, 0.8), (-1.5, 2.0), (2.0, 0.4), (0.5, 1.0), (-0.5, 0.3)])
    def test_matches_lambert_w(self, a, tau):
        ref = lambert_root(a, tau)
        xi = leading_root_a(a, tau)
        assert xi.real == pytest.approx(ref.real, abs=1e-10)
        assert xi.imag == pytest.approx(abs(ref.imag), abs=1e-9)

    def test_sign_change_across_critical_delay(self):
        tau, _ = turing_hopf_curve(-2.0, 3.0, 0.0)
        assert leading_root(-2.0, 3.0, 0.0, 0.9 * tau).real < 0 < leading_root(-2.0, 3.0, 0.0, 1.1 * tau).real

    def test_negative_delay(self):
        with pytest.raises(DomainError):
            leading_root_a(-2.0, -0.1)


class TestCurve:
    def test_validation(self):
        with pytest.raises(DomainError):
            BifurcationCurve("saddle", "x", ())
        with pytest.raises(DomainError):
            BifurcationCurve("pitchfork", "Gamma", ((1.0, 1.0), (0.0, 1.0)))
        with pytest.raises(DomainError):
            BifurcationCurve("turing-hopf", "lambda", ((0.0, -1.0, 1.0),))

    def test_csv(self, tmp_path):
        from meanfield import io

        turing_hopf_sweep(-2.0, 3.0, [0.0, 1.0]).to_csv(tmp_path / "th.csv")
        header, data = io.read_csv(tmp_path / "th.csv")
        assert header == ["lambda", "tau_c", "omega"] and data.shape == (2, 3)


class TestMeanOscillation:
    def test_sustained_sine(self):
        t = np.arange(0, 40, 0.01)
        rep = mean_oscillation(t, 0.3 * np.sin(2.5 * t), transient=10.0)
        assert rep.sustained
        assert rep.frequency == pytest.approx(2.5, rel=0.05)
        assert rep.amplitude_late == pytest.approx(0.6, rel=1e-3)

    def test_damped_sine(self):
        t = np.arange(0, 40, 0.01)
        assert not mean_oscillation(t, np.exp(-0.3 * t) * np.sin(2.5 * t), transient=5.0).sustained

    def test_too_short(self):
        t = np.arange(0, 1, 0.1)
        with pytest.raises(DomainError):
            mean_oscillation(t, t, transient=0.8)
