"""Mean-field theory of random delayed rate networks: network simulation, moment equations, stationary states, bifurcations and statistical validation."""
from __future__ import annotations

from .errors import (ConfigError, DomainError, MeanFieldError, NoConvergence, NotGradientSystem, NumericalError,
                     NumericalInstability, SimulationDiverged)
from .model import BivariateGaussian, InitialLaw, ModelParams, SigmoidSpec, gauss_expect_S, gauss_expect_SS
from .moments import MomentSolution, solve_moments, stationary_variance_estimate
from .network import NetworkConfig, TrajectoryBundle, empirical_moments, simulate_network, simulate_replicas
from .stationary import (classify_local_phase, potential_phi, scs_transition, shoot_stationary_variance,
                         stationary_mean_roots, stationary_states)
from .bifurcation import (BifurcationCurve, leading_root, model_coupling, pitchfork_locus, turing_hopf_curve,
                          mean_oscillation)
from .stats import RegimeLabel, TestReport, chi2_independence, ks_gaussian, regime_classify

__all__ = [
    "BifurcationCurve", "BivariateGaussian", "ConfigError", "DomainError", "InitialLaw", "MeanFieldError",
    "ModelParams", "MomentSolution", "NetworkConfig", "NoConvergence", "NotGradientSystem", "NumericalError",
    "NumericalInstability", "RegimeLabel", "SigmoidSpec", "SimulationDiverged", "TestReport", "TrajectoryBundle",
    "chi2_independence", "classify_local_phase", "empirical_moments", "gauss_expect_S", "gauss_expect_SS",
    "ks_gaussian", "leading_root", "mean_oscillation", "model_coupling", "pitchfork_locus", "potential_phi",
    "regime_classify", "scs_transition", "shoot_stationary_variance", "simulate_network", "simulate_replicas",
    "solve_moments", "stationary_mean_roots", "stationary_states", "stationary_variance_estimate",
    "turing_hopf_curve",
]
