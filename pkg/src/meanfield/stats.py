"""Statistical checks of the mean-field picture on simulated networks."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import kolmogorov, ndtr
from scipy.stats import chi2 as chi2_dist

from .errors import DomainError
from .network import TrajectoryBundle

MIN_EXPECTED = 5.0


@dataclass(frozen=True)
class TestReport:
    test: str
    statistic: float
    p_value: float
    n: int
    alpha: float = 0.01

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise DomainError(f"p-value {self.p_value} outside [0, 1]")

    @property
    def verdict(self) -> bool:
        return self.p_value > self.alpha

    def to_json(self) -> dict:
        return {"test": self.test, "statistic": self.statistic, "p_value": self.p_value, "n": self.n,
                "verdict": "pass" if self.verdict else "fail", "alpha": self.alpha}


def ks_gaussian(samples, mu: float, var: float, *, alpha: float = 0.01) -> TestReport:
    """One-sample Kolmogorov-Smirnov test against ``N(mu, var)``.

    The p-value is the asymptotic Kolmogorov tail at ``sqrt(n) D``.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if not var > 0:
        raise DomainError("reference variance must be > 0")
    if n < 50:
        raise DomainError(f"need at least 50 samples, got {n}")
    F = ndtr((x - mu) / math.sqrt(var))
    i = np.arange(1, n + 1)
    D = float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))
    p = float(np.clip(kolmogorov(math.sqrt(n) * D), 0.0, 1.0))
    return TestReport("ks_gaussian", D, p, n, alpha)


def _quantile_bins(v: np.ndarray, bins: int) -> np.ndarray:
    """Equiprobable bin of each sample from its (stable) rank."""
    rank = np.empty(v.size, dtype=np.int64)
    rank[np.argsort(v, kind="stable")] = np.arange(v.size)
    return rank * bins // v.size


def chi2_independence(x, y, bins: int = 5, *, alpha: float = 0.01) -> TestReport:
    """Chi-square test of independence on a ``bins x bins`` table of marginal quantile bins."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    n = x.size
    if y.size != n:
        raise DomainError("x and y must have equal length")
    if n < 100:
        raise DomainError(f"need at least 100 pairs, got {n}")
    if bins < 3:
        raise DomainError("need at least 3 bins")
    table = np.zeros((bins, bins))
    np.add.at(table, (_quantile_bins(x, bins), _quantile_bins(y, bins)), 1.0)
    expected = np.outer(table.sum(axis=1), table.sum(axis=0)) / n
    if expected.min() < MIN_EXPECTED:
        raise DomainError(f"expected cell count {expected.min():.2f} < {MIN_EXPECTED}; use fewer bins")
    stat = float(np.sum((table - expected) ** 2 / expected))
    dof = (bins - 1) ** 2
    return TestReport("chi2_independence", stat, float(chi2_dist.sf(stat, dof)), n, alpha)


class Regime(str, enum.Enum):
    STATIONARY = "stationary"
    OSCILLATORY = "oscillatory"
    CHAOTIC = "chaotic"


@dataclass(frozen=True)
class RegimeLabel:
    """Label plus the diagnostics it was derived from.

    ``amplitude`` is the peak-to-peak range of the population mean,
    ``peak_frequency`` the angular frequency of its periodogram peak,
    ``peak_ratio`` that peak over the periodogram median, ``swing`` the
    peak-to-peak size of the sinusoid at the peak, ``dispersion``
    the excess temporal variance of single neurons around the mean and
    ``neuron_range`` their average peak-to-peak range.
    """

    label: Regime
    amplitude: float
    peak_frequency: float
    peak_ratio: float
    swing: float
    dispersion: float
    neuron_range: float


PEAK_FACTOR = 5.0
AMPLITUDE_FRACTION = 0.1
DISPERSION_THRESHOLD = 0.05
MIN_CYCLES = 3


def regime_classify(bundle: TrajectoryBundle, population: int, window: tuple[float, float], *,
                    dispersion_threshold: float = DISPERSION_THRESHOLD) -> RegimeLabel:
    """Stationary, oscillatory or chaotic activity of one population over ``window``.

    Oscillatory: after removing a linear trend, the Hann periodogram of the
    population mean ``m(t)`` peaks at three or more cycles per window, the
    peak exceeds 5 times the periodogram median, and the sinusoid at the
    peak swings (peak to peak) by more than 0.1 of the typical single-neuron
    range, so that neurons move together.  Otherwise chaotic when single
    neurons fluctuate around ``m`` with temporal variance exceeding the
    additive-noise level ``theta lam^2 / 2`` by more than the threshold;
    stationary otherwise.
    """
    p = bundle.config.params
    if not 0 <= population < p.M:
        raise DomainError(f"no population {population}")
    theta = float(p.theta[population])
    t0, t1 = window
    if t0 < 10 * theta - 1e-12:
        raise DomainError(f"window must start after a transient of 10 theta = {10 * theta}")
    if t1 - t0 < 20 * theta - 1e-12:
        raise DomainError(f"window must span at least 20 theta = {20 * theta}")
    if t1 > bundle.times[-1] + 1e-9:
        raise DomainError("window exceeds the recorded horizon")
    sel = (bundle.times >= t0 - 1e-12) & (bundle.times <= t1 + 1e-12)
    x = bundle.population(population)[sel]
    t = bundle.times[sel]
    m = x.mean(axis=1)
    amplitude = float(m.max() - m.min())
    trend = np.polyval(np.polyfit(t - t.mean(), m, 1), t - t.mean())
    win = np.hanning(m.size)
    spec = np.fft.rfft((m - trend) * win)
    power = np.abs(spec) ** 2
    freqs = 2 * math.pi * np.fft.rfftfreq(m.size, float(t[1] - t[0]))
    body = power[1:]
    k = int(np.argmax(body))
    med = float(np.median(body))
    peak_ratio = float(body[k] / med) if med > 0 else (math.inf if body[k] > 0 else 0.0)
    # a sinusoid of amplitude A gives |spec| = A sum(win) / 2 at its bin
    swing = 4.0 * float(np.abs(spec[k + 1])) / float(win.sum())
    neuron_range = float(np.mean(x.max(axis=0) - x.min(axis=0)))
    resid = x - m[:, None]
    floor = 0.5 * theta * float(p.lam[population]) ** 2
    dispersion = max(float(np.mean(resid.var(axis=0))) - floor, 0.0)
    if k + 1 >= MIN_CYCLES and peak_ratio > PEAK_FACTOR and swing > AMPLITUDE_FRACTION * neuron_range:
        label = Regime.OSCILLATORY
    elif dispersion > dispersion_threshold:
        label = Regime.CHAOTIC
    else:
        label = Regime.STATIONARY
    return RegimeLabel(label, amplitude, float(freqs[k + 1]), peak_ratio, swing, dispersion, neuron_range)
