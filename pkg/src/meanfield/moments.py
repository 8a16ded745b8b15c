"""Gaussian moment equations of the large-N limit.

The limit law of a neuron of population ``a`` is Gaussian with mean
``mu_a(t)`` and two-time covariance ``C_a(t, s)``; different populations are
uncorrelated.  The mean obeys the delayed ODE

    mu_a' = -mu_a / theta_a + sum_c Jbar[a, c] f_ac(mu_c(t - tau_ac), C_c(t - tau_ac, t - tau_ac))

and the covariance the Volterra-type equation

    C_a(t, s) = e^{-(t+s)/theta} C_a(0, 0)
                + theta lam^2 / 2 (e^{-|t-s|/theta} - e^{-(t+s)/theta})
                + sum_c sigma_ac^2 e^{-(t+s)/theta} int_0^t int_0^s e^{(u+v)/theta} Delta_ac(u - tau, v - tau) du dv

with ``Delta_ac(u, v) = E[S_ac(X_u) S_ac(X_v)]`` under the law of population
``c``.  Both are marched forward on a uniform grid.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigError, DomainError, NumericalInstability
from .model import ModelParams, delta_kernel, gauss_expect_S
from . import io

# full-grid storage above this many entries triggers a warning
COV_ENTRY_CAP = 4e8
NEGATIVE_DIAG_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class MomentSolution:
    """Mean and covariance of the limit Gaussian process on ``t = k dt``.

    ``cov[a]`` is the symmetric ``(n+1, n+1)`` matrix ``C_a(t_i, t_j)``, or
    ``None`` when only the diagonal was kept.  Values at negative times are
    those of the constant history: ``mean[0]`` and ``var[0]``.
    """

    params: ModelParams
    dt: float
    times: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    cov: tuple[np.ndarray, ...] | None

    @property
    def M(self) -> int:
        return self.mean.shape[1]

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def history(self) -> float:
        return self.params.max_delay

    def index(self, t: float) -> int:
        k = int(round(t / self.dt))
        if k > len(self.times) - 1 or abs(k * self.dt - t) > 1e-9 * max(1.0, abs(t)):
            raise DomainError(f"t={t} is not a grid time in [-history, {self.horizon}]")
        if k < 0 and -t > self.history + 1e-12:
            raise DomainError(f"t={t} precedes the history window")
        return max(k, 0)

    def mean_at(self, t: float) -> np.ndarray:
        return self.mean[self.index(t)]

    def var_at(self, t: float) -> np.ndarray:
        return self.var[self.index(t)]

    def cov_matrix(self, a: int) -> np.ndarray:
        if self.cov is None:
            raise DomainError("solution was computed with diagonal storage only")
        return self.cov[a]

    def to_csv(self, path: str | Path) -> None:
        """Write ``t, mu_1..mu_M, C_1(t,t)..C_M(t,t)``."""
        header = ["t"] + [f"mu_{a + 1}" for a in range(self.M)] + [f"C_{a + 1}" for a in range(self.M)]
        cols = [self.times] + [self.mean[:, a] for a in range(self.M)] + [self.var[:, a] for a in range(self.M)]
        io.write_csv(path, header, cols)

    def save_cov(self, path: str | Path, a: int = 0) -> None:
        io.write_mfc1(path, self.cov_matrix(a))


def _grid(params: ModelParams, horizon: float, dt: float) -> tuple[int, np.ndarray]:
    if not (dt > 0 and math.isfinite(dt)):
        raise ConfigError("must be positive", "dt")
    n = int(round(horizon / dt))
    if n < 1 or abs(n * dt - horizon) > 1e-9 * max(1.0, horizon):
        raise ConfigError(f"horizon {horizon} is not a positive multiple of dt={dt}", "horizon")
    steps = np.rint(params.tau / dt)
    if np.any(np.abs(steps * dt - params.tau) > 1e-9 * np.maximum(1.0, params.tau)):
        raise ConfigError(f"delays must be multiples of dt={dt}", "tau")
    return n, steps.astype(int)


def _ou_part(theta: float, lam: float, v0: float, ti: float, tj: np.ndarray) -> np.ndarray:
    decay = np.exp(-(ti + tj) / theta)
    return decay * v0 + 0.5 * theta * lam * lam * (np.exp(-(ti - tj) / theta) - decay)


def solve_moments(params: ModelParams, horizon: float, dt: float, *, store: str = "full",
                  nodes: int = 32, kernel: str = "exact") -> MomentSolution:
    """March the mean and covariance equations from 0 to ``horizon``.

    The mean uses Heun's method.  The covariance double integral is rewritten
    in the scaled variable ``I'(t,s) = e^{-(t+s)/theta} I(t,s)``, which obeys
    the exact cell recurrence

        I'(i,j) = a I'(i-1,j) + a I'(i,j-1) - a^2 I'(i-1,j-1) + cell(i,j),  a = e^{-dt/theta},

    with each cell integrated by the trapezoid rule; a row is then a
    first-order linear recurrence along ``j``.  Delays of at least one step
    make every row depend on earlier rows only.  Zero delays use the
    previous row as predictor followed by one corrector pass.

    ``store="diagonal"`` keeps only ``C(t,t)`` and requires ``sigma == 0``,
    in which case the covariance is explicit.
    """
    if store not in ("full", "diagonal"):
        raise ConfigError(f"unknown storage {store!r}", "store")
    n, dsteps = _grid(params, horizon, dt)
    M = params.M
    theta, lam, jbar, sigma = params.theta, params.lam, params.jbar, params.sigma
    m0 = np.array(params.init.mean)
    v0 = np.array(params.init.var)
    times = np.arange(n + 1) * dt
    disorder = sigma > 0
    if store == "diagonal" and disorder.any():
        raise ConfigError("diagonal storage requires sigma == 0", "store")
    if store == "full" and M * (n + 1) ** 2 > COV_ENTRY_CAP:
        warnings.warn(f"covariance grid holds {M * (n + 1) ** 2:.3g} entries", ResourceWarning, stacklevel=2)

    mean = np.empty((n + 1, M))
    var = np.empty((n + 1, M))
    mean[0], var[0] = m0, v0
    cov = tuple(np.zeros((n + 1, n + 1)) for _ in range(M)) if store == "full" else None
    if cov is not None:
        for a in range(M):
            cov[a][0, 0] = v0[a]

    coupled = [(a, c) for a in range(M) for c in range(M) if jbar[a, c] != 0]
    noisy = [(a, c) for a in range(M) for c in range(M) if disorder[a, c]]
    implicit = any(dsteps[a, c] == 0 for a, c in coupled + noisy)
    alpha = np.exp(-dt / theta)
    sig2 = sigma * sigma

    def drift(i: int, mu_i: np.ndarray) -> np.ndarray:
        out = -mu_i / theta
        for a, c in coupled:
            p = max(i - dsteps[a, c], 0)
            mu_c = mu_i[c] if p == i else mean[p, c]
            out[a] += jbar[a, c] * gauss_expect_S(params.sigmoids[a][c], mu_c, max(var[p, c], 0.0))
        return out

    def delta_row(i: int) -> list[np.ndarray]:
        """Sum_c sigma_ac^2 Delta_ac(t_i - tau, t_j - tau) for j = 0..i, per a."""
        rows = [np.zeros(i + 1) for _ in range(M)]
        j = np.arange(i + 1)
        for a, c in noisy:
            d = dsteps[a, c]
            p = max(i - d, 0)
            q = np.maximum(j - d, 0)
            C = cov[c]
            rows[a] += sig2[a, c] * delta_kernel(params.sigmoids[a][c], mean[p, c], mean[q, c],
                                                  C[p, p], C[p, q], C[q, q], kernel=kernel, nodes=nodes)
        return rows

    F_prev = drift(0, mean[0].copy())
    E_prev = delta_row(0) if noisy else None
    Ip_prev = [np.zeros(1) for _ in range(M)]
    ou_rows = [None] * M

    for i in range(1, n + 1):
        ti = times[i]
        mu_star = mean[i - 1] + dt * F_prev
        if cov is not None:
            for a in range(M):
                ou_rows[a] = _ou_part(theta[a], lam[a], v0[a], ti, times[: i + 1])
                if implicit:
                    # zero-order-hold predictor for the row being computed
                    cov[a][i, :i] = cov[a][i - 1, :i]
                    cov[a][:i, i] = cov[a][i - 1, :i]
                    cov[a][i, i] = cov[a][i - 1, i - 1]
        var[i] = var[i - 1] if implicit else 0.0
        if cov is None:
            var[i] = np.exp(-2 * ti / theta) * v0 + 0.5 * theta * lam * lam * (1 - np.exp(-2 * ti / theta))
        for _pass in range(2 if implicit else 1):
            mean[i] = mu_star
            F_i = drift(i, mu_star.copy())
            mean[i] = mean[i - 1] + 0.5 * dt * (F_prev + F_i)
            if cov is None:
                continue
            E_cur = delta_row(i) if noisy else None
            Ip_cur = []
            for a in range(M):
                row = ou_rows[a].copy()
                Ip = np.zeros(i + 1)
                if E_cur is not None and disorder[a].any():
                    al = alpha[a]
                    Ec, Ep = E_cur[a], np.append(E_prev[a], E_cur[a][i - 1])
                    Pp = np.append(Ip_prev[a], 0.0)
                    cell = 0.25 * dt * dt * (Ec[1:] + al * Ep[1:] + al * Ec[:-1] + al * al * Ep[:-1])
                    if i > 1:
                        r = al * Pp[1:i] - al * al * Pp[: i - 1] + cell[: i - 1]
                        Ip[1:i] = lfilter([1.0], [1.0, -al], r)
                    Ip[i] = 2 * al * Ip[i - 1] - al * al * Ip_prev[a][i - 1] + cell[i - 1]
                    row += Ip
                Ip_cur.append(Ip)
                cov[a][i, : i + 1] = row
                cov[a][: i + 1, i] = row
                var[i, a] = row[i]
        if np.any(var[i] < -NEGATIVE_DIAG_TOL):
            raise NumericalInstability(f"negative variance {var[i].min():.3g} at t={ti:.6g}")
        if not np.all(np.isfinite(mean[i])) or not np.all(np.isfinite(var[i])):
            raise NumericalInstability(f"non-finite moments at t={ti:.6g}")
        F_prev = drift(i, mean[i].copy())
        if cov is not None:
            E_prev = E_cur if noisy else None
            Ip_prev = Ip_cur
    return MomentSolution(params, dt, times, mean, var, cov)


@dataclass(frozen=True)
class VarianceEstimate:
    values: np.ndarray
    converged: np.ndarray


def stationary_variance_estimate(sol: MomentSolution, window: tuple[float, float]) -> VarianceEstimate:
    """Time average of ``C_a(t,t)`` over ``window``.

    A population is flagged unconverged when the least-squares trend across
    the window changes the variance by more than 1% of its average.
    """
    t0, t1 = window
    if t1 - t0 < 10 * float(sol.params.theta.max()):
        raise DomainError(f"window length {t1 - t0} is shorter than 10 time constants")
    i0, i1 = sol.index(t0), sol.index(t1)
    if t0 < 0:
        raise DomainError("window must lie inside [0, horizon]")
    seg = sol.var[i0 : i1 + 1]
    t = sol.times[i0 : i1 + 1]
    values = seg.mean(axis=0)
    slope = np.polyfit(t - t.mean(), seg, 1)[0]
    drift = np.abs(slope) * (t1 - t0)
    scale = np.abs(values)
    converged = drift <= 0.01 * np.maximum(scale, 1e-12)
    return VarianceEstimate(values, converged)
