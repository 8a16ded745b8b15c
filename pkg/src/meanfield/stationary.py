"""Stationary solutions: mean fixed points, the SCS covariance equation and shooting.

For a stationary Gaussian solution with mean ``mu`` and covariance
``C_a(zeta)`` (``zeta = t - s``), the covariance obeys

    C_a'' = C_a / theta_a^2 - sum_c sigma_ac^2 Delta_ac(C_c(zeta)),   C_a'(0) = 0,

where ``Delta_ac`` is ``E[S_ac(X) S_ac(Y)]`` for a pair with means ``mu_c``,
variances ``C_c(0)`` and covariance ``C_c(zeta)``.  With diagonal disorder
each population is a particle in the potential

    Phi(C) = -C^2 / (2 theta^2) + sigma^2 psi(C),   psi' = Delta,

and the admissible ``C(0)`` is the one whose trajectory neither blows up
nor overshoots: it is found by shooting.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import brentq

from .errors import DomainError, NoConvergence, NotGradientSystem
from .model import ModelParams, SigmoidSpec, delta_kernel, gauss_expect_S, sigmoid_deriv
from . import io

ROOT_DEDUP_TOL = 1e-6
ROOT_RESIDUAL_TOL = 1e-8
BLOWUP_FACTOR = 10.0
# trajectories below -CROSS_EPS * c0 count as overshooting
CROSS_EPS = 1e-3


class Regime(str, enum.Enum):
    STATIONARY = "stationary"
    CHAOTIC = "chaotic"


# ---------------------------------------------------------------- mean roots


def _mean_residual(params: ModelParams, c0: np.ndarray, mu: np.ndarray) -> np.ndarray:
    out = -mu / params.theta
    for a in range(params.M):
        for c in range(params.M):
            if params.jbar[a, c] != 0:
                out[a] += params.jbar[a, c] * gauss_expect_S(params.sigmoids[a][c], mu[c], c0[c])
    return out


def _mean_jacobian(params: ModelParams, c0: np.ndarray, mu: np.ndarray) -> np.ndarray:
    M = params.M
    jac = -np.diag(1.0 / params.theta)
    for a in range(M):
        for c in range(M):
            if params.jbar[a, c] != 0:
                spec = params.sigmoids[a][c]
                s = math.sqrt(1.0 + spec.gain ** 2 * c0[c])
                # d/dmu of S_1(g mu / s) is the unit-gain slope times g / s
                jac[a, c] += params.jbar[a, c] * spec.gain / s * sigmoid_deriv(SigmoidSpec(spec.family, 1.0), spec.gain * mu[c] / s)
    return jac


def _mean_bound(params: ModelParams) -> np.ndarray:
    amp = np.array([[max(abs(b) for b in s.bounds) for s in row] for row in params.sigmoids])
    return params.theta * (np.abs(params.jbar) * amp).sum(axis=1)


def _newton(params, c0, mu, max_iter=100):
    """Damped Newton iteration; returns the last iterate and its residual norm."""
    r = _mean_residual(params, c0, mu)
    for _ in range(max_iter):
        if np.max(np.abs(r)) <= 1e-13:
            break
        try:
            step = np.linalg.solve(_mean_jacobian(params, c0, mu), -r)
        except np.linalg.LinAlgError:
            break
        damp = 1.0
        while damp > 1e-4:
            trial = mu + damp * step
            rt = _mean_residual(params, c0, trial)
            if np.max(np.abs(rt)) < np.max(np.abs(r)):
                break
            damp *= 0.5
        else:
            break
        mu, r = trial, rt
    return mu, float(np.max(np.abs(r)))


def stationary_mean_roots(params: ModelParams, c0, *, starts_per_axis: int = 5,
                          scan_points: int = 4001) -> list[np.ndarray]:
    """All stationary means for variances ``c0`` (one per population).

    Every root lies in the box ``|mu_a| <= theta_a sum_c |Jbar_ac| max|S|``.
    Damped Newton runs from a ``starts_per_axis^M`` lattice over that box; a
    single population additionally brackets every sign change of the
    residual on a uniform scan and refines it with Brent's method.  Roots are
    deduplicated at 1e-6 and kept only with residual <= 1e-8.
    """
    c0 = np.broadcast_to(np.asarray(c0, dtype=float), (params.M,))
    if np.any(c0 < 0):
        raise DomainError("stationary variances must be >= 0")
    bound = _mean_bound(params)
    candidates = []
    if params.M == 1:
        grid = np.linspace(-bound[0] - 1.0, bound[0] + 1.0, scan_points)
        h = np.array([_mean_residual(params, c0, np.array([x]))[0] for x in grid])
        for k in np.flatnonzero(h == 0):
            candidates.append(np.array([grid[k]]))
        for k in np.flatnonzero(h[:-1] * h[1:] < 0):
            x = brentq(lambda m: _mean_residual(params, c0, np.array([m]))[0], grid[k], grid[k + 1], xtol=1e-15, rtol=1e-15)
            candidates.append(np.array([x]))
    axes = [np.linspace(-b, b, starts_per_axis) for b in bound]
    for start in itertools.product(*axes):
        mu, _ = _newton(params, c0, np.array(start, dtype=float))
        candidates.append(mu)
    roots: list[np.ndarray] = []
    for mu in candidates:
        mu, res = _newton(params, c0, mu)
        if res > ROOT_RESIDUAL_TOL or not np.all(np.isfinite(mu)):
            continue
        if all(np.max(np.abs(mu - r)) > ROOT_DEDUP_TOL for r in roots):
            roots.append(mu)
    roots.sort(key=lambda m: tuple(m))
    return roots


# ---------------------------------------------------------------- SCS ODE


@dataclass(frozen=True)
class SCSProfile:
    """Solution of the stationary covariance ODE on ``zeta = 0, dzeta, ...``.

    ``diverged`` is set when some ``|C_a|`` exceeded ``10 c0_a``; the arrays
    then stop at that point.
    """

    zeta: np.ndarray
    C: np.ndarray
    dC: np.ndarray
    diverged: bool

    def to_csv(self, path) -> None:
        M = self.C.shape[1]
        io.write_csv(path, ["zeta"] + [f"C_{a + 1}" for a in range(M)], [self.zeta] + [self.C[:, a] for a in range(M)])


def _scs_force(params: ModelParams, mu: np.ndarray, c0: np.ndarray, C: np.ndarray, nodes: int, kernel: str) -> np.ndarray:
    """Right-hand side C/theta^2 - sum_c sigma_ac^2 Delta_ac, vectorised over leading axes of ``C``.

    ``C`` has shape (..., M); ``c0`` and ``mu`` broadcast against it.
    """
    C = np.asarray(C, dtype=float)
    c0 = np.broadcast_to(c0, C.shape)
    mu = np.broadcast_to(mu, C.shape)
    out = C / params.theta ** 2
    for a in range(params.M):
        for c in range(params.M):
            s = params.sigma[a, c]
            if s > 0:
                out[..., a] -= s * s * delta_kernel(params.sigmoids[a][c], mu[..., c], mu[..., c], c0[..., c], C[..., c], c0[..., c], kernel=kernel, nodes=nodes)
    return out


def scs_integrate(params: ModelParams, mu_bar, c0, zeta_max: float | None = None, dzeta: float | None = None,
                  *, initial_slope=0.0, nodes: int = 32, kernel: str = "exact") -> SCSProfile:
    """RK4 trajectory of the stationary covariance ODE from ``C(0) = c0``."""
    M = params.M
    mu = np.broadcast_to(np.asarray(mu_bar, dtype=float), (M,))
    c0 = np.broadcast_to(np.asarray(c0, dtype=float), (M,)).copy()
    if np.any(c0 < 0):
        raise DomainError("c0 must be >= 0")
    th = float(params.theta.max())
    zeta_max = 20 * th if zeta_max is None else zeta_max
    dzeta = 0.01 * float(params.theta.min()) if dzeta is None else dzeta
    n = int(math.ceil(zeta_max / dzeta - 1e-9))
    C = np.empty((n + 1, M))
    V = np.empty((n + 1, M))
    C[0] = c0
    V[0] = np.broadcast_to(np.asarray(initial_slope, dtype=float), (M,))
    limit = BLOWUP_FACTOR * np.maximum(c0, 1e-300)
    diverged = False
    f = lambda x: _scs_force(params, mu, c0, x, nodes, kernel)
    for k in range(n):
        c, v = C[k], V[k]
        k1c, k1v = v, f(c)
        k2c, k2v = v + 0.5 * dzeta * k1v, f(c + 0.5 * dzeta * k1c)
        k3c, k3v = v + 0.5 * dzeta * k2v, f(c + 0.5 * dzeta * k2c)
        k4c, k4v = v + dzeta * k3v, f(c + dzeta * k3c)
        C[k + 1] = c + dzeta / 6 * (k1c + 2 * k2c + 2 * k3c + k4c)
        V[k + 1] = v + dzeta / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        if np.any(np.abs(C[k + 1]) > limit) or not np.all(np.isfinite(C[k + 1])):
            diverged = True
            n = k + 1
            break
    zeta = np.arange(n + 1) * dzeta
    return SCSProfile(zeta, C[: n + 1], V[: n + 1], diverged)


# ---------------------------------------------------------------- shooting


def _shoot_signs(spec: SigmoidSpec, s2: float, theta: float, mu: float, c0: np.ndarray,
                 zeta_max: float, dzeta: float, nodes: int, kernel: str) -> np.ndarray:
    """Divergence sign of the one-population SCS trajectory for each ``c0``.

    +1: the trajectory blows up above ``10 c0`` or, having started downwards,
    turns back up before reaching the target (not enough energy).
    -1: it drops below ``-1e-3 c0`` or accelerates downwards again after a
    braking phase (too much energy).  Trajectories still braking at
    ``zeta_max`` are extrapolated with the local linear force ``A = k^2 C``:
    they pass the target iff ``V^2 > A C``.
    """
    c0 = np.asarray(c0, dtype=float)
    K = c0.size

    def force(c, idx):
        return c / theta ** 2 - s2 * delta_kernel(spec, mu, mu, c0[idx], c, c0[idx], kernel=kernel, nodes=nodes)

    sign = np.zeros(K)
    C = c0.copy()
    V = np.zeros(K)
    A = force(C, np.arange(K))
    sign[A > 0] = 1.0  # pushed upwards from rest
    braking = np.zeros(K, dtype=bool)
    active = np.flatnonzero(sign == 0)
    for _ in range(int(math.ceil(zeta_max / dzeta))):
        if active.size == 0:
            break
        c, v = C[active], V[active]
        f = lambda x: force(x, active)
        k1c, k1v = v, f(c)
        k2c, k2v = v + 0.5 * dzeta * k1v, f(c + 0.5 * dzeta * k1c)
        k3c, k3v = v + 0.5 * dzeta * k2v, f(c + 0.5 * dzeta * k2c)
        k4c, k4v = v + dzeta * k3v, f(c + dzeta * k3c)
        c = c + dzeta / 6 * (k1c + 2 * k2c + 2 * k3c + k4c)
        v = v + dzeta / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        a = f(c)
        C[active], V[active], A[active] = c, v, a
        up = (c > BLOWUP_FACTOR * c0[active]) | (v >= 0)
        down = (c < -CROSS_EPS * c0[active]) | (braking[active] & (a < 0))
        sign[active[up & ~down]] = 1.0
        sign[active[down]] = -1.0
        braking[active] |= a > 0
        active = active[sign[active] == 0]
    c, v, a = C[active], V[active], A[active]
    sign[active] = np.where(v * v > a * c, -1.0, 1.0)
    return sign


def static_variance(spec: SigmoidSpec, s2: float, theta: float, mu: float, *, kernel: str = "exact") -> float:
    """Smallest c >= 0 with ``c = theta^2 s2 E[S(X)^2]``, ``X ~ N(mu, c)``: the frozen solution."""
    def g(c):
        return c - theta ** 2 * s2 * float(delta_kernel(spec, mu, mu, c, c, c, kernel=kernel))
    if g(0.0) >= 0:
        return 0.0
    hi = max(1e-12, theta ** 2 * s2 * max(abs(b) for b in spec.bounds) ** 2) * 1.01
    return brentq(g, 0.0, hi, xtol=1e-15, rtol=1e-13)


@dataclass(frozen=True)
class ShootingResult:
    c0: float
    regime: Regime
    sweep: tuple[tuple[float, float], ...] = ()


def _c_max(params: ModelParams, a: int) -> float:
    amp = max(max(abs(b) for b in s.bounds) for s in params.sigmoids[a])
    return 10.0 * float(np.sum(params.sigma[a] ** 2)) * float(params.theta[a]) ** 2 * amp ** 2


def _shoot_one(params: ModelParams, a: int, mu: float, zeta_max: float, dzeta: float, *, sweep_points: int = 64,
               rounds: int = 8, nodes: int = 32, kernel: str = "exact") -> ShootingResult:
    spec = params.sigmoids[a][a]
    s2 = float(params.sigma[a, a]) ** 2
    theta = float(params.theta[a])
    c_s = static_variance(spec, s2, theta, mu, kernel=kernel) if s2 > 0 else 0.0
    if s2 == 0:
        return ShootingResult(0.0, Regime.STATIONARY)
    c_max = _c_max(params, a)
    grid = np.geomspace(1e-9 * c_max, c_max, sweep_points)
    signs = _shoot_signs(spec, s2, theta, mu, grid, zeta_max, dzeta, nodes, kernel)
    sweep = tuple(zip(grid.tolist(), signs.tolist()))
    flips = np.flatnonzero((signs[:-1] < 0) & (signs[1:] > 0))
    if signs[0] > 0 and c_s <= grid[0]:
        return ShootingResult(c_s, Regime.STATIONARY, sweep)
    if flips.size == 0:
        raise NoConvergence(f"no shooting bracket in [0, {c_max:.4g}]; sweep signs: {signs.astype(int).tolist()}")
    lo, hi = grid[flips[0]], grid[flips[0] + 1]
    for _ in range(rounds):
        pts = np.linspace(lo, hi, 18)[1:-1]
        s = _shoot_signs(spec, s2, theta, mu, pts, zeta_max, dzeta, nodes, kernel)
        allpts = np.concatenate([[lo], pts, [hi]])
        alls = np.concatenate([[-1.0], s, [1.0]])
        # if the signs are not monotone inside the bracket, keep the first separating pair
        k =int(np.flatnonzero((alls[:-1] < 0) & (alls[1:] > 0))[0])
        lo, hi = allpts[k], allpts[k + 1]
        if hi - lo <= 1e-12 * hi:
            break
    c0 = 0.5 * (lo + hi)
    static = abs(c0 - c_s) <= 1e-6 * max(c_s, 1e-12) + 1e-9 * c_max
    return ShootingResult(c_s if static else c0, Regime.STATIONARY if static else Regime.CHAOTIC, sweep)


def shoot_stationary_variance(params: ModelParams, mu_bar, zeta_max: float | None = None, *, dzeta: float | None = None,
                              population: int | None = None, nodes: int = 32, kernel: str = "exact"):
    """Stationary variance ``C(0)`` and regime by shooting on ``C(0)``.

    A log-spaced sweep of ``C(0)`` over ``(0, c_max]``,
    ``c_max = 10 sum_c sigma_ac^2 theta_a^2 max|S|^2``, locates the first
    change from overshooting to blowing up; repeated 16-point multisection
    narrows it.  When the separating value is the frozen solution
    ``c = theta^2 sigma^2 E[S^2]`` (0 for an odd sigmoid at ``mu = 0``) the
    regime is stationary, otherwise chaotic.

    With several populations the disorder must be diagonal; each population
    is shot independently and a list of results is returned, unless
    ``population`` selects one.
    """
    M = params.M
    if M > 1 and not params.diagonal_disorder():
        raise NotGradientSystem("shooting needs sigma[a, c] == 0 for a != c")
    mu = np.broadcast_to(np.asarray(mu_bar, dtype=float), (M,))
    th = float(params.theta.max())
    zeta_max = 20 * th if zeta_max is None else zeta_max
    dzeta = 0.02 * float(params.theta.min()) if dzeta is None else dzeta
    pops = range(M) if population is None else [population]
    res = [_shoot_one(params, a, float(mu[a]), zeta_max, dzeta, kernel=kernel, nodes=nodes) for a in pops]
    if population is not None or M == 1:
        return res[0]
    return res


@dataclass(frozen=True)
class StationaryState:
    mean: np.ndarray
    c0: np.ndarray
    regime: tuple[Regime, ...]
    profile: SCSProfile | None = None


def stationary_states(params: ModelParams, *, zeta_max: float | None = None, tol: float = 1e-6,
                      max_sweeps: int = 100, with_profile: bool = False) -> list[StationaryState]:
    """Joint stationary (mean, variance) pairs by alternating roots and shooting.

    Each mean root at zero variance seeds a branch; the branch alternates
    ``stationary_mean_roots`` (following the nearest root) and shooting
    until both change by less than ``tol``.
    """
    M = params.M
    c0 = np.zeros(M)
    states = []
    for seed in stationary_mean_roots(params, c0):
        mu, c = seed, c0.copy()
        for _ in range(max_sweeps):
            shots = shoot_stationary_variance(params, mu, zeta_max)
            shots = [shots] if M == 1 else shots
            c_new = np.array([s.c0 for s in shots])
            roots = stationary_mean_roots(params, c_new)
            if not roots:
                raise NoConvergence(f"mean roots vanished at c0={c_new.tolist()}")
            mu_new = min(roots, key=lambda r: float(np.max(np.abs(r - mu))))
            done = np.max(np.abs(mu_new - mu)) < tol and np.max(np.abs(c_new - c)) < tol
            mu, c = mu_new, c_new
            if done:
                break
        else:
            raise NoConvergence(f"stationary iteration did not settle in {max_sweeps} sweeps")
        regime = tuple(s.regime for s in shots)
        if any(np.max(np.abs(mu - s.mean)) < tol and np.max(np.abs(c - s.c0)) < tol for s in states):
            continue
        prof = scs_integrate(params, mu, c, zeta_max) if with_profile else None
        states.append(StationaryState(mu, c, regime, prof))
    return states


# ---------------------------------------------------------------- potential


@dataclass(frozen=True)
class Potential1D:
    """``Phi(C) = -C^2 / (2 theta^2) + sigma^2 psi(C)`` sampled on ``C``."""

    C: np.ndarray
    phi: np.ndarray
    sigma: float
    theta: float
    mu_bar: float
    c0: float

    def stationary_points(self) -> np.ndarray:
        """Grid locations where the sampled slope changes sign (interior) plus ``C = 0`` if flat there."""
        d = np.diff(self.phi)
        idx = np.flatnonzero(d[:-1] * d[1:] < 0) + 1
        return self.C[idx]

    def to_csv(self, path) -> None:
        io.write_csv(path, ["C", "Phi"], [self.C, self.phi])


def potential_phi(params: ModelParams, mu_bar, c0, C_grid, *, population: int = 0, nodes: int = 32, kernel: str = "exact") -> Potential1D:
    """Potential of the stationary covariance ODE for one population.

    ``psi`` is the cumulative trapezoid of ``Delta`` along ``C_grid``, which
    must start at 0.  With several populations the disorder must be
    diagonal; the total potential is then the sum of the per-population ones.
    """
    if params.M > 1 and not params.diagonal_disorder():
        raise NotGradientSystem("off-diagonal disorder couples the populations; no potential exists")
    C = np.asarray(C_grid, dtype=float)
    if C.ndim != 1 or C.size < 2 or C[0] != 0 or np.any(np.diff(C) <= 0):
        raise DomainError("C grid must be increasing and start at 0")
    a = population
    mu = float(np.broadcast_to(np.asarray(mu_bar, dtype=float), (params.M,))[a])
    v = float(np.broadcast_to(np.asarray(c0, dtype=float), (params.M,))[a])
    sigma = float(params.sigma[a, a])
    theta = float(params.theta[a])
    delta = delta_kernel(params.sigmoids[a][a], mu, mu, v, C, v, kernel=kernel, nodes=nodes)
    psi = cumulative_trapezoid(delta, C, initial=0.0)
    phi = -C * C / (2 * theta ** 2) + sigma ** 2 * psi
    return Potential1D(C, phi, sigma, theta, mu, v)


def classify_local_phase(sigma_aa: float, sprime_at_mu: float, theta: float) -> Regime:
    """Chaotic iff ``sigma S'(mu) theta > 1``; the boundary counts as stationary."""
    return Regime.CHAOTIC if sigma_aa * sprime_at_mu * theta > 1 else Regime.STATIONARY


def scs_transition(family: str, gain: float, theta: float = 1.0, *, lo: float | None = None, hi: float | None = None,
                   rtol: float = 1e-3) -> float:
    """Disorder ``sigma*`` where shooting first reports chaos (one population, ``mu = 0``).

    Bisection on ``sigma`` between ``lo`` (stationary) and ``hi`` (chaotic);
    the defaults bracket the predicted ``1 / (S'(0) theta)`` by a factor 2.
    """
    s1 = float(sigmoid_deriv(SigmoidSpec(family, gain), 0.0))
    guess = 1.0 / (s1 * theta)
    lo = 0.5 * guess if lo is None else lo
    hi = 2.0 * guess if hi is None else hi

    def chaotic(s):
        p = ModelParams.create(theta=theta, sigma=s, family=family, gain=gain)
        return shoot_stationary_variance(p, 0.0).regime is Regime.CHAOTIC

    if chaotic(lo) or not chaotic(hi):
        raise NoConvergence(f"sigma bracket [{lo}, {hi}] does not straddle the transition")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if chaotic(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
