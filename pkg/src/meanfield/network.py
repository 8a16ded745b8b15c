"""Finite-size simulation of the delayed random rate network.

Euler-Maruyama on a uniform grid; delays are whole numbers of steps and the
history on [-tau, 0] is constant per neuron. Randomness is counter based:
weights, initial values and noise each come from a Philox stream keyed by
``(seed, purpose)``. Noise for step ``k`` is read from the block counter
``k // NOISE_BLOCK``, so results never depend on how the work is split
between threads.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from .errors import ConfigError, SimulationDiverged
from .model import ModelParams, sigmoid_eval

NOISE_BLOCK = 64
ROW_CHUNK = 512
DIVERGENCE_BOUND = 1e6

_WEIGHTS, _INIT, _NOISE = 0, 1, 2


def default_workers() -> int:
    env = os.environ.get("MEANFIELD_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"MEANFIELD_THREADS must be an integer, got {env!r}", "MEANFIELD_THREADS") from None
    return 1


@dataclass(frozen=True, eq=False)
class NetworkConfig:
    params: ModelParams
    n_per_pop: tuple[int, ...]
    dt: float
    horizon: float
    seed: int = 0
    record_stride: int = 1

    def __post_init__(self):
        n = tuple(int(v) for v in np.atleast_1d(self.n_per_pop))
        object.__setattr__(self, "n_per_pop", n)
        p = self.params
        if len(n) != p.M:
            raise ConfigError(f"need {p.M} population sizes, got {len(n)}", "n_per_pop")
        if any(v <= 0 for v in n):
            raise ConfigError("every population needs at least one neuron", "n_per_pop")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError("time step must be positive", "dt")
        if not self.dt < p.theta.min() / 10:
            raise ConfigError(f"dt={self.dt} must be < min(theta)/10 = {p.theta.min() / 10}", "dt")
        if not self.horizon > 0:
            raise ConfigError("horizon must be positive", "horizon")
        steps = self.tau / self.dt
        if np.any(np.abs(steps - np.round(steps)) * self.dt > 1e-9 * self.dt):
            raise ConfigError(f"delays {p.tau.tolist()} are not multiples of dt={self.dt}", "tau")
        if abs(self.horizon / self.dt - round(self.horizon / self.dt)) > 1e-6:
            raise ConfigError(f"horizon {self.horizon} is not a multiple of dt={self.dt}", "horizon")
        if self.record_stride < 1 or self.n_steps % self.record_stride:
            raise ConfigError("record_stride must divide the number of steps", "record_stride")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must fit in 64 bits", "seed")

    @property
    def tau(self) -> np.ndarray:
        return self.params.tau

    @property
    def delay_steps(self) -> np.ndarray:
        return np.round(self.params.tau / self.dt).astype(int)

    @property
    def history_steps(self) -> int:
        return int(self.delay_steps.max())

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    @property
    def n_total(self) -> int:
        return sum(self.n_per_pop)

    @property
    def pop_index(self) -> np.ndarray:
        return np.repeat(np.arange(self.params.M), self.n_per_pop)

    def pop_slice(self, a: int) -> slice:
        start = sum(self.n_per_pop[:a])
        return slice(start, start + self.n_per_pop[a])


def _stream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(key))
    return np.random.Generator(np.random.Philox(key=ss.generate_state(2, dtype=np.uint64)))


def _noise_block(seed: int, block: int, n: int) -> np.ndarray:
    ss = np.random.SeedSequence(int(seed), spawn_key=(_NOISE,))
    bitgen = np.random.Philox(key=ss.generate_state(2, dtype=np.uint64), counter=[0, block, 0, 0])
    return np.random.Generator(bitgen).standard_normal((NOISE_BLOCK, n))


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """Synaptic weights stored per population block ``[a][c]`` of shape (N_a, N_c)."""

    blocks: tuple[tuple[np.ndarray, ...], ...]

    @property
    def M(self) -> int:
        return len(self.blocks)

    def dense(self) -> np.ndarray:
        return np.block([list(row) for row in self.blocks])


def sample_weights(config: NetworkConfig, seed: int | None = None) -> WeightMatrix:
    """Draw J_ij ~ N(jbar[a,c] / N_c, sigma[a,c]^2 / N_c) block by block."""
    seed = config.seed if seed is None else seed
    p = config.params
    rows = []
    for a in range(p.M):
        row = []
        for c in range(p.M):
            nc = config.n_per_pop[c]
            shape = (config.n_per_pop[a], nc)
            if p.jbar[a, c] == 0 and p.sigma[a, c] == 0:
                blk = np.broadcast_to(np.float64(0.0), shape)
            else:
                z = _stream(seed, _WEIGHTS, a, c).standard_normal(shape)
                blk = p.jbar[a, c] / nc + (p.sigma[a, c] / math.sqrt(nc)) * z
                blk.setflags(write=False)
            row.append(blk)
        rows.append(tuple(row))
    return WeightMatrix(tuple(rows))


def sample_initial(config: NetworkConfig, seed: int | None = None) -> np.ndarray:
    seed = config.seed if seed is None else seed
    law = config.params.init
    mean = np.repeat(law.mean, config.n_per_pop)
    if law.kind == "constant":
        return mean.astype(float)
    sd = np.sqrt(np.repeat(law.var, config.n_per_pop))
    return mean + sd * _stream(seed, _INIT).standard_normal(config.n_total)


@dataclass(frozen=True, eq=False)
class TrajectoryBundle:
    """Recorded network paths; ``paths[k, i]`` is neuron i at ``times[k]``."""

    times: np.ndarray
    paths: np.ndarray
    pop_index: np.ndarray
    config: NetworkConfig = field(repr=False)

    def population(self, a: int) -> np.ndarray:
        return self.paths[:, self.config.pop_slice(a)]

    def time_index(self, t: float) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"t={t} is not a recorded grid time")
        return k


def empirical_moments(bundle: TrajectoryBundle, population: int, t: float) -> tuple[float, float]:
    """Sample mean and unbiased sample variance across a population at time t."""
    if not 0 <= population < bundle.config.params.M:
        raise ValueError(f"no population {population}")
    x = bundle.population(population)[bundle.time_index(t)]
    if x.size == 0:
        raise ValueError("population is empty")
    var = float(np.var(x, ddof=1)) if x.size > 1 else float("nan")
    return float(np.mean(x)), var


def _integrate(config: NetworkConfig, stacks, x0: np.ndarray, noise: Callable[[int], np.ndarray],
               record: np.ndarray, workers: int) -> np.ndarray:
    """Advance R replicas at once.

    ``stacks[a][c]`` has shape (R, N_a, N_c), ``x0`` (R, N), ``noise(k)``
    returns the (R, N) standard normals for step k. ``record`` lists grid
    indices (-K..n) to store. Returns (R, len(record), N).
    """
    p = config.params
    M, dt, K, n = p.M, config.dt, config.history_steps, config.n_steps
    R, N = x0.shape
    slices = [config.pop_slice(a) for a in range(M)]
    theta = np.repeat(p.theta, config.n_per_pop)
    lam = np.repeat(p.lam, config.n_per_pop)
    dsteps = config.delay_steps
    sqdt = math.sqrt(dt)

    ring = np.empty((K + 1, R, N))
    ring[:] = x0
    out = np.empty((R, len(record), N))
    rec_pos = {int(j): i for i, j in enumerate(record)}
    for j in range(-K, 1):
        if j in rec_pos:
            out[:, rec_pos[j]] = x0

    live = [[bool(np.any(stacks[a][c])) for c in range(M)] for a in range(M)]
    tasks = [(a, r0, min(r0 + ROW_CHUNK, config.n_per_pop[a])) for a in range(M) for r0 in range(0, config.n_per_pop[a], ROW_CHUNK)]
    drive = np.empty((R, N))
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None

    def chunk(task, rates):
        a, r0, r1 = task
        acc = np.zeros((R, r1 - r0))
        for c in range(M):
            if not live[a][c]:
                continue
            part = np.matmul(stacks[a][c][:, r0:r1, :], rates[(a, c)][:, :, None])[..., 0]
            acc = acc + part
        drive[:, slices[a].start + r0: slices[a].start + r1] = acc

    try:
        with threadpool_limits(limits=1, user_api="blas"):
            for k in range(n):
                x = ring[k % (K + 1)]
                cache: dict = {}
                rates = {}
                for a in range(M):
                    for c in range(M):
                        key = (p.sigmoids[a][c], int(dsteps[a, c]), c)
                        if key not in cache:
                            delayed = ring[(k - dsteps[a, c]) % (K + 1)][:, slices[c]]
                            cache[key] = sigmoid_eval(p.sigmoids[a][c], delayed)
                        rates[(a, c)] = cache[key]
                if pool is None:
                    for task in tasks:
                        chunk(task, rates)
                else:
                    list(pool.map(lambda t: chunk(t, rates), tasks))
                new = x + dt * (drive - x / theta) + (lam * sqdt) * noise(k)
                if not np.all(np.abs(new) <= DIVERGENCE_BOUND):
                    raise SimulationDiverged(k + 1, (k + 1) * dt)
                ring[(k + 1) % (K + 1)] = new
                if k + 1 in rec_pos:
                    out[:, rec_pos[k + 1]] = new
    finally:
        if pool is not None:
            pool.shutdown()
    return out


def _record_indices(config: NetworkConfig) -> np.ndarray:
    s = config.record_stride
    K = config.history_steps
    return np.array([j for j in range(-K, config.n_steps + 1) if j % s == 0])


def _noise_source(seeds: Sequence[int], n: int) -> Callable[[int], np.ndarray]:
    cache = {"block": -1, "data": None}

    def noise(k: int) -> np.ndarray:
        b = k // NOISE_BLOCK
        if b != cache["block"]:
            cache["data"] = np.stack([_noise_block(s, b, n) for s in seeds], axis=1)
            cache["block"] = b
        return cache["data"][k % NOISE_BLOCK]

    return noise


def simulate_network(config: NetworkConfig, weights: WeightMatrix | None = None, *, x0: np.ndarray | None = None,
                     noise: Callable[[int], np.ndarray] | None = None, workers: int | None = None) -> TrajectoryBundle:
    """Simulate one network realisation.

    ``x0`` and ``noise`` override the seeded initial values and the noise
    source (``noise(k)`` must return N standard normals for step k).
    ``workers`` defaults to ``MEANFIELD_THREADS``; the result is identical
    for any value.
    """
    p = config.params
    if weights is None:
        weights = sample_weights(config)
    if weights.M != p.M or any(weights.blocks[a][c].shape != (config.n_per_pop[a], config.n_per_pop[c])
                               for a in range(p.M) for c in range(p.M)):
        raise ConfigError("weight blocks do not match population sizes", "weights")
    N = config.n_total
    x0 = sample_initial(config) if x0 is None else np.asarray(x0, dtype=float)
    if x0.shape != (N,):
        raise ConfigError(f"initial state must have {N} entries", "x0")
    if noise is None:
        src = _noise_source([config.seed], N)
    else:
        def src(k):
            return np.asarray(noise(k), dtype=float)[None, :]
    stacks = [[blk[None] for blk in row] for row in weights.blocks]
    record = _record_indices(config)
    out = _integrate(config, stacks, x0[None], src, record, workers or default_workers())
    paths = out[0]
    paths.setflags(write=False)
    times = record * config.dt
    times.setflags(write=False)
    return TrajectoryBundle(times, paths, config.pop_index, config)


def simulate_replicas(config: NetworkConfig, seeds: Sequence[int], t: float, *, batch: int = 64,
                      workers: int | None = None) -> np.ndarray:
    """States at time ``t`` of independent networks, one per seed.

    Each replica draws weights, initial values and noise from its own seed.
    Returns an array of shape (len(seeds), N).
    """
    k_t = int(round(t / config.dt))
    if abs(k_t * config.dt - t) > 1e-9 * max(1.0, t) or not 0 <= k_t <= config.n_steps:
        raise ValueError(f"t={t} is not a grid time in [0, {config.horizon}]")
    N = config.n_total
    M = config.params.M
    rows = []
    for b0 in range(0, len(seeds), batch):
        chunk_seeds = [int(s) for s in seeds[b0:b0 + batch]]
        ws = [sample_weights(config, s) for s in chunk_seeds]
        stacks = [[np.stack([w.blocks[a][c] for w in ws]) for c in range(M)] for a in range(M)]
        x0 = np.stack([sample_initial(config, s) for s in chunk_seeds])
        sub = NetworkConfig(config.params, config.n_per_pop, config.dt, k_t * config.dt if k_t else config.dt,
                            config.seed) if k_t else config
        if k_t == 0:
            rows.append(x0)
            continue
        out = _integrate(sub, stacks, x0, _noise_source(chunk_seeds, N), np.array([k_t]), workers or default_workers())
        rows.append(out[:, 0])
    return np.concatenate(rows, axis=0)
