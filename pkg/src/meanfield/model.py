"""Model parameters, sigmoid families and Gaussian expectation kernels.

Two sigmoid families are supported, both built on the standard normal CDF
``Phi``:

``gaussian-cdf``
    ``S(x) = Phi(g x)``, range (0, 1).
``centered-erf``
    ``S(x) = Phi(g x) - 1/2``, range (-1/2, 1/2), odd.

In both cases ``S'(x) = g phi(g x)``, and the Gaussian average has the closed
form ``E[S(X)] = S_1(g mu / sqrt(1 + g^2 v))`` for ``X ~ N(mu, v)``, where
``S_1`` is the same family with unit gain.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Any, Sequence

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.special import ndtr, owens_t

from .errors import ConfigError, DomainError

FAMILIES = ("gaussian-cdf", "centered-erf")
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# relative tolerance below which a 2x2 covariance is treated as rank one
PSD_EPS = 1e-12


@lru_cache(maxsize=None)
def gauss_hermite(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes ``z`` and weights ``w`` with ``sum(w f(z)) ~ E[f(Z)]``, ``Z ~ N(0, 1)``."""
    if n < 2:
        raise ValueError("quadrature order must be >= 2")
    z, w = hermegauss(n)
    w = w / math.sqrt(2.0 * math.pi)
    z.setflags(write=False)
    w.setflags(write=False)
    return z, w


@dataclass(frozen=True)
class SigmoidSpec:
    family: str = "gaussian-cdf"
    gain: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown sigmoid family {self.family!r}; expected one of {FAMILIES}", "family")
        if not (math.isfinite(self.gain) and self.gain > 0):
            raise ConfigError(f"gain must be a positive finite number, got {self.gain}", "gain")
        object.__setattr__(self, "gain", float(self.gain))

    @property
    def offset(self) -> float:
        return 0.5 if self.family == "centered-erf" else 0.0

    @property
    def bounds(self) -> tuple[float, float]:
        return (-self.offset, 1.0 - self.offset)

    @property
    def lipschitz(self) -> float:
        return self.gain * INV_SQRT_2PI

    def __call__(self, x):
        return sigmoid_eval(self, x)


def sigmoid_eval(spec: SigmoidSpec, x):
    return ndtr(spec.gain * np.asarray(x, dtype=float)) - spec.offset


def sigmoid_deriv(spec: SigmoidSpec, x):
    gx = spec.gain * np.asarray(x, dtype=float)
    return spec.gain * INV_SQRT_2PI * np.exp(-0.5 * gx * gx)


def _expect_closed(spec: SigmoidSpec, mu, v):
    return ndtr(spec.gain * mu / np.sqrt(1.0 + spec.gain**2 * v)) - spec.offset


def gauss_expect_S(spec: SigmoidSpec, mu, v, *, method: str = "closed", nodes: int = 64):
    """E[S(X)] for X ~ N(mu, v).

    ``method="quadrature"`` uses ``nodes``-point Gauss-Hermite quadrature
    instead of the closed form; it exists to cross-check the latter.
    Broadcasts over ``mu`` and ``v``.
    """
    mu = np.asarray(mu, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise DomainError("variance must be non-negative")
    if method == "closed":
        out = _expect_closed(spec, mu, v)
    elif method == "quadrature":
        z, w = gauss_hermite(nodes)
        x = mu[..., None] + np.sqrt(v)[..., None] * z
        out = sigmoid_eval(spec, x) @ w
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class BivariateGaussian:
    mean: tuple[float, float]
    cov: tuple[float, float, float]  # (c11, c12, c22)

    def __post_init__(self):
        c11, c12, c22 = self.cov
        if c11 < 0 or c22 < 0:
            raise DomainError(f"negative variance in {self.cov}")
        if c12 * c12 > c11 * c22 * (1.0 + 1e-12) + 1e-300:
            raise DomainError(f"covariance {self.cov} violates Cauchy-Schwarz")

    def swapped(self) -> "BivariateGaussian":
        c11, c12, c22 = self.cov
        return BivariateGaussian((self.mean[1], self.mean[0]), (c22, c12, c11))


def _cholesky2(c11, c12, c22):
    """Elementwise 2x2 Cholesky; returns (l11, l21, l22, rank_one_mask)."""
    c11 = np.maximum(c11, 0.0)
    c22 = np.maximum(c22, 0.0)
    bound = np.sqrt(c11 * c22)
    c12 = np.clip(c12, -bound, bound)
    l11 = np.sqrt(c11)
    with np.errstate(divide="ignore", invalid="ignore"):
        l21 = np.where(l11 > 0, c12 / np.where(l11 > 0, l11, 1.0), 0.0)
    det = c11 * c22 - c12 * c12
    rank_one = det <= PSD_EPS * c11 * c22
    l22 = np.where(rank_one & (l11 > 0), 0.0, np.sqrt(np.maximum(c22 - l21 * l21, 0.0)))
    return l11, l21, l22, rank_one


def second_moment(spec: SigmoidSpec, m1, m2, c11, c12, c22, *, nodes: int = 32, inner: str = "closed"):
    """Vectorised E[S(X1) S(X2)] for bivariate Gaussian arguments.

    The outer integral over the first Cholesky coordinate is Gauss-Hermite.
    With ``inner="closed"`` the conditional expectation over the second
    coordinate uses the closed form of :func:`gauss_expect_S`; with
    ``inner="quadrature"`` it is a second Gauss-Hermite sum (tensor rule).
    No domain checks: covariances are clipped onto the PSD cone.
    """
    m1, m2, c11, c12, c22 = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (m1, m2, c11, c12, c22)))
    l11, l21, l22, _ = _cholesky2(c11, c12, c22)
    z, w = gauss_hermite(nodes)
    x1 = m1[..., None] + l11[..., None] * z
    s1 = sigmoid_eval(spec, x1)
    cond_mean = m2[..., None] + l21[..., None] * z
    if inner == "closed":
        s2 = _expect_closed(spec, cond_mean, (l22 * l22)[..., None])
    elif inner == "quadrature":
        x2 = cond_mean[..., None] + l22[..., None, None] * z
        s2 = sigmoid_eval(spec, x2) @ w
    else:
        raise ValueError(f"unknown inner rule {inner!r}")
    return (s1 * s2) @ w


def bivariate_normal_cdf(h, k, rho):
    """P(U <= h, V <= k) for standard normals with correlation ``rho``, via Owen's T."""
    h, k, rho = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (h, k, rho)))
    rho = np.clip(rho, -1.0, 1.0)
    h = np.where(h == 0, 0.0, h)  # drop negative zeros: the limits below depend on the sign
    k = np.where(k == 0, 0.0, k)
    s = np.sqrt((1.0 - rho) * (1.0 + rho))
    with np.errstate(divide="ignore", invalid="ignore"):
        ah = (k - rho * h) / (h * s)
        ak = (h - rho * k) / (k * s)
        out = 0.5 * ndtr(h) + 0.5 * ndtr(k) - owens_t(h, ah) - owens_t(k, ak)
    out = out - np.where((h * k < 0) | ((h * k == 0) & (h + k < 0)), 0.5, 0.0)
    both_zero = (h == 0) & (k == 0)
    out = np.where(both_zero, 0.25 + np.arcsin(rho) / (2 * math.pi), out)
    # perfectly (anti)correlated limits
    out = np.where(s <= 1e-15, np.where(rho > 0, ndtr(np.minimum(h, k)), np.maximum(ndtr(h) + ndtr(k) - 1.0, 0.0)), out)
    return out


def second_moment_exact(spec: SigmoidSpec, m1, m2, c11, c12, c22):
    """Exact E[S(X1) S(X2)] for the built-in families.

    ``Phi(g X) = P(W <= g X)`` with an independent standard normal ``W``, so
    the product moment is a bivariate normal CDF at
    ``h_i = g m_i / sqrt(1 + g^2 c_ii)`` with correlation
    ``g^2 c12 / sqrt((1 + g^2 c11)(1 + g^2 c22))``.
    """
    m1, m2, c11, c12, c22 = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (m1, m2, c11, c12, c22)))
    g2 = spec.gain * spec.gain
    d1 = np.sqrt(1.0 + g2 * np.maximum(c11, 0.0))
    d2 = np.sqrt(1.0 + g2 * np.maximum(c22, 0.0))
    h = spec.gain * m1 / d1
    k = spec.gain * m2 / d2
    p = bivariate_normal_cdf(h, k, g2 * c12 / (d1 * d2))
    if spec.offset:
        p = p - spec.offset * (ndtr(h) + ndtr(k)) + spec.offset ** 2
    return p


KERNELS = ("exact", "quadrature")


def delta_kernel(spec: SigmoidSpec, m1, m2, c11, c12, c22, *, kernel: str = "exact", nodes: int = 32):
    """E[S(X1) S(X2)] by the exact formula or the Gauss-Hermite hybrid rule."""
    if kernel == "exact":
        return second_moment_exact(spec, m1, m2, c11, c12, c22)
    if kernel == "quadrature":
        return second_moment(spec, m1, m2, c11, c12, c22, nodes=nodes)
    raise ConfigError(f"unknown kernel {kernel!r}; expected one of {KERNELS}", "kernel")


def gauss_expect_SS(spec: SigmoidSpec, bg: BivariateGaussian, *, nodes: int = 32, inner: str = "quadrature") -> float:
    """E[S(X1) S(X2)] for ``(X1, X2) ~ bg``.

    Tensor-product Gauss-Hermite on the Cholesky factor by default; a rank-one
    covariance collapses to a single 1-D Gauss-Hermite sum.
    """
    c11, c12, c22 = bg.cov
    _, _, _, rank_one = _cholesky2(np.float64(c11), np.float64(c12), np.float64(c22))
    if rank_one:
        inner = "closed"  # l22 == 0, the inner expectation is a point evaluation
    return float(second_moment(spec, bg.mean[0], bg.mean[1], c11, c12, c22, nodes=nodes, inner=inner))


@dataclass(frozen=True)
class InitialLaw:
    """Law of the (time-constant) history on [-tau, 0], one value per neuron.

    ``kind`` is ``"constant"`` (every neuron of population a starts at
    ``mean[a]``) or ``"gaussian"`` (i.i.d. ``N(mean[a], var[a])``).
    """

    kind: str
    mean: tuple[float, ...]
    var: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in ("constant", "gaussian"):
            raise ConfigError(f"unknown initial law {self.kind!r}", "init.kind")
        if len(self.mean) != len(self.var):
            raise ConfigError("mean and var lengths differ", "init")
        object.__setattr__(self, "mean", tuple(float(m) for m in self.mean))
        object.__setattr__(self, "var", tuple(float(v) for v in self.var))
        if any(v < 0 or not math.isfinite(v) for v in self.var):
            raise ConfigError("initial variances must be finite and >= 0", "init.var")
        if self.kind == "constant" and any(v != 0 for v in self.var):
            raise ConfigError("constant initial law has zero variance", "init.var")

    @classmethod
    def constant(cls, values: Sequence[float]) -> "InitialLaw":
        return cls("constant", tuple(values), tuple(0.0 for _ in values))

    @classmethod
    def gaussian(cls, mean: Sequence[float], var: Sequence[float]) -> "InitialLaw":
        return cls("gaussian", tuple(mean), tuple(var))


def _matrix(value, M: int, name: str) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full((M, M), float(arr))
    if arr.shape != (M, M):
        raise ConfigError(f"expected a {M}x{M} matrix, got shape {arr.shape}", name)
    if not np.all(np.isfinite(arr)):
        raise ConfigError("entries must be finite", name)
    arr.setflags(write=False)
    return arr


def _vector(value, M: int, name: str) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(M, float(arr))
    if arr.shape != (M,):
        raise ConfigError(f"expected {M} entries, got shape {arr.shape}", name)
    if not np.all(np.isfinite(arr)):
        raise ConfigError("entries must be finite", name)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Parameters of the delayed random rate network.

    Matrices are indexed ``[a, c]`` = (postsynaptic population, presynaptic
    population), so ``jbar[a, c]`` is the mean total coupling from
    population ``c`` onto a neuron of population ``a``.
    """

    theta: np.ndarray
    lam: np.ndarray
    jbar: np.ndarray
    sigma: np.ndarray
    tau: np.ndarray
    sigmoids: tuple[tuple[SigmoidSpec, ...], ...]
    init: InitialLaw = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float, ndmin=1)
        M = theta.shape[0]
        if M < 1:
            raise ConfigError("need at least one population", "theta")
        object.__setattr__(self, "theta", _vector(theta, M, "theta"))
        object.__setattr__(self, "lam", _vector(self.lam, M, "lam"))
        object.__setattr__(self, "jbar", _matrix(self.jbar, M, "jbar"))
        object.__setattr__(self, "sigma", _matrix(self.sigma, M, "sigma"))
        object.__setattr__(self, "tau", _matrix(self.tau, M, "tau"))
        if np.any(self.theta <= 0):
            raise ConfigError("time constants must be > 0", "theta")
        if np.any(self.lam < 0):
            raise ConfigError("noise intensities must be >= 0", "lam")
        if np.any(self.sigma < 0):
            raise ConfigError("disorder must be >= 0", "sigma")
        if np.any(self.tau < 0):
            raise ConfigError("delays must be >= 0", "tau")
        sig = self.sigmoids
        if isinstance(sig, SigmoidSpec):
            sig = tuple(tuple(sig for _ in range(M)) for _ in range(M))
        sig = tuple(tuple(row) for row in sig)
        if len(sig) != M or any(len(row) != M for row in sig):
            raise ConfigError(f"expected {M}x{M} sigmoid specs", "sigmoids")
        object.__setattr__(self, "sigmoids", sig)
        init = self.init if self.init is not None else InitialLaw.constant([0.0] * M)
        if len(init.mean) != M:
            raise ConfigError(f"initial law must have {M} entries", "init")
        object.__setattr__(self, "init", init)

    @classmethod
    def create(cls, *, theta=1.0, lam=0.0, jbar=0.0, sigma=0.0, tau=0.0, family="gaussian-cdf",
               gain=1.0, init: InitialLaw | None = None, M: int | None = None) -> "ModelParams":
        """Broadcasting constructor: scalars expand to every population (pair).

        The population count comes from ``M`` or from the first non-scalar
        argument.
        """
        if M is None:
            M = 1
            for name, val in (("theta", theta), ("lam", lam), ("jbar", jbar), ("sigma", sigma), ("tau", tau), ("gain", gain)):
                arr = np.asarray(val)
                if arr.ndim >= 1:
                    M = arr.shape[0]
                    break
        gains = np.asarray(gain, dtype=float)
        if gains.ndim == 0:
            gains = np.full((M, M), float(gains))
        fams = np.asarray(family, dtype=object)
        if fams.ndim == 0:
            fams = np.full((M, M), family, dtype=object)
        if gains.shape != (M, M) or fams.shape != (M, M):
            raise ConfigError(f"sigmoid gain/family must be scalar or {M}x{M}", "sigmoids")
        sig = tuple(tuple(SigmoidSpec(str(fams[a, c]), float(gains[a, c])) for c in range(M)) for a in range(M))
        return cls(theta=_vector(theta, M, "theta"), lam=lam, jbar=jbar, sigma=sigma, tau=tau, sigmoids=sig, init=init)

    @property
    def M(self) -> int:
        return self.theta.shape[0]

    @property
    def max_delay(self) -> float:
        return float(self.tau.max())

    def replace(self, **changes: Any) -> "ModelParams":
        return replace(self, **changes)

    def diagonal_disorder(self) -> bool:
        off = self.sigma - np.diag(np.diag(self.sigma))
        return bool(np.all(off == 0))

    def to_dict(self) -> dict:
        return {
            "theta": self.theta.tolist(),
            "lam": self.lam.tolist(),
            "jbar": self.jbar.tolist(),
            "sigma": self.sigma.tolist(),
            "tau": self.tau.tolist(),
            "family": [[s.family for s in row] for row in self.sigmoids],
            "gain": [[s.gain for s in row] for row in self.sigmoids],
            "init": {"kind": self.init.kind, "mean": list(self.init.mean), "var": list(self.init.var)},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        known = {"theta", "lam", "jbar", "sigma", "tau", "family", "gain", "init"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown keys {sorted(unknown)}", "model")
        init = d.get("init")
        law = None
        if init is not None:
            try:
                kind = init.get("kind", "gaussian")
                mean = init.get("mean", 0.0)
                var = init.get("var", 0.0)
            except AttributeError:
                raise ConfigError("must be a table", "model.init") from None
            M = next((np.shape(d[k])[0] for k in ("theta", "lam", "jbar", "sigma", "tau", "gain")
                      if k in d and np.ndim(d[k]) >= 1), 1)
            mean = np.broadcast_to(np.asarray(mean, dtype=float), (M,)).tolist()
            var = np.broadcast_to(np.asarray(var, dtype=float), (M,)).tolist()
            law = InitialLaw(kind, tuple(mean), tuple(var))
        kwargs = {k: d[k] for k in ("theta", "lam", "jbar", "sigma", "tau", "family", "gain") if k in d}
        try:
            return cls.create(init=law, **kwargs)
        except ConfigError as exc:
            if exc.field and not exc.field.startswith("model."):
                raise ConfigError(str(exc).split(": ", 1)[-1], "model." + exc.field) from None
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), "model") from None
