"""Bifurcations of the one-population mean equation.

Formulas here use the unnormalised error-function convention in which the
centered sigmoid has slope ``g`` at the origin, so that the linearised mean
equation reads

    xi = -1 + a e^{-xi tau},   a = J g / sqrt(1 + g^2 v).

The package's ``centered-erf`` family has slope ``g / sqrt(2 pi)``; a
coupling ``J`` in these formulas corresponds to the model coupling
``ERF_SLOPE_SCALE * J`` (see :func:`model_coupling`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NoConvergence
from . import io

ERF_SLOPE_SCALE = math.sqrt(2.0 * math.pi)
ROOT_RESIDUAL_TOL = 1e-10


def model_coupling(J: float) -> float:
    """Model-side ``jbar`` for a coupling expressed in the unit-slope convention."""
    return ERF_SLOPE_SCALE * J


def effective_gain(J: float, g: float, v: float) -> float:
    """``a = J g / sqrt(1 + g^2 v)``."""
    if v < 0:
        raise DomainError("variance must be >= 0")
    return J * g / math.sqrt(1.0 + g * g * v)


def pitchfork_locus(g: float, gamma: float) -> float:
    """Coupling ``J* = sqrt(1/g^2 + Gamma)`` where the zero mean loses stability."""
    if not g > 0:
        raise DomainError("gain must be > 0")
    if gamma < 0:
        raise DomainError("Gamma must be >= 0")
    return math.sqrt(1.0 / (g * g) + gamma)


def _tau_omega(a: float) -> tuple[float, float]:
    w = math.sqrt((a - 1.0) * (a + 1.0))
    # arccos(1/a) written as atan2 so that |a| -> 1 stays well conditioned
    phase = math.atan2(w, math.copysign(1.0, a))
    tau = phase / w if w > 1e-8 else 1.0 - w * w / 3.0
    return tau, w


def turing_hopf_curve(J: float, g: float, v: float) -> tuple[float, float] | None:
    """Critical delay and frequency ``(tau_c, omega)``, or ``None`` when ``|a| <= 1``.

    ``tau_c = arccos(1/a) / sqrt(a^2 - 1)``, ``omega = sqrt(a^2 - 1)``; for
    ``a < 0`` the arccos value lies in ``(pi/2, pi]``.
    """
    a = effective_gain(J, g, v)
    if abs(a) <= 1.0:
        return None
    return _tau_omega(a)


def turing_hopf_from_a(a: float) -> tuple[float, float] | None:
    if abs(a) <= 1.0:
        return None
    return _tau_omega(a)


def leading_root(J: float, g: float, v: float, tau: float, *, box_height: float | None = None) -> complex:
    """Characteristic root of ``xi = -1 + a e^{-xi tau}`` with the largest real part."""
    return leading_root_a(effective_gain(J, g, v), tau, box_height=box_height)


def leading_root_a(a: float, tau: float, *, box_height: float | None = None, max_iter: int = 100) -> complex:
    """Newton's method from a 4 x 4 grid of starts in ``[-3, 1] x [0, H]``.

    ``H = 3 pi / tau`` (10 when ``tau = 0``).  Returned with ``Im >= 0``.
    """
    if tau < 0:
        raise DomainError("delay must be >= 0")
    if tau == 0:
        return complex(a - 1.0, 0.0)
    H = 3 * math.pi / tau if box_height is None else box_height
    starts = [complex(x, y) for x in np.linspace(-3.0, 1.0, 4) for y in np.linspace(0.0, H, 4)]
    found = []
    diag = []
    for z in starts:
        # starts far from any root may overflow; they are discarded
        with np.errstate(all="ignore"):
            z = _newton_char(z, a, tau, max_iter)
            res = abs(z + 1.0 - a * np.exp(-z * tau)) if np.isfinite(z) else math.inf
        res = res if np.isfinite(res) else math.inf
        diag.append((starts[len(diag)], res))
        if res <= ROOT_RESIDUAL_TOL:
            found.append(complex(z.real, abs(z.imag)))
    if not found:
        raise NoConvergence(f"no characteristic root converged; (start, residual): {diag}")
    return max(found, key=lambda z: (z.real, -z.imag))


def _newton_char(z: complex, a: float, tau: float, max_iter: int) -> complex:
    for _ in range(max_iter):
        e = a * np.exp(-z * tau)
        dF = 1.0 + tau * e
        if dF == 0 or not np.isfinite(dF):
            break
        step = (z + 1.0 - e) / dF
        z = z - step
        if abs(step) < 1e-15 * max(1.0, abs(z)):
            break
    return complex(z)


@dataclass(frozen=True)
class BifurcationCurve:
    """``kind`` is ``"pitchfork"`` (points ``(Gamma, J*)``) or ``"turing-hopf"`` (points ``(param, tau_c, omega)``)."""

    kind: str
    param: str
    points: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        if self.kind not in ("pitchfork", "turing-hopf"):
            raise DomainError(f"unknown curve kind {self.kind!r}")
        xs = [p[0] for p in self.points]
        if xs != sorted(xs):
            raise DomainError("curve points must be sorted by the swept parameter")
        if self.kind == "turing-hopf" and any(p[1] <= 0 or p[2] <= 0 for p in self.points):
            raise DomainError("tau_c and omega must be positive")

    def as_array(self) -> np.ndarray:
        return np.array(self.points, dtype=float).reshape(len(self.points), -1)

    def to_csv(self, path) -> None:
        arr = self.as_array()
        header = [self.param, "J_star"] if self.kind == "pitchfork" else [self.param, "tau_c", "omega"]
        io.write_csv(path, header, [arr[:, k] for k in range(len(header))])


def turing_hopf_sweep(J: float, g: float, lams) -> BifurcationCurve:
    """Turing-Hopf curve over noise levels ``lam`` (variance ``lam^2 / 2``); subcritical points are skipped."""
    pts = []
    for lam in sorted(float(x) for x in lams):
        r = turing_hopf_curve(J, g, 0.5 * lam * lam)
        if r is not None:
            pts.append((lam, r[0], r[1]))
    return BifurcationCurve("turing-hopf", "lambda", tuple(pts))


def pitchfork_sweep(g: float, gammas) -> BifurcationCurve:
    return BifurcationCurve("pitchfork", "Gamma", tuple((gm, pitchfork_locus(g, gm)) for gm in sorted(float(x) for x in gammas)))


@dataclass(frozen=True)
class OscillationReport:
    sustained: bool
    amplitude_early: float
    amplitude_late: float
    frequency: float


def mean_oscillation(times: np.ndarray, m: np.ndarray, *, transient: float, floor: float = 1e-6) -> OscillationReport:
    """Compare the peak-to-peak amplitude of ``m`` over the two halves after ``transient``.

    Sustained when the late amplitude exceeds ``floor`` and at least half the
    early one.  ``frequency`` is the angular frequency of the Hann-windowed
    periodogram peak over the late half.
    """
    keep = times >= transient
    t, x = times[keep], m[keep]
    if t.size < 8:
        raise DomainError("not enough samples after the transient")
    half = t.size // 2
    early, late = x[:half], x[half:]
    amp_e = float(early.max() - early.min())
    amp_l = float(late.max() - late.min())
    dt = float(t[1] - t[0])
    y = (late - late.mean()) * np.hanning(late.size)
    power = np.abs(np.fft.rfft(y)) ** 2
    freqs = 2 * math.pi * np.fft.rfftfreq(late.size, dt)
    k = int(np.argmax(power[1:])) + 1 if power.size > 1 else 0
    return OscillationReport(amp_l > floor and amp_l >= 0.5 * amp_e, amp_e, amp_l, float(freqs[k]))
