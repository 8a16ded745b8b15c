from __future__ import annotations

import math

import numpy as np
import pytest

from meanfield.model import InitialLaw, ModelParams

ROOT_2PI = math.sqrt(2 * math.pi)


def wilson_cowan(sigma: float = 1.0, lam: float = 0.5) -> ModelParams:
    return ModelParams.create(theta=[1.0, 1.0], lam=lam, jbar=[[15.0, -12.0], [16.0, -5.0]], sigma=sigma,
                              family="gaussian-cdf", gain=3.0, init=InitialLaw.gaussian([0.0, 0.0], [0.5, 0.5]))


@pytest.fixture
def wc_params() -> ModelParams:
    return wilson_cowan()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def accept():
    """Record the verdict of an acceptance criterion; the summary prints one line per criterion."""

    def record(number: int, ok: bool, detail: str) -> None:
        ACCEPTANCE[number] = (bool(ok), detail)
        print(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
