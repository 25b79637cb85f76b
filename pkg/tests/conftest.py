"""Shared model instances for the test suite.

The workhorse configuration is the quadratic (Dirichlet) spectrum with 16
modes, gap index n = 1, sine nonlinearity with constant 0.1 and k = 0.2,
a unit sine forcing on mode 2, and power-law trace-class noise.  Session
fixtures share one sampled path so the expensive OU solve happens once.
"""

import numpy as np
import pytest

import rimlab as rl
from rimlab.problem import ModelProblem

SEED = 7
H = 1e-3
TOL = 1e-6
T_BACK = 16.12
T_FWD = 16.12
BURN_IN = 10.0
MAX_SHIFT = 8.0  # largest pullback / invariance shift any test requests


@pytest.fixture(scope="session")
def spectrum16():
    return rl.dirichlet_laplacian(16, 0.0)


@pytest.fixture(scope="session")
def sine_forcing(spectrum16):
    return rl.ForcingSignal.trig(
        spectrum16.size, [rl.TrigTerm(2, 1.0, 1.0, 0.0)], period=2.0 * np.pi
    )


@pytest.fixture(scope="session")
def cov16(spectrum16):
    return rl.CovarianceSpec.power_law(spectrum16.size, 0.05, 2.0)


@pytest.fixture(scope="session")
def path16(spectrum16, cov16):
    grid = rl.TimeGrid.from_times(-(T_BACK + BURN_IN + MAX_SHIFT) - 0.1, T_FWD + 1.1, H)
    return rl.sample_wiener(SEED, grid, cov16)


@pytest.fixture(scope="session")
def problem_nl(spectrum16, sine_forcing, path16):
    """Nonlinear example: per-mode sine with L=0.1, k=0.2 (mu=2, delta=0.325)."""
    cert = rl.check_gap(spectrum16, 0.1, 0.2, 1)
    return ModelProblem(
        spectrum=spectrum16,
        nonlinearity=rl.Nonlinearity.per_mode_sin(0.1),
        forcing=sine_forcing,
        path=path16,
        cert=cert,
        t_back=T_BACK,
        t_fwd=T_FWD,
        tol=TOL,
    )


@pytest.fixture(scope="session")
def problem_lin(spectrum16, sine_forcing, path16):
    """Linear example: F = 0 with the same path and sine forcing."""
    cert = rl.check_gap(spectrum16, 0.0, 0.2, 1)
    return ModelProblem(
        spectrum=spectrum16,
        nonlinearity=rl.Nonlinearity.zero(),
        forcing=sine_forcing,
        path=path16,
        cert=cert,
        t_back=8.1,
        t_fwd=8.1,
        tol=TOL,
    )


@pytest.fixture(scope="session")
def problem_lin_const(spectrum16, path16):
    """Linear example with constant forcing on mode 2 (closed-form graph)."""
    cert = rl.check_gap(spectrum16, 0.0, 0.2, 1)
    amps = np.zeros(spectrum16.size)
    amps[1] = 1.0
    return ModelProblem(
        spectrum=spectrum16,
        nonlinearity=rl.Nonlinearity.zero(),
        forcing=rl.ForcingSignal.constant(amps),
        path=path16,
        cert=cert,
        t_back=8.1,
        t_fwd=8.1,
        tol=TOL,
    )


@pytest.fixture(scope="session")
def chart_grid16(spectrum16):
    grid = np.zeros((9, spectrum16.size))
    grid[:, 0] = np.linspace(-1.0, 1.0, 9)
    return grid


def line_grid(n_modes: int, count: int, lo: float = -1.0, hi: float = 1.0, mode: int = 1):
    grid = np.zeros((count, n_modes))
    grid[:, mode - 1] = np.linspace(lo, hi, count)
    return grid
