"""The two heat-equation test cases on ``[0, 1] x [0, 1]``."""

from __future__ import annotations

import numpy as np

from .galerkin import ManufacturedSolution, ProblemSpec, manufactured_forcing

EXAMPLE1_MU = 0.4
EXAMPLE2_MU = 1.0
RING_CENTER = (0.5, 0.5)
RING_OUTER_SQ = 1.0 / 5.0
RING_INNER_SQ = 1.0 / 8.0
RING_AMPLITUDE = 5.0


def _ex1_value(tau, xi):
    return 10.0 * np.sin(np.pi * xi - 2 * tau) * np.cos(np.pi * tau - 3 * xi) * xi * (xi - 1) ** 3


def _ex1_d_tau(tau, xi):
    a = np.pi * xi - 2 * tau
    b = np.pi * tau - 3 * xi
    P = xi * (xi - 1) ** 3
    return 10.0 * P * (-2 * np.cos(a) * np.cos(b) - np.pi * np.sin(a) * np.sin(b))


def _ex1_d_xixi(tau, xi):
    a = np.pi * xi - 2 * tau
    b = np.pi * tau - 3 * xi
    S, dS, ddS = np.sin(a), np.pi * np.cos(a), -np.pi ** 2 * np.sin(a)
    C, dC, ddC = np.cos(b), 3 * np.sin(b), -9 * np.cos(b)
    P = xi * (xi - 1) ** 3
    dP = (xi - 1) ** 3 + 3 * xi * (xi - 1) ** 2
    ddP = 6 * (xi - 1) ** 2 + 6 * xi * (xi - 1)
    return 10.0 * (ddS * C * P + S * ddC * P + S * C * ddP
                   + 2 * (dS * dC * P + dS * C * dP + S * dC * dP))


EXAMPLE1_SOLUTION = ManufacturedSolution(_ex1_value, _ex1_d_tau, _ex1_d_xixi)


def example1(mu: float = EXAMPLE1_MU) -> ProblemSpec:
    """Manufactured smooth solution, forcing derived from the exact partials."""
    return ProblemSpec(
        mu=mu,
        forcing=manufactured_forcing(EXAMPLE1_SOLUTION, mu),
        initial=lambda xi: _ex1_value(0.0, xi),
        exact_solution=_ex1_value,
        name="example1",
    )


def ring_indicator(tau, xi):
    r2 = (np.asarray(tau, float) - RING_CENTER[0]) ** 2 + (np.asarray(xi, float) - RING_CENTER[1]) ** 2
    return np.where((r2 < RING_OUTER_SQ) & (r2 >= RING_INNER_SQ), 1.0, 0.0)


def ring_forcing(tau, xi):
    return RING_AMPLITUDE * ring_indicator(tau, xi)


def example2(mu: float = EXAMPLE2_MU) -> ProblemSpec:
    """Zero initial state driven by a constant source on a space-time ring."""
    return ProblemSpec(
        mu=mu,
        forcing=ring_forcing,
        initial=lambda xi: np.zeros_like(xi),
        name="example2",
    )


PROBLEMS = {1: example1, 2: example2}
