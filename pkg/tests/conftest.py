"""Shared fixtures and independent quadrature oracles for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from stpod.field import CoefficientField
from stpod.galerkin import assemble_rhs, project_initial, solve_fom
from stpod.grid_fem import BoundaryMode, assemble_gramians, build_uniform_grid
from stpod.problems import example1, example2


def make_gramians(n_time: int, n_space: int, mu: float = 1.0, T: float = 1.0,
                  interval=(0.0, 1.0)):
    tg = build_uniform_grid(0.0, T, n_time, BoundaryMode.ALL_NODES)
    sg = build_uniform_grid(interval[0], interval[1], n_space, BoundaryMode.ZERO_DIRICHLET)
    return assemble_gramians(tg, sg, mu)


def random_field(rng: np.random.Generator, g) -> CoefficientField:
    return CoefficientField(rng.standard_normal((g.q, g.s)), g.time_grid, g.space_grid)


# ---------------------------------------------------------------------------
# oracles written from scratch: hat values/slopes by cell lookup, Gauss-Legendre per cell

def _gauss(grid, order=4):
    xg, wg = np.polynomial.legendre.leggauss(order)
    edges = grid.a + grid.h * np.arange(grid.n_nodes)
    pts = (edges[:-1, None] + 0.5 * grid.h * (xg + 1.0)).ravel()
    wts = np.tile(0.5 * grid.h * wg, grid.n_cells)
    return pts, wts


def _hats(grid, pts, derivative=False):
    """All nodal hats (boundary included) at ``pts``, restricted to active ones."""
    out = np.zeros((pts.size, grid.n_nodes))
    for p, x in enumerate(pts):
        k = min(int((x - grid.a) // grid.h), grid.n_cells - 1)
        lam = (x - (grid.a + k * grid.h)) / grid.h
        if derivative:
            out[p, k], out[p, k + 1] = -1.0 / grid.h, 1.0 / grid.h
        else:
            out[p, k], out[p, k + 1] = 1.0 - lam, lam
    return out[:, grid.offset:grid.offset + grid.n_active]


def quad_l2_sq(field: CoefficientField, d_tau: bool = False) -> float:
    """``int int x^2`` (or ``x_t^2``) by tensor Gauss quadrature, exact for P1 x P1."""
    xi, wx = _gauss(field.space_grid)
    tau, wt = _gauss(field.time_grid)
    V = _hats(field.space_grid, xi) @ field.X @ _hats(field.time_grid, tau, d_tau).T
    return float(wx @ (V * V) @ wt)


def quad_l2_error_sq(field: CoefficientField, exact, order: int = 5) -> float:
    xi, wx = _gauss(field.space_grid, order)
    tau, wt = _gauss(field.time_grid, order)
    V = _hats(field.space_grid, xi) @ field.X @ _hats(field.time_grid, tau).T
    E = V - exact(tau[None, :], xi[:, None])
    return float(wx @ (E * E) @ wt)


# ---------------------------------------------------------------------------
# expensive reference solves, shared across modules

class Solved:
    def __init__(self, problem, g, fom, F, c0):
        self.problem, self.g, self.fom, self.F, self.c0 = problem, g, fom, F, c0


def _solve(problem, n, subdivide):
    g = make_gramians(n, n, problem.mu)
    fom = solve_fom(problem, g, 3, subdivide)
    F = assemble_rhs(problem, g.time_grid, g.space_grid, 3, subdivide)
    c0 = project_initial(problem.initial, g.space_grid, g, 3, subdivide)
    return Solved(problem, g, fom, F, c0)


@pytest.fixture(scope="session")
def ex1():
    return _solve(example1(), 101, 1)


@pytest.fixture(scope="session")
def ex2():
    return _solve(example2(), 101, 4)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
