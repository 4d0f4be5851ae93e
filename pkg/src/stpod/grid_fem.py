"""Uniform 1D grids, P1 finite-element Gramians and composite Gauss rules.

Time grids keep every nodal hat function (``ALL_NODES``); space grids drop the
two boundary hats (``ZERO_DIRICHLET``) so that the spatial Gramians act on
interior coefficients only.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as la


class BoundaryMode(enum.Enum):
    ALL_NODES = "all"
    ZERO_DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class Grid1D:
    """Equidistant node set on ``[a, b]``.

    Parameters
    ----------
    a, b
        Interval endpoints.
    n_nodes
        Number of nodes including both endpoints.
    boundary_mode
        Which hat functions are exposed as basis functions.
    """

    a: float
    b: float
    n_nodes: int
    boundary_mode: BoundaryMode = BoundaryMode.ALL_NODES

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.n_nodes - 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        return self.a + np.arange(self.n_nodes) * self.h

    @property
    def n_cells(self) -> int:
        return self.n_nodes - 1

    @property
    def n_active(self) -> int:
        if self.boundary_mode is BoundaryMode.ZERO_DIRICHLET:
            return self.n_nodes - 2
        return self.n_nodes

    @property
    def offset(self) -> int:
        """Node index of the first active basis function."""
        return 1 if self.boundary_mode is BoundaryMode.ZERO_DIRICHLET else 0

    @property
    def active_nodes(self) -> np.ndarray:
        return self.nodes[self.offset:self.offset + self.n_active]

    def metadata(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "n_nodes": self.n_nodes,
            "boundary_mode": self.boundary_mode.value,
        }

    @classmethod
    def from_metadata(cls, meta: dict) -> "Grid1D":
        return build_uniform_grid(float(meta["a"]), float(meta["b"]),
                                  int(meta["n_nodes"]),
                                  BoundaryMode(meta["boundary_mode"]))


def build_uniform_grid(a: float, b: float, n_nodes: int,
                       boundary_mode: BoundaryMode = BoundaryMode.ALL_NODES) -> Grid1D:
    if int(n_nodes) != n_nodes or n_nodes < 2:
        raise ValueError(f"n_nodes must be an integer >= 2, got {n_nodes!r}")
    if not b > a:
        raise ValueError(f"need b > a, got a={a}, b={b}")
    mode = BoundaryMode(boundary_mode)
    if mode is BoundaryMode.ZERO_DIRICHLET and n_nodes < 3:
        raise ValueError("a Dirichlet grid needs at least one interior node")
    return Grid1D(float(a), float(b), int(n_nodes), mode)


# ---------------------------------------------------------------------------
# element matrices

def p1_mass(grid: Grid1D) -> np.ndarray:
    """Full nodal P1 mass matrix, ``n_nodes x n_nodes``."""
    n, h = grid.n_nodes, grid.h
    diag = np.full(n, 2.0 * h / 3.0)
    diag[[0, -1]] = h / 3.0
    off = np.full(n - 1, h / 6.0)
    return np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)


def p1_stiffness(grid: Grid1D) -> np.ndarray:
    """Full nodal P1 stiffness matrix ``[(phi_i', phi_j')]``."""
    n, h = grid.n_nodes, grid.h
    diag = np.full(n, 2.0 / h)
    diag[[0, -1]] = 1.0 / h
    off = np.full(n - 1, -1.0 / h)
    return np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)


def p1_advection(grid: Grid1D) -> np.ndarray:
    """``D[j, l] = int phi_l' phi_j``; row index is the test function."""
    n = grid.n_nodes
    D = 0.5 * (np.eye(n, k=1) - np.eye(n, k=-1))
    D[0, 0] = -0.5
    D[-1, -1] = 0.5
    return D


def _restrict(A: np.ndarray, grid: Grid1D) -> np.ndarray:
    sl = slice(grid.offset, grid.offset + grid.n_active)
    return A[sl, sl].copy()


def cholesky_lower(M: np.ndarray) -> np.ndarray:
    try:
        return la.cholesky(M, lower=True)
    except la.LinAlgError as exc:
        raise la.LinAlgError(f"Gramian is not SPD, assembly is broken: {exc}") from exc


def psd_factor(K: np.ndarray, rtol: float = 1e-13) -> np.ndarray:
    """Eigen square root ``J`` with ``J @ J.T == K`` for a symmetric PSD ``K``.

    Eigenvalues below ``rtol * lambda_max`` are dropped, so ``J`` has as many
    columns as the numerical rank of ``K``.
    """
    lam, Q = la.eigh(K)
    lam_max = lam.max() if lam.size else 0.0
    keep = lam > rtol * lam_max
    return Q[:, keep] * np.sqrt(lam[keep])


@dataclass(frozen=True)
class GramianSet:
    time_grid: Grid1D
    space_grid: Grid1D
    mu: float
    M_S: np.ndarray
    K_S: np.ndarray
    D_S: np.ndarray
    M_Y: np.ndarray
    A_Y: np.ndarray
    L_S: np.ndarray
    L_Y: np.ndarray
    J_S: np.ndarray

    @property
    def s(self) -> int:
        return self.M_S.shape[0]

    @property
    def q(self) -> int:
        return self.M_Y.shape[0]


def assemble_gramians(time_grid: Grid1D, space_grid: Grid1D, mu: float) -> GramianSet:
    if time_grid.boundary_mode is not BoundaryMode.ALL_NODES:
        raise ValueError("time grid must expose all nodes")
    if space_grid.boundary_mode is not BoundaryMode.ZERO_DIRICHLET:
        raise ValueError("space grid must use zero Dirichlet boundary mode")
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")

    M_S = p1_mass(time_grid)
    K_S = p1_stiffness(time_grid)
    D_S = p1_advection(time_grid)
    M_Y = _restrict(p1_mass(space_grid), space_grid)
    A_Y = mu * _restrict(p1_stiffness(space_grid), space_grid)
    return GramianSet(
        time_grid=time_grid,
        space_grid=space_grid,
        mu=float(mu),
        M_S=M_S,
        K_S=K_S,
        D_S=D_S,
        M_Y=M_Y,
        A_Y=A_Y,
        L_S=cholesky_lower(M_S),
        L_Y=cholesky_lower(M_Y),
        J_S=psd_factor(K_S),
    )


# ---------------------------------------------------------------------------
# basis evaluation

def _check_points(grid: Grid1D, x: np.ndarray) -> None:
    tol = 1e-12 * max(1.0, abs(grid.a), abs(grid.b))
    if np.any(x < grid.a - tol) or np.any(x > grid.b + tol):
        raise ValueError(f"points outside [{grid.a}, {grid.b}]")


def basis_matrix(grid: Grid1D, points) -> np.ndarray:
    """Values of all active hat functions at ``points``; shape ``(len(points), n_active)``."""
    x = np.atleast_1d(np.asarray(points, dtype=float))
    _check_points(grid, x)
    t = (np.clip(x, grid.a, grid.b) - grid.a) / grid.h
    cell = np.minimum(np.floor(t).astype(int), grid.n_cells - 1)
    lam = t - cell
    B = np.zeros((x.size, grid.n_nodes))
    rows = np.arange(x.size)
    B[rows, cell] = 1.0 - lam
    B[rows, cell + 1] += lam
    return B[:, grid.offset:grid.offset + grid.n_active]


def eval_basis(grid: Grid1D, basis_index: int, point: float) -> float:
    """Value of active hat function ``basis_index`` (zero based) at ``point``."""
    if not 0 <= basis_index < grid.n_active:
        raise IndexError(f"basis index {basis_index} out of range [0, {grid.n_active})")
    return float(basis_matrix(grid, [point])[0, basis_index])


# ---------------------------------------------------------------------------
# composite Gauss-Legendre rules

def composite_gauss(grid: Grid1D, order: int, subdivide: int = 1):
    """Composite Gauss-Legendre rule over every cell of ``grid``.

    Each cell is split into ``subdivide`` equal pieces carrying ``order`` points.

    Returns
    -------
    points, weights : ndarray
        Flattened quadrature nodes and weights, cell by cell.
    """
    if order < 1 or subdivide < 1:
        raise ValueError("order and subdivide must be >= 1")
    xg, wg = np.polynomial.legendre.leggauss(order)
    n_sub = grid.n_cells * subdivide
    hs = grid.h / subdivide
    k = np.arange(n_sub)
    # left end per sub-cell, computed from the cell index to keep nodes exact
    left = grid.a + (k // subdivide) * grid.h + (k % subdivide) * hs
    pts = left[:, None] + 0.5 * hs * (xg[None, :] + 1.0)
    wts = np.broadcast_to(0.5 * hs * wg, pts.shape)
    return pts.ravel(), wts.ravel().copy()
