"""Space-time Galerkin full-order and reduced-order solves for
``x_t - mu x_xixi = f`` with homogeneous Dirichlet data.

Both systems share the tensor layout ``(D_S kron M_Y + M_S kron A_Y) vec(X)``
with the first time block of test rows replaced by the initial condition.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np
import scipy.linalg as la
from scipy.linalg import lapack

from .field import CoefficientField
from .grid_fem import GramianSet, Grid1D, basis_matrix, composite_gauss
from .pod import SpaceReducedBasis, TimeReducedBasisIC

log = logging.getLogger(__name__)


class SingularSystemError(la.LinAlgError):
    pass


@dataclass(frozen=True)
class ManufacturedSolution:
    """Exact solution with hand-derived partials, all vectorized in ``(tau, xi)``."""

    value: Callable
    d_tau: Callable
    d_xixi: Callable


@dataclass(frozen=True)
class ProblemSpec:
    mu: float
    forcing: Callable
    initial: Callable
    T: float = 1.0
    space_interval: tuple = (0.0, 1.0)
    exact_solution: Optional[Callable] = None
    name: str = "custom"
    params: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        a, b = self.space_interval
        if not b > a:
            raise ValueError("empty spatial interval")

    def cache_key(self) -> dict:
        return {"name": self.name, "mu": self.mu, "T": self.T,
                "space_interval": list(self.space_interval), **self.params}


def manufactured_forcing(exact: ManufacturedSolution, mu: float) -> Callable:
    def forcing(tau, xi):
        return exact.d_tau(tau, xi) - mu * exact.d_xixi(tau, xi)
    return forcing


# ---------------------------------------------------------------------------
# load vectors

def _weighted_basis(grid: Grid1D, order: int, subdivide: int):
    pts, wts = composite_gauss(grid, order, subdivide)
    return pts, basis_matrix(grid, pts) * wts[:, None]


def assemble_rhs(problem: ProblemSpec, time_grid: Grid1D, space_grid: Grid1D,
                 quad_order: int = 3, subdivide: int = 1) -> np.ndarray:
    """``F[i, j] = int int f nu_i psi_j`` by tensor-product composite Gauss rules."""
    if quad_order < 2:
        raise ValueError("quad_order must be >= 2")
    tau, Wt = _weighted_basis(time_grid, quad_order, subdivide)
    xi, Wx = _weighted_basis(space_grid, quad_order, subdivide)
    vals = np.asarray(problem.forcing(tau[None, :], xi[:, None]), dtype=float)
    vals = np.broadcast_to(vals, (xi.size, tau.size))
    return Wx.T @ vals @ Wt


def project_initial(initial: Callable, space_grid: Grid1D, g: GramianSet,
                    quad_order: int = 3, subdivide: int = 1) -> np.ndarray:
    """L2 projection coefficients of ``initial`` onto the interior hats."""
    xi, Wx = _weighted_basis(space_grid, quad_order, subdivide)
    vals = np.broadcast_to(np.asarray(initial(xi), dtype=float), xi.shape)
    return la.cho_solve((g.L_Y, True), Wx.T @ vals)


# ---------------------------------------------------------------------------
# linear algebra of the constrained space-time system

def constrained_operator(D: np.ndarray, M_t: np.ndarray, M_x: np.ndarray,
                         A_x: np.ndarray) -> np.ndarray:
    """Dense ``(D kron M_x + M_t kron A_x)`` with the first block replaced by identity rows."""
    n = M_x.shape[0]
    K = np.kron(D, M_x) + np.kron(M_t, A_x)
    K[:n, :] = 0.0
    K[:n, :n] = np.eye(n)
    return K


def condition_estimate(lu_piv, anorm: float) -> float:
    lu, _ = lu_piv
    rcond, info = lapack.dgecon(lu, anorm, norm="1")
    if info != 0 or rcond <= 0.0:
        return np.inf
    return 1.0 / rcond


def solve_dense(D, M_t, M_x, A_x, F, x0):
    """Solve the constrained system by dense LU; returns ``(X, cond_1)``."""
    n, m = F.shape
    K = constrained_operator(D, M_t, M_x, A_x)
    rhs = np.array(F, dtype=float)
    rhs[:, 0] = x0
    with warnings.catch_warnings():
        # singularity is detected below from the condition estimate
        warnings.simplefilter("ignore", la.LinAlgWarning)
        lu_piv = la.lu_factor(K, check_finite=False)
    cond = condition_estimate(lu_piv, np.linalg.norm(K, 1))
    if not np.isfinite(cond):
        raise SingularSystemError(f"space-time system is singular (cond_1=inf, size={n * m})")
    x = la.lu_solve(lu_piv, rhs.ravel(order="F"))
    return x.reshape((n, m), order="F"), cond


def solve_kron(g: GramianSet, F: np.ndarray, x0: np.ndarray) -> np.ndarray:
    """Structured solve for the nodal P1 system.

    The generalized eigenproblem ``A_Y w = lambda M_Y w`` decouples space, leaving
    one tridiagonal ``s x s`` system ``D_S + lambda M_S`` per mode, each solved by
    banded LU with partial pivoting.
    """
    lam, W = la.eigh(g.A_Y, g.M_Y)  # W^T M_Y W = I
    G = W.T @ F                     # test side: W^T (M_Y X D^T + A_Y X M_S) = Z D^T + diag(lam) Z M_S
    z0 = W.T @ (g.M_Y @ x0)         # X = W Z  =>  Z = W^T M_Y X
    s = g.s
    D, M = g.D_S, g.M_S
    Z = np.empty_like(G)
    ab = np.zeros((3, s))
    for k, lk in enumerate(lam):
        T = D + lk * M
        ab[0, 1:] = np.diag(T, 1)
        ab[1, :] = np.diag(T)
        ab[2, :-1] = np.diag(T, -1)
        # initial-condition row: z[0] = z0[k]
        ab[0, 1] = 0.0
        ab[1, 0] = 1.0
        rhs = G[k].copy()
        rhs[0] = z0[k]
        Z[k] = la.solve_banded((1, 1), ab, rhs, check_finite=False)
    return W @ Z


def galerkin_residual(g: GramianSet, X: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Residual ``M_Y X D_S^T + A_Y X M_S - F`` of all test rows."""
    return g.M_Y @ X @ g.D_S.T + g.A_Y @ X @ g.M_S - F


def solve_fom(problem: ProblemSpec, g: GramianSet, quad_order: int = 3,
              subdivide: int = 1, method: str = "kron") -> CoefficientField:
    F = assemble_rhs(problem, g.time_grid, g.space_grid, quad_order, subdivide)
    c0 = project_initial(problem.initial, g.space_grid, g, quad_order, subdivide)
    if method == "dense":
        X, cond = solve_dense(g.D_S, g.M_S, g.M_Y, g.A_Y, F, c0)
        log.info("fom_solve method=dense size=%d cond1=%.6e", F.size, cond)
    elif method == "kron":
        X = solve_kron(g, F, c0)
    else:
        raise ValueError(f"unknown solver method {method!r}")
    X[:, 0] = c0
    if not np.all(np.isfinite(X)):
        raise SingularSystemError("full-order solve produced non-finite values")
    res = galerkin_residual(g, X, F)[:, 1:]
    log.info("fom_solve method=%s q=%d s=%d residual_max=%.6e rhs_max=%.6e",
             method, g.q, g.s, np.abs(res).max(initial=0.0), np.abs(F).max(initial=0.0))
    return CoefficientField(X, g.time_grid, g.space_grid)


# ---------------------------------------------------------------------------
# reduced-order model

@dataclass(frozen=True)
class ReducedSystem:
    M_S: np.ndarray
    D_S: np.ndarray
    M_Y: np.ndarray
    A_Y: np.ndarray
    F: np.ndarray
    x0: np.ndarray
    T_Y: np.ndarray
    T_S: np.ndarray


def assemble_rom(g: GramianSet, space_basis: SpaceReducedBasis,
                 time_basis: TimeReducedBasisIC, F: np.ndarray,
                 ic_coeffs: np.ndarray) -> ReducedSystem:
    T_Y, T_S = space_basis.transform, time_basis.transform
    if T_Y.shape[0] != g.q or T_S.shape[0] != g.s or F.shape != (g.q, g.s):
        raise ValueError("dimension mismatch in reduced assembly")
    return ReducedSystem(
        M_S=T_S.T @ g.M_S @ T_S,
        D_S=T_S.T @ g.D_S @ T_S,
        M_Y=T_Y.T @ g.M_Y @ T_Y,
        A_Y=T_Y.T @ g.A_Y @ T_Y,
        F=T_Y.T @ F @ T_S,
        x0=space_basis.V_hat.T @ (g.L_Y.T @ ic_coeffs),
        T_Y=T_Y,
        T_S=T_S,
    )


@dataclass(frozen=True)
class RomSolution:
    X_hat: np.ndarray
    lifted: CoefficientField
    cond: float


def lift(sys: ReducedSystem, X_hat: np.ndarray) -> np.ndarray:
    return sys.T_Y @ X_hat @ sys.T_S.T


def solve_rom(sys: ReducedSystem, g: GramianSet) -> RomSolution:
    """Dense solve of the reduced constrained system, lifted back to nodal coefficients."""
    X_hat, cond = solve_dense(sys.D_S, sys.M_S, sys.M_Y, sys.A_Y, sys.F, sys.x0)
    log.info("rom_solve q_hat=%d s_hat=%d cond1=%.6e",
             sys.T_Y.shape[1], sys.T_S.shape[1], cond)
    lifted = CoefficientField(lift(sys, X_hat), g.time_grid, g.space_grid)
    return RomSolution(X_hat=X_hat, lifted=lifted, cond=cond)
