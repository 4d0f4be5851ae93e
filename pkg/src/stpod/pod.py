"""Optimal space and time bases from weighted SVDs, with the initial-condition
modification of the time basis, and the projections they induce.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg as la

from .field import CoefficientField, weighted_matrix, zero_first_column
from .grid_fem import GramianSet


class ProjectionOrder(enum.Enum):
    SPACE_FIRST = "space-first"
    TIME_FIRST = "time-first"


def _svd(A: np.ndarray):
    try:
        V, sigma, Ut = la.svd(A, full_matrices=True, lapack_driver="gesdd")
    except la.LinAlgError:
        V, sigma, Ut = la.svd(A, full_matrices=True, lapack_driver="gesvd")
    if not np.all(np.isfinite(sigma)):
        raise la.LinAlgError("SVD produced non-finite singular values")
    return V, sigma, Ut.T


def canonicalize_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so that the largest-magnitude entry of each is positive."""
    if vectors.size == 0:
        return vectors
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


@dataclass(frozen=True)
class WeightedSVD:
    """Full SVD ``L_Y^T X L_S = V diag(sigma) U^T``."""

    V: np.ndarray
    sigma: np.ndarray
    U: np.ndarray


def weighted_svd(field: CoefficientField, g: GramianSet) -> WeightedSVD:
    V, sigma, U = _svd(weighted_matrix(field, g))
    k = sigma.size
    # flip left/right pairs together so the product is unchanged
    signs = np.sign(V[np.argmax(np.abs(V[:, :k]), axis=0), np.arange(k)])
    signs[signs == 0] = 1.0
    V = V.copy()
    U = U.copy()
    V[:, :k] *= signs
    U[:, :k] *= signs
    V[:, k:] = canonicalize_signs(V[:, k:])
    U[:, k:] = canonicalize_signs(U[:, k:])
    return WeightedSVD(V=V, sigma=sigma, U=U)


def singular_values(field: CoefficientField, g: GramianSet) -> np.ndarray:
    return la.svdvals(weighted_matrix(field, g))


@dataclass(frozen=True)
class SpaceReducedBasis:
    V_hat: np.ndarray
    transform: np.ndarray  # L_Y^{-T} V_hat, columns are reduced space functions

    @property
    def q_hat(self) -> int:
        return self.V_hat.shape[1]


@dataclass(frozen=True)
class TimeReducedBasisIC:
    U_hat: np.ndarray
    transform: np.ndarray  # L_S^{-T} U_hat, columns are nodal values of psi_hat_j
    sigma_ic: np.ndarray   # singular values of L_Y^T X0 L_S

    @property
    def s_hat(self) -> int:
        return self.U_hat.shape[1]

    @property
    def M_Shat(self) -> np.ndarray:
        return self.U_hat.T @ self.U_hat

    @property
    def U_ring(self) -> np.ndarray:
        return self.U_hat[:, 1:]


def reduce_space(field: CoefficientField, g: GramianSet, q_hat: int) -> SpaceReducedBasis:
    if not 1 <= q_hat <= g.q:
        raise ValueError(f"q_hat must lie in [1, {g.q}], got {q_hat}")
    svd = weighted_svd(field, g)
    V_hat = svd.V[:, :q_hat].copy()
    transform = la.solve_triangular(g.L_Y.T, V_hat, lower=False)
    return SpaceReducedBasis(V_hat=V_hat, transform=transform)


def reduce_time_ic(field: CoefficientField, g: GramianSet, s_hat: int) -> TimeReducedBasisIC:
    """Time basis whose first function is the t=0 hat and whose others vanish at t=0.

    The ``s_hat - 1`` trailing columns are leading right singular vectors of
    ``L_Y^T X0 L_S`` with ``X0`` the coefficient matrix with its first column
    zeroed. They are taken from the orthogonal complement of ``L_S^{-1} e_1``,
    which contains every right singular vector with a nonzero singular value,
    so that rank-deficient completions still vanish at t=0.
    """
    if not 1 <= s_hat <= g.s:
        raise ValueError(f"s_hat must lie in [1, {g.s}], got {s_hat}")
    A = weighted_matrix(zero_first_column(field), g)
    sigma_ic = la.svdvals(A)

    s = g.s
    e1 = np.zeros(s)
    e1[0] = 1.0
    w0 = la.solve_triangular(g.L_S, e1, lower=True)
    Q, _ = la.qr(w0[:, None], mode="full")
    complement = Q[:, 1:]
    if s_hat > 1:
        _, _, W = _svd(A @ complement)
        U_ring = canonicalize_signs(complement @ W[:, :s_hat - 1])
    else:
        U_ring = np.zeros((s, 0))

    first = g.L_S.T[:, :1]
    U_hat = np.hstack([first, U_ring])
    transform = la.solve_triangular(g.L_S.T, U_hat, lower=False)
    return TimeReducedBasisIC(U_hat=U_hat, transform=transform, sigma_ic=sigma_ic)


def project_space(field: CoefficientField, basis: SpaceReducedBasis,
                  g: GramianSet) -> CoefficientField:
    """Coefficients of the ``S x Y_hat`` projection, ``L_Y^{-T} V V^T L_Y^T X``."""
    if field.X.shape != (g.q, g.s) or basis.V_hat.shape[0] != g.q:
        raise ValueError("dimension mismatch between field, basis and Gramians")
    X = basis.transform @ (basis.V_hat.T @ (g.L_Y.T @ field.X))
    return field.with_matrix(X)


def project_time_ic(field: CoefficientField, basis: TimeReducedBasisIC,
                    g: GramianSet) -> CoefficientField:
    """Keep the initial column, project the rest onto ``span(psi_hat_2, ...)``."""
    if field.X.shape != (g.q, g.s) or basis.U_hat.shape[0] != g.s:
        raise ValueError("dimension mismatch between field, basis and Gramians")
    X0 = np.array(field.X)
    X0[:, 0] = 0.0
    U = basis.U_ring
    Y = la.solve_triangular(g.L_S, ((X0 @ g.L_S) @ U @ U.T).T, lower=True, trans="T").T
    Y[:, 0] = field.X[:, 0]
    return field.with_matrix(Y)


class CompositeProjection(NamedTuple):
    projected: CoefficientField
    space_basis: SpaceReducedBasis
    time_basis: TimeReducedBasisIC
    intermediate: CoefficientField


def project_composite(field: CoefficientField, order, q_hat: int, s_hat: int,
                      g: GramianSet) -> CompositeProjection:
    """Consecutive space and time projections in the requested order.

    The second basis is built from the output of the first projection.
    """
    order = ProjectionOrder(order)
    if order is ProjectionOrder.SPACE_FIRST:
        space_basis = reduce_space(field, g, q_hat)
        mid = project_space(field, space_basis, g)
        time_basis = reduce_time_ic(mid, g, s_hat)
        out = project_time_ic(mid, time_basis, g)
    else:
        time_basis = reduce_time_ic(field, g, s_hat)
        mid = project_time_ic(field, time_basis, g)
        space_basis = reduce_space(mid, g, q_hat)
        out = project_space(mid, space_basis, g)
    return CompositeProjection(out, space_basis, time_basis, mid)


def apply_composite(field: CoefficientField, order, space_basis: SpaceReducedBasis,
                    time_basis: TimeReducedBasisIC, g: GramianSet) -> CoefficientField:
    """Re-apply a composite projection with fixed bases."""
    if ProjectionOrder(order) is ProjectionOrder.SPACE_FIRST:
        return project_time_ic(project_space(field, space_basis, g), time_basis, g)
    return project_space(project_time_ic(field, time_basis, g), space_basis, g)


# ---------------------------------------------------------------------------
# serialization

def _dump(matrix: np.ndarray, header: dict, columns: list[str], first=None) -> str:
    lines = ["# " + json.dumps(header, sort_keys=True), ",".join(columns)]
    for k, row in enumerate(matrix):
        vals = [format(float(v), ".17g") for v in row]
        if first is not None:
            vals.insert(0, format(float(first[k]), ".17g"))
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def space_basis_to_csv(basis: SpaceReducedBasis, g: GramianSet) -> str:
    """Nodal values of the reduced space functions, boundary zeros included."""
    grid = g.space_grid
    vals = np.zeros((grid.n_nodes, basis.q_hat))
    vals[grid.offset:grid.offset + grid.n_active] = basis.transform
    header = {"kind": "space", "q_hat": basis.q_hat, "grid": grid.metadata()}
    cols = ["xi"] + [f"nu_hat_{i + 1}" for i in range(basis.q_hat)]
    return _dump(vals, header, cols, first=grid.nodes)


def time_basis_to_csv(basis: TimeReducedBasisIC, g: GramianSet) -> str:
    grid = g.time_grid
    header = {"kind": "time_ic", "s_hat": basis.s_hat, "grid": grid.metadata()}
    cols = ["tau"] + [f"psi_hat_{j + 1}" for j in range(basis.s_hat)]
    return _dump(basis.transform, header, cols, first=grid.nodes)


def basis_from_csv(text: str):
    """Parse a basis dump; returns ``(header, node_coordinates, values)``."""
    lines = text.splitlines()
    header = json.loads(lines[0][2:])
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[2:] if ln])
    return header, data[:, 0], data[:, 1:]
