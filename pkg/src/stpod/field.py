"""Space-time P1 x P1 fields stored as coefficient matrices.

A field ``x(tau, xi) = sum_ij X[i, j] nu_i(xi) psi_j(tau)`` is held by its
``q x s`` matrix ``X``: rows index interior space hats, columns index time
hats. ``vec`` stacks columns, so ``vec(X)`` is time-major in blocks of ``q``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid_fem import Grid1D, GramianSet, basis_matrix


@dataclass(frozen=True)
class CoefficientField:
    X: np.ndarray
    time_grid: Grid1D
    space_grid: Grid1D

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        expected = (self.space_grid.n_active, self.time_grid.n_active)
        if X.shape != expected:
            raise ValueError(f"coefficient matrix has shape {X.shape}, grids need {expected}")
        X.setflags(write=False)
        object.__setattr__(self, "X", X)

    @property
    def q(self) -> int:
        return self.X.shape[0]

    @property
    def s(self) -> int:
        return self.X.shape[1]

    def with_matrix(self, X) -> "CoefficientField":
        return CoefficientField(X, self.time_grid, self.space_grid)

    def __sub__(self, other: "CoefficientField") -> "CoefficientField":
        _check_same_grids(self, other)
        return self.with_matrix(self.X - other.X)

    def __add__(self, other: "CoefficientField") -> "CoefficientField":
        _check_same_grids(self, other)
        return self.with_matrix(self.X + other.X)

    def vec(self) -> np.ndarray:
        return self.X.ravel(order="F")


def _check_same_grids(a: CoefficientField, b: CoefficientField) -> None:
    if a.X.shape != b.X.shape or a.time_grid != b.time_grid or a.space_grid != b.space_grid:
        raise ValueError("fields live on different grids")


def _check_gramians(field: CoefficientField, g: GramianSet) -> None:
    if field.X.shape != (g.q, g.s):
        raise ValueError(f"field shape {field.X.shape} does not match Gramians ({g.q}, {g.s})")


def weighted_matrix(field: CoefficientField, g: GramianSet) -> np.ndarray:
    """``L_Y^T X L_S``, whose Frobenius norm is the space-time L2 norm."""
    _check_gramians(field, g)
    return g.L_Y.T @ field.X @ g.L_S


def sty_norm(field: CoefficientField, g: GramianSet) -> float:
    return float(np.linalg.norm(weighted_matrix(field, g), "fro"))


def sty_inner(a: CoefficientField, b: CoefficientField, g: GramianSet) -> float:
    return float(np.sum(weighted_matrix(a, g) * weighted_matrix(b, g)))


def sty_dt_norm(field: CoefficientField, g: GramianSet) -> float:
    """L2 norm of the time derivative, ``||L_Y^T X J_S||_F``."""
    _check_gramians(field, g)
    return float(np.linalg.norm(g.L_Y.T @ field.X @ g.J_S, "fro"))


def evaluate(field: CoefficientField, tau, xi):
    """Point values of the field; ``tau`` and ``xi`` broadcast together."""
    tau_a, xi_a = np.broadcast_arrays(np.asarray(tau, float), np.asarray(xi, float))
    Bt = basis_matrix(field.time_grid, tau_a.ravel())
    Bx = basis_matrix(field.space_grid, xi_a.ravel())
    vals = np.einsum("pi,ij,pj->p", Bx, field.X, Bt)
    if tau_a.ndim == 0:
        return float(vals[0])
    return vals.reshape(tau_a.shape)


def sample_grid(field: CoefficientField, xi_points, tau_points) -> np.ndarray:
    """Tensor-product samples ``V[p, r] = x(tau_r, xi_p)``."""
    Bx = basis_matrix(field.space_grid, xi_points)
    Bt = basis_matrix(field.time_grid, tau_points)
    return Bx @ field.X @ Bt.T


def zero_first_column(field: CoefficientField) -> CoefficientField:
    X = np.array(field.X)
    X[:, 0] = 0.0
    return field.with_matrix(X)


# ---------------------------------------------------------------------------
# CSV round trip (17 significant digits, so float64 values survive exactly)

def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _grid_header(prefix: str, grid: Grid1D) -> list[str]:
    meta = grid.metadata()
    return [f"{prefix}_{k}={_fmt(v) if isinstance(v, float) else v}" for k, v in meta.items()]


def field_to_csv(field: CoefficientField) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow([f"q={field.q}", f"s={field.s}",
                *_grid_header("time", field.time_grid),
                *_grid_header("space", field.space_grid)])
    for row in field.X:
        w.writerow([_fmt(v) for v in row])
    return out.getvalue()


def field_from_csv(text: str) -> CoefficientField:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty field CSV")
    header = dict(item.split("=", 1) for item in rows[0])
    grids = {}
    for prefix in ("time", "space"):
        grids[prefix] = Grid1D.from_metadata(
            {k: header[f"{prefix}_{k}"] for k in ("a", "b", "n_nodes", "boundary_mode")})
    q, s = int(header["q"]), int(header["s"])
    X = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float).reshape(q, s)
    return CoefficientField(X, grids["time"], grids["space"])


def save_field(field: CoefficientField, path) -> None:
    Path(path).write_text(field_to_csv(field))


def load_field(path) -> CoefficientField:
    return field_from_csv(Path(path).read_text())
