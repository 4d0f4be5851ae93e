"""Projection and reduced-solution errors, singular-value bounds and their checks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as la

from .field import CoefficientField, sty_dt_norm, sty_norm, weighted_matrix, zero_first_column
from .galerkin import assemble_rom, solve_rom
from .grid_fem import GramianSet
from .pod import CompositeProjection, ProjectionOrder, project_composite

REL_SLACK = 1e-9
# bound values at the rounding level are compared against this many ulps of ||x||
ABS_FLOOR_ULPS = 1000.0
SIGMA_FLOOR = 1e-13
COND_LIMIT = 1e12

CSV_COLUMNS = [
    "order", "q_hat", "s_hat", "rho", "rho_t", "theta", "total",
    "sigma_space_tail", "sigma_time_tail", "sigma_total", "c_rho_t",
    "effective_C", "ic_gap", "flags",
]


def tail_norm(sigma: np.ndarray, start: int) -> float:
    """``sqrt(sum_{j >= start} sigma_j^2)`` with one-based ``start``."""
    tail = np.asarray(sigma, dtype=float)[max(start - 1, 0):]
    return float(np.sqrt(np.sum(tail * tail)))


@dataclass(frozen=True)
class SigmaBound:
    order: ProjectionOrder
    q_hat: int
    s_hat: int
    space_tail: float
    time_tail: float
    sigma_full: np.ndarray
    sigma_ic: np.ndarray
    sigma_space_stage: np.ndarray

    @property
    def total(self) -> float:
        return self.space_tail + self.time_tail


def sigma_bound(fom_field: CoefficientField, order, q_hat: int, s_hat: int,
                g: GramianSet, composite: Optional[CompositeProjection] = None) -> SigmaBound:
    """Singular-value bound for the chosen projection order.

    The space tail starts at ``q_hat + 1``, the time tail at ``s_hat`` because
    one time function is spent on the initial condition.
    """
    order = ProjectionOrder(order)
    if composite is None:
        composite = project_composite(fom_field, order, q_hat, s_hat, g)
    sigma_full = la.svdvals(weighted_matrix(fom_field, g))
    if order is ProjectionOrder.SPACE_FIRST:
        space_stage = sigma_full
        sigma_ic = la.svdvals(weighted_matrix(zero_first_column(composite.intermediate), g))
    else:
        sigma_ic = la.svdvals(weighted_matrix(zero_first_column(fom_field), g))
        space_stage = la.svdvals(weighted_matrix(composite.intermediate, g))
    return SigmaBound(
        order=order,
        q_hat=q_hat,
        s_hat=s_hat,
        space_tail=tail_norm(space_stage, q_hat + 1),
        time_tail=tail_norm(sigma_ic, s_hat),
        sigma_full=sigma_full,
        sigma_ic=sigma_ic,
        sigma_space_stage=space_stage,
    )


def c_rho_t(g: GramianSet) -> float:
    """``||L_S^{-1} J_S||_F`` via ``sqrt(trace(L_S^{-1} K_S L_S^{-T}))``."""
    Y = la.solve_triangular(g.L_S, g.K_S, lower=True)
    Z = la.solve_triangular(g.L_S, Y.T, lower=True)
    return float(np.sqrt(max(np.trace(Z), 0.0)))


def c_rho_t_from_factor(g: GramianSet) -> float:
    return float(np.linalg.norm(la.solve_triangular(g.L_S, g.J_S, lower=True), "fro"))


def rho_errors(fom: CoefficientField, projected: CoefficientField, g: GramianSet):
    diff = fom - projected
    return sty_norm(diff, g), sty_dt_norm(diff, g)


def theta_and_total(fom: CoefficientField, projected: CoefficientField,
                    rom_lifted: CoefficientField, g: GramianSet):
    return sty_norm(projected - rom_lifted, g), sty_norm(fom - rom_lifted, g)


@dataclass(frozen=True)
class ErrorReport:
    order: ProjectionOrder
    q_hat: int
    s_hat: int
    rho: float
    rho_t: float
    sigma: SigmaBound
    c_rho_t: float
    fom_norm: float
    theta: Optional[float] = None
    total: Optional[float] = None
    ic_gap: float = 0.0
    rom_cond: Optional[float] = None
    flags: tuple = ()

    @property
    def effective_C(self) -> Optional[float]:
        if self.total is None:
            return None
        if self.sigma.total == 0.0:
            return np.inf
        return self.total / self.sigma.total

    @property
    def has_rom(self) -> bool:
        return self.total is not None

    def csv_row(self) -> list[str]:
        def f(v):
            return "" if v is None else format(float(v), ".17g")
        return [
            self.order.value, str(self.q_hat), str(self.s_hat),
            f(self.rho), f(self.rho_t), f(self.theta), f(self.total),
            f(self.sigma.space_tail), f(self.sigma.time_tail), f(self.sigma.total),
            f(self.c_rho_t), f(self.effective_C), f(self.ic_gap), ";".join(self.flags),
        ]


def ic_gap(g: GramianSet, ic_coeffs: np.ndarray, space_basis) -> float:
    """``||Pi_Y x0 - Pi_Yhat Pi_Y x0||_{L2}`` for the retained space basis."""
    proj = space_basis.transform @ (space_basis.V_hat.T @ (g.L_Y.T @ ic_coeffs))
    d = ic_coeffs - proj
    return float(np.sqrt(max(d @ g.M_Y @ d, 0.0)))


def build_report(fom: CoefficientField, order, q_hat: int, s_hat: int, g: GramianSet,
                 F: Optional[np.ndarray] = None, ic_coeffs: Optional[np.ndarray] = None,
                 constant: Optional[float] = None) -> ErrorReport:
    """Project, optionally solve the ROM (when ``F`` and ``ic_coeffs`` are given), and report."""
    order = ProjectionOrder(order)
    comp = project_composite(fom, order, q_hat, s_hat, g)
    bound = sigma_bound(fom, order, q_hat, s_hat, g, composite=comp)
    rho, rho_t = rho_errors(fom, comp.projected, g)
    flags = []
    if s_hat == 1:
        flags.append("degenerate_s_hat")
    if bound.total < SIGMA_FLOOR * (bound.sigma_full[0] if bound.sigma_full.size else 0.0):
        flags.append("sigma_at_rounding")
    theta = total = cond = None
    gap = 0.0
    if F is not None and ic_coeffs is not None:
        rom = solve_rom(assemble_rom(g, comp.space_basis, comp.time_basis, F, ic_coeffs), g)
        theta, total = theta_and_total(fom, comp.projected, rom.lifted, g)
        cond = rom.cond
        gap = ic_gap(g, ic_coeffs, comp.space_basis)
        if cond > COND_LIMIT:
            flags.append("ill_conditioned")
    return ErrorReport(
        order=order, q_hat=q_hat, s_hat=s_hat, rho=rho, rho_t=rho_t, sigma=bound,
        c_rho_t=c_rho_t(g) if constant is None else constant,
        fom_norm=sty_norm(fom, g), theta=theta, total=total, ic_gap=gap,
        rom_cond=cond, flags=tuple(flags),
    )


# ---------------------------------------------------------------------------
# checks

@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: Optional[bool]  # None means skipped
    value: float = np.nan
    bound: float = np.nan
    hard: bool = True
    detail: str = ""

    @property
    def failed(self) -> bool:
        return self.hard and self.passed is False


def _tolerance(bound: float, scale: float, rel_slack: float) -> float:
    return rel_slack * bound + ABS_FLOOR_ULPS * np.finfo(float).eps * scale


def verify_bounds(report: ErrorReport, rel_slack: float = REL_SLACK) -> list[CheckResult]:
    """Check ``rho <= Sigma`` and ``rho_t <= C_rho_t Sigma``; record the observed constant."""
    sig = report.sigma.total
    checks = []
    tol = _tolerance(sig, report.fom_norm, rel_slack)
    checks.append(CheckResult("rho<=sigma", bool(report.rho <= sig + tol), report.rho, sig))
    bound_t = report.c_rho_t * sig
    tol_t = _tolerance(bound_t, report.c_rho_t * report.fom_norm, rel_slack)
    checks.append(CheckResult("rho_t<=c_rho_t*sigma", bool(report.rho_t <= bound_t + tol_t),
                              report.rho_t, bound_t))
    if not report.has_rom:
        checks.append(CheckResult("effective_C", None, hard=False, detail="no ROM data"))
    else:
        eff = report.effective_C
        excluded = bool({"ill_conditioned", "sigma_at_rounding", "degenerate_s_hat"} & set(report.flags))
        checks.append(CheckResult(
            "effective_C", bool(np.isfinite(eff)) if not excluded else None,
            eff, np.nan, hard=False,
            detail="excluded from stability statistics" if excluded else ""))
    return checks


def stability_eligible(report: ErrorReport) -> bool:
    return report.has_rom and not (
        {"ill_conditioned", "sigma_at_rounding", "degenerate_s_hat"} & set(report.flags))


def effective_constant_stability(reports: Sequence[ErrorReport],
                                 max_ratio: float) -> CheckResult:
    """Spread ``max / min`` of the observed constant over eligible sweep points."""
    vals = np.array([r.effective_C for r in reports if stability_eligible(r)], dtype=float)
    if vals.size == 0:
        return CheckResult("effective_C_stability", None, hard=False, detail="no eligible points")
    ok = np.all(np.isfinite(vals)) and vals.min() > 0
    ratio = vals.max() / vals.min() if ok else np.inf
    return CheckResult("effective_C_stability", bool(ok and ratio <= max_ratio),
                       ratio, max_ratio, hard=False,
                       detail=f"n={vals.size} min={vals.min():.3e} max={vals.max():.3e}")
